#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "patchstrike/attack.hpp"
#include "patchstrike/dataset.hpp"
#include "patchstrike/errors.hpp"
#include "patchstrike/eval.hpp"
#include "patchstrike/image_io.hpp"
#include "patchstrike/model_io.hpp"
#include "patchstrike/patch_analysis.hpp"
#include "patchstrike/presets.hpp"
#include "patchstrike/train.hpp"

namespace patchstrike {

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

struct ZooEntry {
  std::string arch;
  std::uint64_t seed = 0;
  bool adversarial = false;
};

/// Fully resolved invocation of one CLI command. Built by parse_config from
/// flags layered over an optional flat key=value config file; the manifest
/// written into every output directory is itself such a file, so any run
/// can be replayed with --config manifest.txt.
struct RunConfig {
  std::string command;  // train-zoo | attack | sweep | patchmap | report
  std::string preset;
  AttackConfig attack;
  std::string model_dir, dataset_dir, out_dir;
  std::vector<ZooEntry> zoo;
  std::vector<std::string> substitutes, targets;  // model ids
  int count = 1;       // images to attack (attack command)
  int images = 500;    // evaluation subset size (sweep / reports)
  bool adjust = false; // subtract clean error in reports
  std::string sweep_param;
  std::vector<double> sweep_values;
  std::string clean_path, adv_path, in_path;
  std::string export_dataset_dir;
  std::uint64_t data_seed = 42;
};

namespace cli_detail {

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "command",     "attack",   "eps",        "iters",    "beta",
      "gamma",       "proj-kernel", "ti-kernel", "prob",   "mu",
      "targeted",    "seed",     "substitutes", "targets", "out",
      "config",      "models",   "dataset",    "zoo",      "count",
      "images",      "adjust",   "param",      "values",   "clean",
      "adv",         "in",       "data-seed",  "export-dataset",
      "target-class"};
  return keys;
}

inline bool is_known_key(const std::string& k) {
  for (const auto& key : known_keys())
    if (key == k) return true;
  return false;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Flat `key = value` grammar: one pair per line, '#' starts a comment.
inline std::map<std::string, std::string> read_config_file(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!is_known_key(key))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for --" + key + ": '" + v + "'");
  }
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for --" + key + ": '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("invalid boolean for --" + key + ": '" + v + "'");
}

/// "1,2,5" or "1..10" (inclusive integer range).
inline std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const long lo = parse_long("values", trim(s.substr(0, dots)));
    const long hi = parse_long("values", trim(s.substr(dots + 2)));
    if (hi < lo) throw ConfigError("descending range in --values: " + s);
    for (long v = lo; v <= hi; ++v) out.push_back(static_cast<double>(v));
    return out;
  }
  for (const auto& item : split_list(s)) out.push_back(parse_double("values", item));
  return out;
}

/// "cnn-a:0,cnn-b:3:adv"
inline std::vector<ZooEntry> parse_zoo(const std::string& s) {
  std::vector<ZooEntry> out;
  for (const auto& item : split_list(s)) {
    std::stringstream ss(item);
    std::string arch, seed, tag;
    std::getline(ss, arch, ':');
    if (!std::getline(ss, seed, ':'))
      throw ConfigError("zoo entry needs arch:seed, got '" + item + "'");
    std::getline(ss, tag, ':');
    ZooEntry e;
    e.arch = trim(arch);
    e.seed = static_cast<std::uint64_t>(parse_long("zoo", trim(seed)));
    if (!tag.empty()) {
      if (trim(tag) != "adv")
        throw ConfigError("zoo entry suffix must be 'adv', got '" + tag + "'");
      e.adversarial = true;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace cli_detail

inline std::string usage_text() {
  return R"(usage: patchstrike <command> [--key value ...]

commands:
  train-zoo   --zoo arch:seed[:adv],...  --out DIR  [--data-seed N]
              [--export-dataset DIR]
  attack      --attack PRESET --models DIR --substitutes ids --out DIR
              [--targets ids] [--count N] [--eps PX] [--iters T] [--beta R]
              [--gamma PX] [--proj-kernel K] [--ti-kernel K] [--prob P]
              [--mu R] [--targeted CLASS] [--seed N] [--dataset DIR]
  sweep       --attack PRESET --param beta|gamma|kernel|iterations
              --values LIST --models DIR --substitutes ids --targets ids
              --out DIR [--images N] [--adjust BOOL]
  patchmap    --clean F.ppm --adv F.ppm --out DIR [--eps PX]
  report      --in FILE.csv

any command accepts --config FILE (flat `key = value`, '#' comments);
explicit flags override file values. PATCHSTRIKE_SEED is the seed fallback.
presets: FGSM I-FGSM MI-FGSM DI-FGSM TI-FGSM TI-BIM PI-FGSM MPI DPI TPI
DMPI DTPI DTMI AI AMI ADI ATI (optional -FGSM suffix on the combos).
--target-class normal|defense|cross-family picks the project kernel preset.
)";
}

// ---------------------------------------------------------------------------
// parse_config
// ---------------------------------------------------------------------------

/// args = argv[1:]. The first non-flag token is the command; a config file
/// may supply `command = ...` instead when only --config is passed.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  using namespace cli_detail;
  std::map<std::string, std::string> flags;
  std::string command;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) == 0) {
      const std::string key = a.substr(2);
      if (!is_known_key(key)) throw ConfigError("unknown flag --" + key);
      if (i + 1 >= args.size()) throw ConfigError("--" + key + " needs a value");
      flags[key] = args[++i];
    } else if (command.empty()) {
      command = a;
    } else {
      throw ConfigError("unexpected argument '" + a + "'");
    }
  }

  std::map<std::string, std::string> kv;
  if (flags.count("config")) kv = read_config_file(flags.at("config"));
  for (const auto& [k, v] : flags) kv[k] = v;  // flags override file values
  if (!command.empty()) kv["command"] = command;

  RunConfig rc;
  if (!kv.count("command")) throw ConfigError("no command given\n" + usage_text());
  rc.command = kv.at("command");
  const bool known_command =
      rc.command == "train-zoo" || rc.command == "attack" ||
      rc.command == "sweep" || rc.command == "patchmap" || rc.command == "report";
  if (!known_command) throw ConfigError("unknown command '" + rc.command + "'");

  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };

  // Attack parameters: preset expansion first, explicit values override.
  if (auto v = get("attack")) {
    rc.preset = *v;
    rc.attack = expand_preset(*v);
  }
  if (auto v = get("target-class")) {
    TargetClass t;
    if (*v == "normal") t = TargetClass::kNormal;
    else if (*v == "defense") t = TargetClass::kDefense;
    else if (*v == "cross-family") t = TargetClass::kCrossFamily;
    else throw ConfigError("invalid --target-class '" + *v + "'");
    rc.attack.proj_kernel_size = proj_kernel_for_target(t);
  }
  if (auto v = get("eps")) rc.attack.eps_pixels = static_cast<float>(parse_double("eps", *v));
  if (auto v = get("iters")) rc.attack.iterations = static_cast<int>(parse_long("iters", *v));
  if (auto v = get("beta")) rc.attack.beta = static_cast<float>(parse_double("beta", *v));
  if (auto v = get("gamma")) rc.attack.gamma_pixels = static_cast<float>(parse_double("gamma", *v));
  if (auto v = get("proj-kernel")) rc.attack.proj_kernel_size = static_cast<int>(parse_long("proj-kernel", *v));
  if (auto v = get("ti-kernel")) rc.attack.ti_kernel_size = static_cast<int>(parse_long("ti-kernel", *v));
  if (auto v = get("prob")) rc.attack.prob = static_cast<float>(parse_double("prob", *v));
  if (auto v = get("mu")) rc.attack.mu = static_cast<float>(parse_double("mu", *v));
  if (auto v = get("targeted")) {
    rc.attack.targeted = true;
    rc.attack.target_label = static_cast<int>(parse_long("targeted", *v));
  }
  if (auto v = get("seed")) {
    rc.attack.seed = static_cast<std::uint64_t>(parse_long("seed", *v));
  } else if (const char* env = std::getenv("PATCHSTRIKE_SEED")) {
    rc.attack.seed = static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  }

  if (auto v = get("models")) rc.model_dir = *v;
  if (auto v = get("dataset")) rc.dataset_dir = *v;
  if (auto v = get("out")) rc.out_dir = *v;
  if (auto v = get("zoo")) rc.zoo = parse_zoo(*v);
  if (auto v = get("substitutes")) rc.substitutes = split_list(*v);
  if (auto v = get("targets")) rc.targets = split_list(*v);
  if (auto v = get("count")) rc.count = static_cast<int>(parse_long("count", *v));
  if (auto v = get("images")) rc.images = static_cast<int>(parse_long("images", *v));
  if (auto v = get("adjust")) rc.adjust = parse_bool("adjust", *v);
  if (auto v = get("param")) rc.sweep_param = *v;
  if (auto v = get("values")) rc.sweep_values = parse_values(*v);
  if (auto v = get("clean")) rc.clean_path = *v;
  if (auto v = get("adv")) rc.adv_path = *v;
  if (auto v = get("in")) rc.in_path = *v;
  if (auto v = get("data-seed")) rc.data_seed = static_cast<std::uint64_t>(parse_long("data-seed", *v));
  if (auto v = get("export-dataset")) rc.export_dataset_dir = *v;

  // Per-command requirements; read paths must exist up front.
  namespace fs = std::filesystem;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(rc.command + ": " + msg);
  };
  auto require_dir = [&](const std::string& p, const char* what) {
    require(!p.empty(), std::string("missing required --") + what);
    if (!fs::exists(p))
      throw ConfigError(rc.command + ": " + what + " path does not exist: " + p);
  };
  if (rc.command == "train-zoo") {
    require(!rc.zoo.empty(), "missing required --zoo");
    require(!rc.out_dir.empty(), "missing required --out");
    for (const auto& e : rc.zoo)
      make_architecture(e.arch, Shape3{3, 32, 32}, 10);  // rejects unknown tags
  } else if (rc.command == "attack") {
    require(!rc.preset.empty(), "missing required --attack");
    require_dir(rc.model_dir, "models");
    require(!rc.substitutes.empty(), "missing required --substitutes");
    require(!rc.out_dir.empty(), "missing required --out");
    require(rc.count >= 1, "--count must be >= 1");
    if (!rc.dataset_dir.empty()) require_dir(rc.dataset_dir, "dataset");
    rc.attack.validate();
  } else if (rc.command == "sweep") {
    require(!rc.preset.empty(), "missing required --attack");
    require_dir(rc.model_dir, "models");
    require(!rc.substitutes.empty(), "missing required --substitutes");
    require(!rc.targets.empty(), "missing required --targets");
    require(!rc.out_dir.empty(), "missing required --out");
    require(!rc.sweep_param.empty(), "missing required --param");
    require(!rc.sweep_values.empty(), "missing required --values");
    if (!rc.dataset_dir.empty()) require_dir(rc.dataset_dir, "dataset");
    rc.attack.validate();
  } else if (rc.command == "patchmap") {
    require(!rc.clean_path.empty(), "missing required --clean");
    require(!rc.adv_path.empty(), "missing required --adv");
    require(!rc.out_dir.empty(), "missing required --out");
    if (!fs::exists(rc.clean_path))
      throw ConfigError("patchmap: clean image does not exist: " + rc.clean_path);
    if (!fs::exists(rc.adv_path))
      throw ConfigError("patchmap: adv image does not exist: " + rc.adv_path);
  } else if (rc.command == "report") {
    require(!rc.in_path.empty(), "missing required --in");
    if (!fs::exists(rc.in_path))
      throw ConfigError("report: input does not exist: " + rc.in_path);
  }
  return rc;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace cli_detail {

inline std::string fmt_f(float v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += ",";
    s += x;
  }
  return s;
}

}  // namespace cli_detail

/// Serialize the resolved run as a config file. Replaying it reproduces the
/// run byte-for-byte (modulo --out).
inline std::string manifest_text(const RunConfig& rc) {
  using cli_detail::fmt_f;
  std::ostringstream out;
  out << "# patchstrike run manifest\n";
  out << "command = " << rc.command << "\n";
  if (!rc.preset.empty()) {
    out << "attack = " << rc.preset << "\n";
    out << "eps = " << fmt_f(rc.attack.eps_pixels) << "\n";
    out << "iters = " << rc.attack.iterations << "\n";
    out << "beta = " << fmt_f(rc.attack.beta) << "\n";
    out << "gamma = " << fmt_f(rc.attack.gamma_pixels) << "\n";
    out << "proj-kernel = " << rc.attack.proj_kernel_size << "\n";
    out << "ti-kernel = " << rc.attack.ti_kernel_size << "\n";
    out << "prob = " << fmt_f(rc.attack.prob) << "\n";
    out << "mu = " << fmt_f(rc.attack.mu) << "\n";
    if (rc.attack.targeted) out << "targeted = " << rc.attack.target_label << "\n";
    out << "seed = " << rc.attack.seed << "\n";
  }
  if (!rc.model_dir.empty()) out << "models = " << rc.model_dir << "\n";
  if (!rc.dataset_dir.empty()) out << "dataset = " << rc.dataset_dir << "\n";
  if (!rc.zoo.empty()) {
    out << "zoo = ";
    std::string s;
    for (const auto& e : rc.zoo) {
      if (!s.empty()) s += ",";
      s += e.arch + ":" + std::to_string(e.seed) + (e.adversarial ? ":adv" : "");
    }
    out << s << "\n";
  }
  if (!rc.substitutes.empty())
    out << "substitutes = " << cli_detail::join(rc.substitutes) << "\n";
  if (!rc.targets.empty()) out << "targets = " << cli_detail::join(rc.targets) << "\n";
  if (rc.command == "attack") out << "count = " << rc.count << "\n";
  if (rc.command == "sweep") {
    out << "images = " << rc.images << "\n";
    out << "adjust = " << (rc.adjust ? 1 : 0) << "\n";
    out << "param = " << rc.sweep_param << "\n";
    std::string vals;
    for (const double v : rc.sweep_values) {
      if (!vals.empty()) vals += ",";
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      vals += buf;
    }
    out << "values = " << vals << "\n";
  }
  if (!rc.clean_path.empty()) out << "clean = " << rc.clean_path << "\n";
  if (!rc.adv_path.empty()) out << "adv = " << rc.adv_path << "\n";
  if (!rc.in_path.empty()) out << "in = " << rc.in_path << "\n";
  if (rc.command == "train-zoo" || rc.command == "attack" || rc.command == "sweep")
    out << "data-seed = " << rc.data_seed << "\n";
  if (!rc.export_dataset_dir.empty())
    out << "export-dataset = " << rc.export_dataset_dir << "\n";
  if (!rc.out_dir.empty()) out << "out = " << rc.out_dir << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

namespace cli_detail {

inline void write_manifest(const RunConfig& rc) {
  std::ofstream f(rc.out_dir + "/manifest.txt");
  if (!f) throw IoError("cannot write manifest to " + rc.out_dir);
  f << manifest_text(rc);
}

inline Model load_zoo_model(const RunConfig& rc, const std::string& id) {
  const std::string path = rc.model_dir + "/" + id + ".pswt";
  if (!std::filesystem::exists(path))
    throw IoError("model file not found: " + path);
  return load_model(path);
}

inline Dataset load_run_dataset(const RunConfig& rc) {
  if (!rc.dataset_dir.empty()) return load_dataset(rc.dataset_dir);
  return make_desk_dataset(rc.data_seed);
}

inline void run_train_zoo(const RunConfig& rc) {
  const Dataset ds = make_desk_dataset(rc.data_seed);
  for (const auto& e : rc.zoo) {
    Model m = train_model(e.arch, ds, e.seed, e.adversarial);
    const std::string path = rc.out_dir + "/" + m.id() + ".pswt";
    save_model(m, path);
    std::cout << "trained " << m.id()
              << "  train_acc=" << accuracy(m, ds, Split::kTrain)
              << "  eval_acc=" << accuracy(m, ds, Split::kEval) << "\n";
  }
  if (!rc.export_dataset_dir.empty()) {
    export_dataset(ds, Split::kTrain, rc.export_dataset_dir + "/train");
    export_dataset(ds, Split::kEval, rc.export_dataset_dir + "/eval");
  }
}

inline void run_attack_command(const RunConfig& rc) {
  std::vector<Model> owned;
  for (const auto& id : rc.substitutes) owned.push_back(load_zoo_model(rc, id));
  std::vector<const Model*> substitute;
  for (const auto& m : owned) substitute.push_back(&m);

  const Dataset ds = load_run_dataset(rc);
  std::vector<ImageTensor> cleans;
  std::vector<int> labels;
  eval_subset(ds, rc.count, cleans, labels);

  const auto advs = craft_adversarials(substitute, cleans, labels, rc.attack);
  for (std::size_t i = 0; i < advs.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "clean_%04zu.ppm", i);
    write_ppm(cleans[i], rc.out_dir + "/" + name);
    std::snprintf(name, sizeof(name), "adv_%04zu.ppm", i);
    write_ppm(advs[i], rc.out_dir + "/" + name);
    std::snprintf(name, sizeof(name), "noise_%04zu.ppm", i);
    const ImageTensor noise_px = to_pixel_units(advs[i] - cleans[i]);
    // eps = 0 forces zero noise; the map is all zeros by construction
    const PatchMap map =
        rc.attack.eps_pixels > 0.0f
            ? patch_map(noise_px, rc.attack.eps_pixels)
            : PatchMap(noise_px.channels, noise_px.height, noise_px.width);
    write_ppm(map, rc.out_dir + "/" + name);
  }

  if (!rc.targets.empty()) {
    std::vector<Model> towned;
    for (const auto& id : rc.targets) towned.push_back(load_zoo_model(rc, id));
    EvalReport report;
    report.config = rc.attack;
    report.dataset_size = cleans.size();
    report.seed = rc.attack.seed;
    report.substitute_names.push_back(substitute_set_name(substitute));
    std::vector<double> row;
    std::vector<bool> wb;
    for (const auto& t : towned) {
      report.target_names.push_back(t.id());
      row.push_back(success_rate(t, advs, labels, rc.adjust, &cleans));
      bool white = false;
      for (const Model* s : substitute) white = white || (s->id() == t.id());
      wb.push_back(white);
    }
    report.rates.push_back(row);
    report.white_box.push_back(wb);
    const std::string csv =
        rc.out_dir + "/" + report_filename(rc.attack, report.substitute_names[0]);
    write_report_csv(report, csv);
    std::cout << "report: " << csv << "\n";
  }
  std::cout << "attacked " << advs.size() << " images with " << rc.preset
            << " (eps=" << rc.attack.eps_pixels << "px)\n";
}

inline void run_sweep(const RunConfig& rc) {
  std::vector<Model> sowned;
  for (const auto& id : rc.substitutes) sowned.push_back(load_zoo_model(rc, id));
  std::vector<const Model*> substitute;
  for (const auto& m : sowned) substitute.push_back(&m);
  std::vector<Model> towned;
  std::vector<const Model*> targets;
  for (const auto& id : rc.targets) towned.push_back(load_zoo_model(rc, id));
  for (const auto& m : towned) targets.push_back(&m);

  const Dataset ds = load_run_dataset(rc);
  TransferOptions opt;
  opt.n_images = rc.images;
  opt.adjust_clean_error = rc.adjust;
  const SweepTable table = parameter_sweep(rc.sweep_param, rc.sweep_values,
                                           rc.attack, {substitute}, targets,
                                           ds, opt);
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sweep_%s_%g.csv", table.parameter.c_str(),
                  table.values[i]);
    write_report_csv(table.reports[i], rc.out_dir + "/" + buf);
  }
  write_report_csv(table, rc.out_dir + "/sweep_" + table.parameter + "_combined.csv");
  std::cout << "sweep over " << rc.sweep_param << ": " << table.values.size()
            << " values\n";
}

inline void run_patchmap(const RunConfig& rc) {
  const PatchMap clean = read_ppm(rc.clean_path);
  const PatchMap adv = read_ppm(rc.adv_path);
  if (clean.channels != adv.channels || clean.height != adv.height ||
      clean.width != adv.width)
    throw ConfigError("patchmap: clean/adv dimensions differ");
  ImageTensor noise_px(clean.channels, clean.height, clean.width);
  for (std::size_t i = 0; i < noise_px.data.size(); ++i)
    noise_px.data[i] = static_cast<float>(adv.pixels[i]) -
                       static_cast<float>(clean.pixels[i]);
  const PatchMap map = patch_map(noise_px, rc.attack.eps_pixels);
  write_ppm(map, rc.out_dir + "/map" + (map.channels == 3 ? ".ppm" : ".pgm"));
  std::cout << "aggregation_score = " << aggregation_score(noise_px) << "\n";
}

inline void run_report(const RunConfig& rc) {
  const EvalReport report = parse_report_csv(rc.in_path);
  std::cout << "substitute";
  for (const auto& t : report.target_names) std::cout << "\t" << t;
  std::cout << "\n";
  double wb_sum = 0, bb_sum = 0;
  long wb_n = 0, bb_n = 0;
  for (std::size_t r = 0; r < report.substitute_names.size(); ++r) {
    std::cout << report.substitute_names[r];
    for (std::size_t c = 0; c < report.target_names.size(); ++c) {
      std::cout << "\t" << detail::format_rate(report.rates[r][c],
                                               report.white_box[r][c]);
      if (report.white_box[r][c]) {
        wb_sum += report.rates[r][c];
        ++wb_n;
      } else {
        bb_sum += report.rates[r][c];
        ++bb_n;
      }
    }
    std::cout << "\n";
  }
  if (wb_n) std::cout << "mean white-box: " << 100.0 * wb_sum / wb_n << "%\n";
  if (bb_n) std::cout << "mean black-box: " << 100.0 * bb_sum / bb_n << "%\n";
}

}  // namespace cli_detail

/// Execute a resolved run. Exit status 0 on success; 2 for configuration
/// errors, 3 for I/O failures, 4 for compute failures, each with a one-line
/// diagnostic on stderr. Input files are never mutated; all artifacts land
/// under the output directory next to manifest.txt.
inline int dispatch(const RunConfig& rc) {
  try {
    if (!rc.out_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(rc.out_dir, ec);
      cli_detail::write_manifest(rc);
    }
    if (rc.command == "train-zoo") cli_detail::run_train_zoo(rc);
    else if (rc.command == "attack") cli_detail::run_attack_command(rc);
    else if (rc.command == "sweep") cli_detail::run_sweep(rc);
    else if (rc.command == "patchmap") cli_detail::run_patchmap(rc);
    else if (rc.command == "report") cli_detail::run_report(rc);
    else throw ConfigError("unknown command '" + rc.command + "'");
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "patchstrike: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "patchstrike: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "patchstrike: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace patchstrike
