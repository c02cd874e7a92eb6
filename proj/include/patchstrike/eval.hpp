#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "patchstrike/attack.hpp"
#include "patchstrike/dataset.hpp"
#include "patchstrike/errors.hpp"
#include "patchstrike/model.hpp"
#include "patchstrike/parallel.hpp"
#include "patchstrike/rng.hpp"

namespace patchstrike {

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Transfer matrix: one row per substitute (set), one column per target.
/// Cells are success rates in [0,1]; with clean-error adjustment a cell may
/// be negative and is reported as-is. white_box marks cells whose target is
/// a member of the row's substitute set.
struct EvalReport {
  std::vector<std::string> substitute_names;
  std::vector<std::string> target_names;
  std::vector<std::vector<double>> rates;
  std::vector<std::vector<bool>> white_box;
  AttackConfig config;
  std::size_t dataset_size = 0;
  std::uint64_t seed = 0;
};

struct SweepTable {
  std::string parameter;  // beta | gamma | kernel | iterations
  std::vector<double> values;
  std::vector<EvalReport> reports;  // one per value
};

// ---------------------------------------------------------------------------
// Success rates
// ---------------------------------------------------------------------------

/// Fraction of adversarials the target misclassifies. With
/// adjust_clean_error, the target's clean error on the same images is
/// subtracted (clean_images required); the adjusted rate can be negative
/// when an attack accidentally fixes misclassifications.
inline double success_rate(const Model& target,
                           const std::vector<ImageTensor>& adversarials,
                           const std::vector<int>& labels,
                           bool adjust_clean_error,
                           const std::vector<ImageTensor>* clean_images = nullptr) {
  if (adversarials.empty()) throw ConfigError("success_rate: empty image list");
  if (adversarials.size() != labels.size())
    throw ConfigError("success_rate: image/label length mismatch");
  long fooled = 0;
  for (std::size_t i = 0; i < adversarials.size(); ++i)
    fooled += (predict(target, adversarials[i]) != labels[i]);
  double rate = static_cast<double>(fooled) / static_cast<double>(labels.size());
  if (adjust_clean_error) {
    if (!clean_images || clean_images->size() != labels.size())
      throw ConfigError("success_rate: clean images required for adjustment");
    long wrong = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      wrong += (predict(target, (*clean_images)[i]) != labels[i]);
    rate -= static_cast<double>(wrong) / static_cast<double>(labels.size());
  }
  return rate;
}

// ---------------------------------------------------------------------------
// Crafting and the transfer matrix
// ---------------------------------------------------------------------------

/// Attack every image with the given substitute set. Image i runs with the
/// sub-seed mix(cfg.seed, i), so results are independent of evaluation
/// order and thread count.
inline std::vector<ImageTensor> craft_adversarials(
    const std::vector<const Model*>& substitute,
    const std::vector<ImageTensor>& cleans, const std::vector<int>& labels,
    const AttackConfig& cfg) {
  if (cleans.size() != labels.size())
    throw ConfigError("craft_adversarials: image/label length mismatch");
  std::vector<ImageTensor> advs(cleans.size());
  parallel_for(cleans.size(), [&](std::size_t i) {
    AttackConfig per_image = cfg;
    per_image.seed = mix_seed(cfg.seed, i);
    advs[i] = run_attack(substitute, cleans[i], labels[i], per_image).x_adv;
  });
  return advs;
}

struct TransferOptions {
  int n_images = 500;              // fixed evaluation subset (eval split head)
  bool adjust_clean_error = false;
};

/// The first n eval-split images; every matrix and sweep reuses the same
/// subset so comparisons across attacks and parameters are paired.
inline void eval_subset(const Dataset& ds, int n_images,
                        std::vector<ImageTensor>& images,
                        std::vector<int>& labels) {
  const auto idx = ds.eval_indices();
  if (idx.empty()) throw ConfigError("eval_subset: dataset has no eval split");
  const std::size_t n =
      std::min<std::size_t>(idx.size(), static_cast<std::size_t>(n_images));
  if (n == 0) throw ConfigError("eval_subset: n_images must be positive");
  images.clear();
  labels.clear();
  for (std::size_t i = 0; i < n; ++i) {
    images.push_back(ds.images[idx[i]]);
    labels.push_back(ds.labels[idx[i]]);
  }
}

inline std::string substitute_set_name(const std::vector<const Model*>& set) {
  std::string name;
  for (const Model* m : set) {
    if (!name.empty()) name += "+";
    name += m->id();
  }
  return name;
}

/// Craft adversarials once per substitute set, evaluate them against every
/// target. Cells where the target belongs to the substitute set are
/// white-box and flagged as such.
inline EvalReport transfer_matrix(
    const std::vector<std::vector<const Model*>>& substitutes,
    const std::vector<const Model*>& targets, const Dataset& ds,
    const AttackConfig& cfg, const TransferOptions& opt = {}) {
  if (substitutes.empty() || targets.empty())
    throw ConfigError("transfer_matrix: substitutes and targets required");
  cfg.validate();
  std::vector<ImageTensor> cleans;
  std::vector<int> labels;
  eval_subset(ds, opt.n_images, cleans, labels);

  EvalReport report;
  report.config = cfg;
  report.dataset_size = cleans.size();
  report.seed = cfg.seed;
  for (const Model* t : targets) report.target_names.push_back(t->id());

  for (const auto& sub : substitutes) {
    if (sub.empty()) throw ConfigError("transfer_matrix: empty substitute set");
    report.substitute_names.push_back(substitute_set_name(sub));
    const auto advs = craft_adversarials(sub, cleans, labels, cfg);
    std::vector<double> row;
    std::vector<bool> wb_row;
    for (const Model* t : targets) {
      row.push_back(success_rate(*t, advs, labels, opt.adjust_clean_error,
                                 &cleans));
      bool wb = false;
      for (const Model* s : sub) wb = wb || (s->id() == t->id());
      wb_row.push_back(wb);
    }
    report.rates.push_back(std::move(row));
    report.white_box.push_back(std::move(wb_row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

/// One transfer matrix per parameter value. Sweepable parameters:
///   beta        amplification factor
///   gamma       project factor (pixels)
///   kernel      project kernel size
///   iterations  T; the step size stays eps (beta = T) and gamma = eps,
///               mirroring the convention for iteration ablations
inline SweepTable parameter_sweep(
    const std::string& param, const std::vector<double>& values,
    const AttackConfig& base_cfg,
    const std::vector<std::vector<const Model*>>& substitutes,
    const std::vector<const Model*>& targets, const Dataset& ds,
    const TransferOptions& opt = {}) {
  if (values.empty()) throw ConfigError("parameter_sweep: empty value list");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1])
      throw ConfigError("parameter_sweep: values must be strictly increasing");

  SweepTable table;
  table.parameter = param;
  table.values = values;
  for (const double v : values) {
    AttackConfig cfg = base_cfg;
    if (param == "beta") {
      cfg.beta = static_cast<float>(v);
    } else if (param == "gamma") {
      cfg.gamma_pixels = static_cast<float>(v);
    } else if (param == "kernel") {
      cfg.proj_kernel_size = static_cast<int>(v);
    } else if (param == "iterations") {
      cfg.iterations = static_cast<int>(v);
      cfg.beta = static_cast<float>(cfg.iterations);
      cfg.gamma_pixels = cfg.eps_pixels;
    } else {
      throw ConfigError("parameter_sweep: unknown parameter '" + param + "'");
    }
    table.reports.push_back(transfer_matrix(substitutes, targets, ds, cfg, opt));
  }
  return table;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_rate(double rate, bool white_box) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", rate * 100.0);
  std::string s(buf);
  if (white_box) s += "*";
  return s;
}

}  // namespace detail

/// Percentages with one decimal, white-box cells suffixed '*'. Refuses to
/// create a file for an empty report.
inline void write_report_csv(const EvalReport& report, const std::string& path) {
  if (report.substitute_names.empty() || report.target_names.empty())
    throw ConfigError("write_report_csv: empty report");
  std::ofstream f(path);
  if (!f) throw IoError("write_report_csv: cannot open " + path);
  f << "substitute";
  for (const auto& t : report.target_names) f << "," << t;
  f << "\n";
  for (std::size_t r = 0; r < report.substitute_names.size(); ++r) {
    f << report.substitute_names[r];
    for (std::size_t c = 0; c < report.target_names.size(); ++c)
      f << "," << detail::format_rate(report.rates[r][c], report.white_box[r][c]);
    f << "\n";
  }
  if (!f) throw IoError("write_report_csv: short write to " + path);
}

inline void write_report_csv(const SweepTable& table, const std::string& path) {
  if (table.reports.empty()) throw ConfigError("write_report_csv: empty sweep");
  for (const auto& r : table.reports)
    if (r.substitute_names.empty() || r.target_names.empty())
      throw ConfigError("write_report_csv: empty report in sweep");
  std::ofstream f(path);
  if (!f) throw IoError("write_report_csv: cannot open " + path);
  f << "parameter,value,substitute";
  for (const auto& t : table.reports.front().target_names) f << "," << t;
  f << "\n";
  for (std::size_t vi = 0; vi < table.values.size(); ++vi) {
    const EvalReport& rep = table.reports[vi];
    for (std::size_t r = 0; r < rep.substitute_names.size(); ++r) {
      f << table.parameter << "," << table.values[vi] << ","
        << rep.substitute_names[r];
      for (std::size_t c = 0; c < rep.target_names.size(); ++c)
        f << "," << detail::format_rate(rep.rates[r][c], rep.white_box[r][c]);
      f << "\n";
    }
  }
  if (!f) throw IoError("write_report_csv: short write to " + path);
}

/// Parse a file produced by write_report_csv(EvalReport). Rates come back
/// exactly at the 1-decimal precision they were written with.
inline EvalReport parse_report_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("parse_report_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("parse_report_csv: empty file");
  EvalReport report;
  std::stringstream header(line);
  std::string cell;
  if (!std::getline(header, cell, ',') || cell != "substitute")
    throw IoError("parse_report_csv: bad header in " + path);
  while (std::getline(header, cell, ',')) report.target_names.push_back(cell);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::getline(row, cell, ',');
    report.substitute_names.push_back(cell);
    std::vector<double> rates;
    std::vector<bool> wb;
    while (std::getline(row, cell, ',')) {
      bool star = !cell.empty() && cell.back() == '*';
      if (star) cell.pop_back();
      rates.push_back(std::stod(cell) / 100.0);
      wb.push_back(star);
    }
    if (rates.size() != report.target_names.size())
      throw IoError("parse_report_csv: ragged row in " + path);
    report.rates.push_back(std::move(rates));
    report.white_box.push_back(std::move(wb));
  }
  return report;
}

/// Canonical report filename: <attack>_<substitute>_eps<e>_T<T>.csv
inline std::string report_filename(const AttackConfig& cfg,
                                   const std::string& substitute_name) {
  char eps[32];
  std::snprintf(eps, sizeof(eps), "%g", static_cast<double>(cfg.eps_pixels));
  return cfg.name + "_" + substitute_name + "_eps" + eps + "_T" +
         std::to_string(cfg.iterations) + ".csv";
}

}  // namespace patchstrike
