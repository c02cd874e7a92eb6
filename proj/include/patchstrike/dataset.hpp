#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "patchstrike/errors.hpp"
#include "patchstrike/image_io.hpp"
#include "patchstrike/rng.hpp"
#include "patchstrike/tensor.hpp"

namespace patchstrike {

enum class Split { kTrain, kEval };

/// Labeled image set with disjoint train/eval splits. Images live in [-1,1].
struct Dataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  std::vector<Split> split;
  int num_classes = 0;

  std::vector<std::size_t> train_indices() const { return indices(Split::kTrain); }
  std::vector<std::size_t> eval_indices() const { return indices(Split::kEval); }

 private:
  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] == s) out.push_back(i);
    return out;
  }
};

namespace detail {

// The ten desk classes are geometric motifs that small convnets separate
// quickly but that occupy different, clustered image regions: four stripe
// orientations, a checkerboard, and five shapes. Position, scale, phase,
// foreground level and per-channel tint are jittered per image so color and
// single pixels carry no class signal.
inline void paint_desk_pattern(ImageTensor& img, int label, Rng& rng) {
  const int h = img.height, w = img.width;
  const float bg = uniform_float(rng, -0.85f, -0.45f);
  const float fg = uniform_float(rng, 0.35f, 0.85f);
  float tint[3];
  for (float& t : tint) t = uniform_float(rng, 0.7f, 1.0f);

  const int cy = h / 2 + uniform_int(rng, -5, 5);
  const int cx = w / 2 + uniform_int(rng, -5, 5);

  // Draw all jitter parameters up front so the per-pixel loop is pure.
  int period = uniform_int(rng, 6, 10);
  int phase = uniform_int(rng, 0, period - 1);
  int cell = uniform_int(rng, 4, 7);
  int radius = uniform_int(rng, 6, 10);
  int inner = radius - uniform_int(rng, 2, 3);
  int half_sq = uniform_int(rng, 5, 9);
  int arm_w = uniform_int(rng, 2, 3);
  int arm_l = uniform_int(rng, 9, 13);
  int frame_half = uniform_int(rng, 7, 11);
  int frame_th = uniform_int(rng, 2, 3);

  auto in_pattern = [&](int y, int x) -> bool {
    const int dy = y - cy, dx = x - cx;
    switch (label) {
      case 0: return ((y + phase) % period) * 2 < period;                 // horizontal stripes
      case 1: return ((x + phase) % period) * 2 < period;                 // vertical stripes
      case 2: return (((y + x) + phase) % period) * 2 < period;           // diagonal stripes
      case 3: return (((y + phase) / cell) + ((x + phase) / cell)) % 2 == 0;  // checkerboard
      case 4: return dy * dy + dx * dx <= radius * radius;                // filled disk
      case 5: {                                                           // ring
        const int r2 = dy * dy + dx * dx;
        return r2 <= radius * radius && r2 >= inner * inner;
      }
      case 6: return std::abs(dy) <= half_sq && std::abs(dx) <= half_sq;  // filled square
      case 7: return (std::abs(dy) <= arm_w && std::abs(dx) <= arm_l) ||  // plus sign
                     (std::abs(dx) <= arm_w && std::abs(dy) <= arm_l);
      case 8: {                                                           // hollow square frame
        const int ay = std::abs(dy), ax = std::abs(dx);
        return ay <= frame_half && ax <= frame_half &&
               (ay >= frame_half - frame_th || ax >= frame_half - frame_th);
      }
      case 9: return (((y - x) % period + period + phase) % period) * 2 < period;  // anti-diagonal
      default: throw ConfigError("paint_desk_pattern: bad label");
    }
  };

  const float noise_amp = 0.45f;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool on = in_pattern(y, x);
      for (int c = 0; c < 3; ++c) {
        float v = on ? fg * tint[c] : bg;
        v += uniform_float(rng, -noise_amp, noise_amp);
        v = std::min(1.0f, std::max(-1.0f, v));
        img.at(c, y, x) = v + 0.0f;  // flush -0.0 to +0.0
      }
    }
  }
}

}  // namespace detail

/// Deterministic synthetic 10-class image set: 3x32x32, [-1,1], train and
/// eval generated from disjoint RNG streams of the same seed. Labels cycle
/// 0..9 so both splits are balanced.
inline Dataset make_desk_dataset(std::uint64_t seed, int train_count = 5000,
                                 int eval_count = 1000) {
  if (train_count <= 0 || eval_count <= 0)
    throw ConfigError("make_desk_dataset: counts must be positive");
  Dataset ds;
  ds.num_classes = 10;
  ds.images.reserve(static_cast<std::size_t>(train_count) + eval_count);
  auto emit = [&](Split s, int count, std::uint64_t salt) {
    Rng rng = make_rng(seed, salt);
    for (int i = 0; i < count; ++i) {
      const int label = i % 10;
      ImageTensor img(3, 32, 32);
      detail::paint_desk_pattern(img, label, rng);
      ds.images.push_back(std::move(img));
      ds.labels.push_back(label);
      ds.split.push_back(s);
    }
  };
  emit(Split::kTrain, train_count, 0xd5c0);
  emit(Split::kEval, eval_count, 0xe7a1);
  return ds;
}

/// Export a split as binary PPM files plus labels.csv (columns
/// filename,label). The 8-bit quantization is lossy in float terms but the
/// files themselves round-trip exactly.
inline void export_dataset(const Dataset& ds, Split split,
                           const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream csv(dir + "/labels.csv");
  if (!csv) throw IoError("export_dataset: cannot open " + dir + "/labels.csv");
  csv << "filename,label\n";
  int n = 0;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    if (ds.split[i] != split) continue;
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d.ppm", n++);
    write_ppm(ds.images[i], dir + "/" + name);
    csv << name << "," << ds.labels[i] << "\n";
  }
  if (!csv) throw IoError("export_dataset: short write to labels.csv");
}

/// Load a directory written by export_dataset. Every image gets the given
/// split tag.
inline Dataset load_dataset(const std::string& dir, Split split = Split::kEval,
                            int num_classes = 10) {
  std::ifstream csv(dir + "/labels.csv");
  if (!csv) throw IoError("load_dataset: cannot open " + dir + "/labels.csv");
  Dataset ds;
  ds.num_classes = num_classes;
  std::string line;
  if (!std::getline(csv, line) || line.rfind("filename,label", 0) != 0)
    throw IoError("load_dataset: bad labels.csv header in " + dir);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw IoError("load_dataset: malformed labels.csv row: " + line);
    const std::string name = line.substr(0, comma);
    const int label = std::stoi(line.substr(comma + 1));
    if (label < 0 || label >= num_classes)
      throw IoError("load_dataset: label out of range in " + dir);
    ds.images.push_back(dequantize_unit_tensor(read_ppm(dir + "/" + name)));
    ds.labels.push_back(label);
    ds.split.push_back(split);
  }
  return ds;
}

}  // namespace patchstrike
