#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "patchstrike/errors.hpp"
#include "patchstrike/model.hpp"

namespace patchstrike {

// Weight file layout:
//   PSTRIKE1 <arch_tag> <num_layers>\n
//   input <C> <H> <W> <num_classes>\n
//   meta <training_seed> <adv 0|1> <trained 0|1>\n
//   <num_layers> layer lines: "conv <in> <out> <k> <dil>" | "tanh"
//                             | "pool <k>" | "dense <in> <out>"
//   raw little-endian float32, per weighted layer: weights then biases.

namespace detail {

inline void write_f32_le(std::ostream& f, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  const char bytes[4] = {static_cast<char>(u & 0xff),
                         static_cast<char>((u >> 8) & 0xff),
                         static_cast<char>((u >> 16) & 0xff),
                         static_cast<char>((u >> 24) & 0xff)};
  f.write(bytes, 4);
}

inline float read_f32_le(std::istream& f) {
  unsigned char bytes[4];
  f.read(reinterpret_cast<char*>(bytes), 4);
  if (f.gcount() != 4) throw IoError("weight file truncated");
  const std::uint32_t u = static_cast<std::uint32_t>(bytes[0]) |
                          (static_cast<std::uint32_t>(bytes[1]) << 8) |
                          (static_cast<std::uint32_t>(bytes[2]) << 16) |
                          (static_cast<std::uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(u);
}

}  // namespace detail

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_model: cannot open " + path);
  f << "PSTRIKE1 " << m.arch_tag << " " << m.layers.size() << "\n";
  f << "input " << m.input_shape.c << " " << m.input_shape.h << " "
    << m.input_shape.w << " " << m.num_classes << "\n";
  f << "meta " << m.training_seed << " " << (m.adversarially_trained ? 1 : 0)
    << " " << (m.trained_flag ? 1 : 0) << "\n";
  for (const auto& l : m.layers) {
    switch (l.kind) {
      case LayerKind::kConv:
        f << "conv " << l.in_ch << " " << l.out_ch << " " << l.ksize << " "
          << l.dilation << "\n";
        break;
      case LayerKind::kTanh:
        f << "tanh\n";
        break;
      case LayerKind::kAvgPool:
        f << "pool " << l.pool << "\n";
        break;
      case LayerKind::kDense:
        f << "dense " << l.in_dim << " " << l.out_dim << "\n";
        break;
    }
  }
  for (const auto& w : m.weights)
    for (const float v : w) detail::write_f32_le(f, v);
  if (!f) throw IoError("save_model: short write to " + path);
}

inline Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_model: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("load_model: empty file " + path);
  std::istringstream head(line);
  std::string magic;
  Model m;
  std::size_t num_layers = 0;
  head >> magic >> m.arch_tag >> num_layers;
  if (magic != "PSTRIKE1" || head.fail())
    throw IoError("load_model: bad magic in " + path);

  if (!std::getline(f, line)) throw IoError("load_model: missing input line");
  std::istringstream in_line(line);
  std::string kw;
  in_line >> kw >> m.input_shape.c >> m.input_shape.h >> m.input_shape.w >>
      m.num_classes;
  if (kw != "input" || in_line.fail())
    throw IoError("load_model: malformed input line");

  if (!std::getline(f, line)) throw IoError("load_model: missing meta line");
  std::istringstream meta(line);
  int adv = 0, trained = 0;
  meta >> kw >> m.training_seed >> adv >> trained;
  if (kw != "meta" || meta.fail())
    throw IoError("load_model: malformed meta line");
  m.adversarially_trained = adv != 0;

  for (std::size_t i = 0; i < num_layers; ++i) {
    if (!std::getline(f, line))
      throw IoError("load_model: missing layer line " + std::to_string(i));
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "conv") {
      int ic, oc, k, d;
      ls >> ic >> oc >> k >> d;
      if (ls.fail()) throw IoError("load_model: malformed conv line");
      m.layers.push_back(LayerSpec::conv(ic, oc, k, d));
    } else if (kind == "tanh") {
      m.layers.push_back(LayerSpec::tanh());
    } else if (kind == "pool") {
      int k;
      ls >> k;
      if (ls.fail()) throw IoError("load_model: malformed pool line");
      m.layers.push_back(LayerSpec::avgpool(k));
    } else if (kind == "dense") {
      int id, od;
      ls >> id >> od;
      if (ls.fail()) throw IoError("load_model: malformed dense line");
      m.layers.push_back(LayerSpec::dense(id, od));
    } else {
      throw IoError("load_model: unknown layer kind '" + kind + "'");
    }
  }

  // Chain consistency, and agreement with the registry for known tags.
  try {
    const auto shapes = chain_shapes(m.layers, m.input_shape);
    if (shapes.back() != Shape3{m.num_classes, 1, 1})
      throw ConfigError("tail shape mismatch");
    for (const auto& tag : registered_architectures())
      if (tag == m.arch_tag &&
          m.layers != make_architecture(tag, m.input_shape, m.num_classes))
        throw ConfigError("layer list differs from registered " + tag);
  } catch (const ConfigError& e) {
    throw IoError("load_model: " + path + ": " + e.what());
  }

  m.weights.resize(m.layers.size());
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    m.weights[li].resize(m.layers[li].weight_count());
    for (auto& v : m.weights[li]) v = detail::read_f32_le(f);
  }
  char extra;
  if (f.read(&extra, 1) && f.gcount() == 1)
    throw IoError("load_model: trailing bytes in " + path);
  m.trained_flag = trained != 0;
  m.validate();
  return m;
}

}  // namespace patchstrike
