#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "patchstrike/errors.hpp"
#include "patchstrike/tensor.hpp"

namespace patchstrike {

/// 8-bit image, C x H x W with C = 1 or 3. Produced by patch_map and by
/// quantizing [-1,1] tensors for export.
struct PatchMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // channel-major like ImageTensor

  PatchMap() = default;
  PatchMap(int c, int h, int w, std::uint8_t fill = 0)
      : channels(c), height(h), width(w),
        pixels(static_cast<std::size_t>(c) * h * w, fill) {}

  std::uint8_t& at(int c, int y, int x) {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::uint8_t at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

/// Affine quantization of a [-1,1] tensor to bytes; -1 -> 0, +1 -> 255.
inline PatchMap quantize_unit_tensor(const ImageTensor& x) {
  PatchMap out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double v = (static_cast<double>(x.data[i]) + 1.0) * 127.5;
    const long q = std::lround(v);
    out.pixels[i] = static_cast<std::uint8_t>(std::min(255l, std::max(0l, q)));
  }
  return out;
}

inline ImageTensor dequantize_unit_tensor(const PatchMap& m) {
  ImageTensor out(m.channels, m.height, m.width);
  for (std::size_t i = 0; i < m.pixels.size(); ++i)
    out.data[i] = static_cast<float>(m.pixels[i]) / 127.5f - 1.0f;
  return out;
}

/// Binary netpbm writer: P6 for 3-channel, P5 for 1-channel. The header is
/// exactly "P6\n<w> <h>\n255\n" followed by interleaved rows.
inline void write_ppm(const PatchMap& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw ConfigError("write_ppm: channels must be 1 or 3");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_ppm: cannot open " + path);
  f << (img.channels == 3 ? "P6" : "P5") << "\n"
    << img.width << " " << img.height << "\n255\n";
  // planar -> interleaved
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<std::size_t>(x) * img.channels + c] = img.at(c, y, x);
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw IoError("write_ppm: short write to " + path);
}

inline void write_ppm(const ImageTensor& img, const std::string& path) {
  write_ppm(quantize_unit_tensor(img), path);
}

namespace detail {

inline int read_pnm_int(std::istream& f) {
  // netpbm allows whitespace and '#' comments between header fields
  int ch = f.get();
  while (ch == '#' || std::isspace(ch)) {
    if (ch == '#')
      while (ch != '\n' && ch != EOF) ch = f.get();
    ch = f.get();
  }
  int value = 0;
  bool any = false;
  while (std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    any = true;
    ch = f.get();
  }
  if (!any) throw IoError("malformed netpbm header");
  return value;
}

}  // namespace detail

inline PatchMap read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_ppm: cannot open " + path);
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  int channels = 0;
  if (m0 == 'P' && m1 == '6') channels = 3;
  else if (m0 == 'P' && m1 == '5') channels = 1;
  else throw IoError("read_ppm: bad magic in " + path);
  const int w = detail::read_pnm_int(f);
  const int h = detail::read_pnm_int(f);
  const int maxval = detail::read_pnm_int(f);
  if (maxval != 255) throw IoError("read_ppm: unsupported maxval in " + path);
  if (w <= 0 || h <= 0) throw IoError("read_ppm: bad dimensions in " + path);
  PatchMap img(channels, h, w);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * channels);
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size()));
    if (f.gcount() != static_cast<std::streamsize>(row.size()))
      throw IoError("read_ppm: truncated pixel data in " + path);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) = row[static_cast<std::size_t>(x) * channels + c];
  }
  return img;
}

}  // namespace patchstrike
