#pragma once

#include <cmath>
#include <cstdint>

#include "patchstrike/errors.hpp"
#include "patchstrike/image_io.hpp"
#include "patchstrike/tensor.hpp"

namespace patchstrike {

/// Contrast-boosted visualization of adversarial noise: |noise| * 256/eps,
/// reduced modulo 256 into uint8. Noise and eps are both on the 0-255 pixel
/// scale. Saturated pixels (|noise| == eps) land on 256 and wrap to 0 --
/// intentional: the wrap reproduces the uint8 overflow the map is defined
/// through, and makes fully-saturated patches read as solid black.
inline PatchMap patch_map(const ImageTensor& noise_pixels, float eps_pixels) {
  if (eps_pixels <= 0.0f) throw ConfigError("patch_map: eps must be > 0");
  PatchMap out(noise_pixels.channels, noise_pixels.height, noise_pixels.width);
  for (std::size_t i = 0; i < noise_pixels.data.size(); ++i) {
    const double v = std::abs(static_cast<double>(noise_pixels.data[i])) *
                     256.0 / static_cast<double>(eps_pixels);
    const long long q = static_cast<long long>(v);  // truncate like a uint8 cast
    out.pixels[i] = static_cast<std::uint8_t>(((q % 256) + 256) % 256);
  }
  return out;
}

/// Fraction of 4-neighbor pixel pairs (horizontal and vertical, per channel)
/// whose noise signs agree; zeros agree only with zeros. 1.0 for constant-
/// sign noise, 0.0 for a +/-1 checkerboard, ~0.5 for i.i.d. random signs.
/// Quantifies how patch-like a noise tensor is.
inline double aggregation_score(const ImageTensor& noise) {
  if (noise.height < 2 || noise.width < 2)
    throw ConfigError("aggregation_score: needs H, W >= 2");
  auto sgn = [](float v) { return (v > 0.0f) - (v < 0.0f); };
  long long agree = 0, total = 0;
  for (int c = 0; c < noise.channels; ++c) {
    for (int y = 0; y < noise.height; ++y) {
      for (int x = 0; x < noise.width; ++x) {
        const int s = sgn(noise.at(c, y, x));
        if (x + 1 < noise.width) {
          agree += (s == sgn(noise.at(c, y, x + 1)));
          ++total;
        }
        if (y + 1 < noise.height) {
          agree += (s == sgn(noise.at(c, y + 1, x)));
          ++total;
        }
      }
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace patchstrike
