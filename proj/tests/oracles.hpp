// Independent reference implementations the test suites check the library
// against. Everything here is written as plainly as possible (quadruple
// loops, naive sums) and must stay decoupled from the implementation paths
// it validates.
#pragma once

#include <cmath>
#include <vector>

#include "patchstrike/attack.hpp"
#include "patchstrike/model.hpp"
#include "patchstrike/rng.hpp"
#include "patchstrike/tensor.hpp"

namespace oracles {

using patchstrike::BasicTensor;
using patchstrike::ImageTensor;
using patchstrike::Kernel2D;
using patchstrike::Model;

/// Direct-summation depthwise convolution, zero padding, stride 1. Same
/// cross-correlation orientation as the library (symmetric kernels make the
/// flip unobservable, asymmetric test kernels must match orientation).
inline ImageTensor conv2d_direct(const ImageTensor& x, const Kernel2D& k) {
  const int half = k.size / 2;
  ImageTensor out(x.channels, x.height, x.width);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx) {
        double acc = 0.0;
        for (int u = 0; u < k.size; ++u)
          for (int v = 0; v < k.size; ++v) {
            const int sy = y + u - half;
            const int sx = xx + v - half;
            if (sy >= 0 && sy < x.height && sx >= 0 && sx < x.width)
              acc += static_cast<double>(k.at(u, v)) * x.at(c, sy, sx);
          }
        out.at(c, y, xx) = static_cast<float>(acc);
      }
  return out;
}

inline ImageTensor linf_clip_direct(const ImageTensor& x,
                                    const ImageTensor& center, float eps) {
  ImageTensor out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    float v = x.data[i];
    if (v > center.data[i] + eps) v = center.data[i] + eps;
    if (v < center.data[i] - eps) v = center.data[i] - eps;
    out.data[i] = v;
  }
  return out;
}

inline double l1_direct(const ImageTensor& x) {
  double s = 0.0;
  for (float v : x.data) s += v < 0 ? -static_cast<double>(v) : v;
  return s;
}

inline double cross_entropy_direct(const std::vector<float>& logits, int y) {
  double sum = 0.0;
  for (float v : logits) sum += std::exp(static_cast<double>(v));
  return std::log(sum) - static_cast<double>(logits[y]);
}

inline int argmax_direct(const std::vector<float>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Central finite differences of the double-instantiated loss at selected
/// coordinates.
inline std::vector<double> fd_input_gradient(const Model& m,
                                             const BasicTensor<double>& x,
                                             int y,
                                             const std::vector<std::size_t>& coords,
                                             double h = 1e-3) {
  std::vector<double> out;
  BasicTensor<double> probe = x;
  for (const std::size_t i : coords) {
    const double orig = probe.data[i];
    probe.data[i] = orig + h;
    const double lp = patchstrike::cross_entropy(
        patchstrike::forward_logits(m, probe), y);
    probe.data[i] = orig - h;
    const double lm = patchstrike::cross_entropy(
        patchstrike::forward_logits(m, probe), y);
    probe.data[i] = orig;
    out.push_back((lp - lm) / (2.0 * h));
  }
  return out;
}

/// Plain I-FGSM, written independently of the attack engine: T sign steps
/// of size alpha, eps-ball clip, box clip. The bit-exact reduction oracle.
inline ImageTensor reference_ifgsm(const Model& m, const ImageTensor& clean,
                                   int y, float eps_norm, float alpha, int T) {
  ImageTensor x = clean;
  for (int t = 0; t < T; ++t) {
    const ImageTensor g = patchstrike::input_gradient(m, x, y);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      const float s = static_cast<float>((g.data[i] > 0.0f) - (g.data[i] < 0.0f));
      float v = x.data[i] + alpha * s;
      const float hi = clean.data[i] + eps_norm;
      const float lo = clean.data[i] - eps_norm;
      if (v > hi) v = hi;
      if (v < lo) v = lo;
      if (v > 1.0f) v = 1.0f;
      if (v < -1.0f) v = -1.0f;
      x.data[i] = v;
    }
  }
  return x;
}

/// Single-step FGSM at full budget, with the same box clip the engine
/// applies to every iterate.
inline ImageTensor reference_fgsm(const Model& m, const ImageTensor& clean,
                                  int y, float eps_norm) {
  ImageTensor x = clean;
  const ImageTensor g = patchstrike::input_gradient(m, clean, y);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const float s = static_cast<float>((g.data[i] > 0.0f) - (g.data[i] < 0.0f));
    float v = clean.data[i] + eps_norm * s;
    const float hi = clean.data[i] + eps_norm;
    const float lo = clean.data[i] - eps_norm;
    if (v > hi) v = hi;
    if (v < lo) v = lo;
    if (v > 1.0f) v = 1.0f;
    if (v < -1.0f) v = -1.0f;
    x.data[i] = v;
  }
  return x;
}

inline ImageTensor random_tensor(int c, int h, int w, patchstrike::Rng& rng,
                                 float lo = -1.0f, float hi = 1.0f) {
  ImageTensor t(c, h, w);
  for (auto& v : t.data) v = patchstrike::uniform_float(rng, lo, hi);
  return t;
}

inline bool bitwise_equal(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data.data(), b.data.data(),
                     a.data.size() * sizeof(float)) == 0;
}

}  // namespace oracles
