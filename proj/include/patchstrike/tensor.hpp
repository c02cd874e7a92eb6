#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "patchstrike/errors.hpp"

namespace patchstrike {

/// Dense C x H x W array over scalar T, channel-major, row-major within a
/// channel. The float instantiation (ImageTensor) carries clean images,
/// adversarial images, noise, gradients and the attack's bookkeeping
/// tensors; the double instantiation backs the finite-difference oracles.
///
/// When a tensor represents a valid image every element lies in [-1, 1];
/// that invariant is maintained by the producers (dataset generator, attack
/// loop), not by this type.
template <typename T>
struct BasicTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  BasicTensor() = default;

  BasicTensor(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w) {
    if (c <= 0 || h <= 0 || w <= 0)
      throw ConfigError("tensor dimensions must be strictly positive");
    data.assign(static_cast<std::size_t>(c) * h * w, fill);
  }

  std::size_t size() const { return data.size(); }

  T& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  T at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  bool same_shape(const BasicTensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  std::string shape_str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" +
           std::to_string(width);
  }

  template <typename U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out(channels, height, width);
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using ImageTensor = BasicTensor<float>;

/// Square 2-D convolution kernel with odd side length. Holds the uniform
/// project kernel W_p and the translation-invariance smoothing kernel.
struct Kernel2D {
  int size = 0;  // k, odd and >= 1
  std::vector<float> weights;  // k*k, row-major

  Kernel2D() = default;

  explicit Kernel2D(int k, float fill = 0.0f) : size(k) {
    if (k < 1 || k % 2 == 0)
      throw ConfigError("kernel size must be odd and >= 1, got " +
                        std::to_string(k));
    weights.assign(static_cast<std::size_t>(k) * k, fill);
  }

  float& at(int u, int v) { return weights[static_cast<std::size_t>(u) * size + v]; }
  float at(int u, int v) const { return weights[static_cast<std::size_t>(u) * size + v]; }
};

inline Kernel2D identity_kernel(int k = 1) {
  Kernel2D kern(k);
  kern.at(k / 2, k / 2) = 1.0f;
  return kern;
}

namespace detail {

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b,
                        const char* op) {
  if (!a.same_shape(b))
    throw ConfigError(std::string(op) + ": shape mismatch " + a.shape_str() +
                      " vs " + b.shape_str());
}

}  // namespace detail

/// Depthwise same-size convolution: the kernel is applied to every channel
/// independently, stride 1, zero padding of width k/2. Accumulation runs in
/// double regardless of T. Cross-correlation orientation; every kernel used
/// by the attacks is symmetric, so the flip convention is unobservable.
template <typename T>
BasicTensor<T> conv2d_same(const BasicTensor<T>& x, const Kernel2D& k) {
  if (k.size < 1 || k.size % 2 == 0)
    throw ConfigError("conv2d_same: kernel size must be odd, got " +
                      std::to_string(k.size));
  const int half = k.size / 2;
  BasicTensor<T> out(x.channels, x.height, x.width);
  for (int c = 0; c < x.channels; ++c) {
    for (int y = 0; y < x.height; ++y) {
      for (int xx = 0; xx < x.width; ++xx) {
        double acc = 0.0;
        for (int u = 0; u < k.size; ++u) {
          const int sy = y + u - half;
          if (sy < 0 || sy >= x.height) continue;
          for (int v = 0; v < k.size; ++v) {
            const int sx = xx + v - half;
            if (sx < 0 || sx >= x.width) continue;
            acc += static_cast<double>(k.at(u, v)) *
                   static_cast<double>(x.at(c, sy, sx));
          }
        }
        out.at(c, y, xx) = static_cast<T>(acc);
      }
    }
  }
  return out;
}

/// Elementwise sign with sign(0) = 0. The zero convention matters: the
/// patch-wise update adds gamma*sign(W_p*C), and a zero cut noise must
/// contribute exactly nothing so the beta=1 attack collapses to plain
/// iterative FGSM.
template <typename T>
BasicTensor<T> sign(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const T v = x.data[i];
    out.data[i] = static_cast<T>((v > T(0)) - (v < T(0)));
  }
  return out;
}

/// Clamp every element into [lo, hi].
template <typename T>
BasicTensor<T> clip_box(const BasicTensor<T>& x, T lo, T hi) {
  if (lo > hi) throw ConfigError("clip_box: lo > hi");
  BasicTensor<T> out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    out.data[i] = std::min(hi, std::max(lo, x.data[i]));
  return out;
}

/// Project x onto the L-inf ball of radius eps around center, elementwise.
template <typename T>
BasicTensor<T> linf_clip(const BasicTensor<T>& x, const BasicTensor<T>& center,
                         T eps) {
  detail::require_same_shape(x, center, "linf_clip");
  if (eps < T(0)) throw ConfigError("linf_clip: eps must be >= 0");
  BasicTensor<T> out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const T lo = center.data[i] - eps;
    const T hi = center.data[i] + eps;
    out.data[i] = std::min(hi, std::max(lo, x.data[i]));
  }
  return out;
}

/// Sum of absolute values, accumulated in double.
template <typename T>
double l1_norm(const BasicTensor<T>& x) {
  double acc = 0.0;
  for (const T v : x.data) acc += std::abs(static_cast<double>(v));
  return acc;
}

template <typename T>
double linf_norm(const BasicTensor<T>& x) {
  double m = 0.0;
  for (const T v : x.data) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

template <typename T>
BasicTensor<T> operator+(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "operator+");
  BasicTensor<T> out(a.channels, a.height, a.width);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    out.data[i] = a.data[i] + b.data[i];
  return out;
}

template <typename T>
BasicTensor<T> operator-(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  detail::require_same_shape(a, b, "operator-");
  BasicTensor<T> out(a.channels, a.height, a.width);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    out.data[i] = a.data[i] - b.data[i];
  return out;
}

template <typename T>
BasicTensor<T> operator*(T s, const BasicTensor<T>& x) {
  BasicTensor<T> out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = s * x.data[i];
  return out;
}

/// Conversion between the internal [-1,1] scale and the 0-255 pixel scale
/// in which the attack parameters (eps, gamma) are quoted.
inline float pixels_to_norm(float px) { return 2.0f * px / 255.0f; }
inline float norm_to_pixels(float v) { return v * 255.0f / 2.0f; }

inline ImageTensor to_pixel_units(const ImageTensor& x) {
  ImageTensor out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    out.data[i] = norm_to_pixels(x.data[i]);
  return out;
}

}  // namespace patchstrike
