#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "patchstrike/errors.hpp"
#include "patchstrike/model.hpp"
#include "patchstrike/rng.hpp"
#include "patchstrike/tensor.hpp"

namespace patchstrike {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct AttackFlags {
  bool momentum = false;     // accumulate an L1-normalized gradient average
  bool diversity = false;    // random resize+pad of the input each iteration
  bool translation = false;  // smooth the gradient with a Gaussian kernel
  bool patchwise = false;    // amplified steps + overflow projection
  bool operator==(const AttackFlags&) const = default;
};

/// All attack parameters. eps and gamma are quoted on the 0-255 pixel scale
/// (the convention attack budgets are reported in) and converted to the
/// [-1,1] image scale internally: eps_norm = 2*eps/255.
struct AttackConfig {
  std::string name = "custom";  // preset name, used in report filenames
  float eps_pixels = 16.0f;
  int iterations = 10;
  float beta = 1.0f;          // amplification factor on the base step eps/T
  float gamma_pixels = 16.0f; // projection strength for cut noise
  float mu = 1.0f;            // momentum decay
  float prob = 0.7f;          // diversity transform probability
  int ti_kernel_size = 15;
  int proj_kernel_size = 3;
  AttackFlags flags;
  bool targeted = false;
  int target_label = -1;
  std::uint64_t seed = 0;

  float eps_norm() const { return pixels_to_norm(eps_pixels); }
  float gamma_norm() const { return pixels_to_norm(gamma_pixels); }

  void validate() const {
    // eps = 0 is admitted as the degenerate "no perturbation" budget; the
    // eval harness uses it as a calibration point.
    if (eps_pixels < 0.0f) throw ConfigError("eps must be >= 0");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (beta < 1.0f) throw ConfigError("beta must be >= 1");
    if (gamma_pixels < 0.0f) throw ConfigError("gamma must be >= 0");
    if (mu < 0.0f) throw ConfigError("mu must be >= 0");
    if (prob < 0.0f || prob > 1.0f) throw ConfigError("prob must be in [0,1]");
    if (ti_kernel_size < 1 || ti_kernel_size % 2 == 0)
      throw ConfigError("ti kernel size must be odd");
    if (proj_kernel_size % 2 == 0)
      throw ConfigError("project kernel size must be odd");
    if (flags.patchwise && proj_kernel_size < 3)
      throw ConfigError("project kernel size must be >= 3");
    if (targeted && target_label < 0)
      throw ConfigError("targeted attack needs a target label");
  }
};

/// Per-attack evolving state. a is the cumulative amplification noise, c the
/// cut noise, g the momentum accumulator; all start at zero.
struct AttackState {
  ImageTensor x_adv;
  ImageTensor a;
  ImageTensor c;
  ImageTensor g;
  int iteration = 0;
  std::vector<double> clip_loss_trace;  // L1 mass removed by the eps clip
  int degenerate_gradient_warnings = 0;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Uniform project kernel: zero center, 1/(k^2-1) elsewhere, sum 1. It
/// redistributes each pixel's overflowed noise onto its neighborhood.
inline Kernel2D project_kernel(int k_w) {
  if (k_w < 3 || k_w % 2 == 0)
    throw ConfigError("project kernel size must be odd and >= 3, got " +
                      std::to_string(k_w));
  Kernel2D k(k_w, 1.0f / (static_cast<float>(k_w) * k_w - 1.0f));
  k.at(k_w / 2, k_w / 2) = 0.0f;
  return k;
}

/// Gaussian smoothing kernel for the translation-invariant variant:
/// sigma = k/6, normalized to sum 1, built as an outer product of the 1-D
/// profile. k = 1 yields the identity kernel.
inline Kernel2D ti_kernel(int k) {
  if (k < 1 || k % 2 == 0)
    throw ConfigError("ti kernel size must be odd, got " + std::to_string(k));
  const double sigma = static_cast<double>(k) / 6.0;
  const int half = k / 2;
  std::vector<double> g(k);
  double norm1 = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = i - half;
    g[i] = k == 1 ? 1.0 : std::exp(-d * d / (2.0 * sigma * sigma));
    norm1 += g[i];
  }
  Kernel2D out(k);
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v)
      out.at(u, v) = static_cast<float>(g[u] * g[v] / (norm1 * norm1));
  return out;
}

/// Cut noise: the part of the cumulative noise that exceeds the eps ball,
/// C = clip(|a| - eps, 0, inf) * sign(a), elementwise.
inline ImageTensor cut_noise(const ImageTensor& a, float eps_norm) {
  if (eps_norm < 0.0f) throw ConfigError("cut_noise: eps must be >= 0");
  ImageTensor out(a.channels, a.height, a.width);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const float v = a.data[i];
    float m = std::abs(v) - eps_norm;
    if (m < 0.0f) m = 0.0f;
    out.data[i] = m * static_cast<float>((v > 0.0f) - (v < 0.0f));
  }
  return out;
}

/// Input-diversity transform: with probability p, nearest-neighbor
/// downscale by a factor drawn from [0.85, 1) and zero-pad back at a random
/// offset; otherwise the input passes through untouched. The scaled height
/// is floor(h*s), so an applied transform always changes the image.
inline ImageTensor diverse_transform(const ImageTensor& x, float p, Rng& rng) {
  if (p < 0.0f || p > 1.0f) throw ConfigError("diverse_transform: bad p");
  const float u = uniform_float(rng);
  if (u >= p) return x;
  const float s = uniform_float(rng, 0.85f, 1.0f);
  const int nh = std::max(1, static_cast<int>(static_cast<float>(x.height) * s));
  const int nw = std::max(1, static_cast<int>(static_cast<float>(x.width) * s));
  const int oy = uniform_int(rng, 0, x.height - nh);
  const int ox = uniform_int(rng, 0, x.width - nw);
  ImageTensor out(x.channels, x.height, x.width);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < nh; ++y) {
      const int sy = y * x.height / nh;
      for (int xx = 0; xx < nw; ++xx) {
        const int sx = xx * x.width / nw;
        out.at(c, oy + y, ox + xx) = x.at(c, sy, sx);
      }
    }
  return out;
}

/// Momentum update g' = mu*g + grad/||grad||_1. An all-zero gradient cannot
/// be normalized; the step then decays the accumulator and reports the
/// degenerate draw through the flag instead of throwing mid-attack.
inline ImageTensor momentum_step(const ImageTensor& g, const ImageTensor& grad,
                                 float mu, bool* degenerate = nullptr) {
  detail::require_same_shape(g, grad, "momentum_step");
  const double norm = l1_norm(grad);
  ImageTensor out(g.channels, g.height, g.width);
  if (norm == 0.0) {
    if (degenerate) *degenerate = true;
    for (std::size_t i = 0; i < g.data.size(); ++i) out.data[i] = mu * g.data[i];
    return out;
  }
  if (degenerate) *degenerate = false;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    out.data[i] = mu * g.data[i] +
                  static_cast<float>(static_cast<double>(grad.data[i]) / norm);
  return out;
}

/// Per-iteration step size beta*eps/T, nudged down by at most a few ulps so
/// that T float additions of it never exceed beta*eps. Without the nudge,
/// rounding can push the accumulated noise past eps on the final iteration
/// of a beta=1 attack and spuriously trigger the overflow projection.
inline float attack_step_size(float eps_norm, float beta, int iterations) {
  float alpha = eps_norm * beta / static_cast<float>(iterations);
  if (!(alpha > 0.0f)) return 0.0f;
  const double bound = static_cast<double>(eps_norm) * static_cast<double>(beta);
  for (;;) {
    float sum = 0.0f;
    for (int t = 0; t < iterations; ++t) sum += alpha;
    if (static_cast<double>(sum) <= bound) break;
    alpha = std::nextafterf(alpha, 0.0f);
  }
  return alpha;
}

/// Equal-weight ensemble gradient: the gradient of the mean cross-entropy
/// over the listed models. Means are taken in double, narrowed to float.
inline ImageTensor mean_input_gradient(const std::vector<const Model*>& models,
                                       const ImageTensor& x, int y) {
  if (models.empty()) throw ConfigError("mean_input_gradient: no models");
  if (models.size() == 1) return input_gradient(*models[0], x, y);
  std::vector<double> acc(x.size(), 0.0);
  for (const Model* m : models) {
    const ImageTensor g = input_gradient(*m, x, y);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += static_cast<double>(g.data[i]);
  }
  ImageTensor out(x.channels, x.height, x.width);
  const double inv = 1.0 / static_cast<double>(models.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    out.data[i] = static_cast<float>(acc[i] * inv);
  return out;
}

// ---------------------------------------------------------------------------
// The attack loop
// ---------------------------------------------------------------------------

/// Generalized iterative gradient-sign attack. Exactly T gradient
/// evaluations; each iteration runs
///
///   input     = diversity ? D(x_adv) : x_adv
///   grad      = mean gradient over the substitute models (negated when
///               targeted), optionally Gaussian-smoothed (translation)
///   direction = momentum ? mu*g + grad/||grad||_1 : grad
///   step      = beta*eps/T * sign(direction)
///
/// and, with the patchwise flag, maintains the cumulative amplification
/// noise a. Once ||a||_inf reaches eps, the overflow C = cut_noise(a, eps)
/// is redistributed to neighboring pixels: both a and the image receive
/// gamma * sign(W_p * C). Every iterate is clipped to the eps ball around
/// the clean image and then to the valid range [-1,1].
inline AttackState run_attack(const std::vector<const Model*>& models,
                              const ImageTensor& x_clean, int y,
                              const AttackConfig& cfg) {
  cfg.validate();
  if (models.empty()) throw ConfigError("run_attack: no models");
  for (const Model* m : models) {
    if (!m) throw ConfigError("run_attack: null model");
    if (m->input_shape.c != x_clean.channels ||
        m->input_shape.h != x_clean.height || m->input_shape.w != x_clean.width)
      throw ConfigError("run_attack: model/input shape mismatch");
  }
  for (const float v : x_clean.data)
    if (v < -1.0f || v > 1.0f)
      throw ConfigError("run_attack: clean image outside [-1,1]");
  if (cfg.targeted) {
    if (cfg.target_label == y)
      throw ConfigError("run_attack: target label equals ground truth");
    if (cfg.target_label >= models[0]->num_classes)
      throw ConfigError("run_attack: target label out of range");
  }

  const float eps = cfg.eps_norm();
  const float gamma = cfg.gamma_norm();
  const float alpha = attack_step_size(eps, cfg.beta, cfg.iterations);
  const Kernel2D wp =
      cfg.flags.patchwise ? project_kernel(cfg.proj_kernel_size) : Kernel2D{};
  const Kernel2D ti =
      cfg.flags.translation ? ti_kernel(cfg.ti_kernel_size) : Kernel2D{};
  Rng rng = make_rng(cfg.seed, 0xa77ac4);

  const int C = x_clean.channels, H = x_clean.height, W = x_clean.width;
  AttackState st;
  st.x_adv = x_clean;
  st.a = ImageTensor(C, H, W);
  st.c = ImageTensor(C, H, W);
  st.g = ImageTensor(C, H, W);
  const int label = cfg.targeted ? cfg.target_label : y;

  for (int t = 0; t < cfg.iterations; ++t) {
    ImageTensor transformed;
    const ImageTensor* input = &st.x_adv;
    if (cfg.flags.diversity) {
      transformed = diverse_transform(st.x_adv, cfg.prob, rng);
      input = &transformed;
    }

    ImageTensor grad = mean_input_gradient(models, *input, label);
    if (cfg.targeted)
      for (auto& v : grad.data) v = -v;
    if (cfg.flags.translation) grad = conv2d_same(grad, ti);

    const ImageTensor* direction = &grad;
    if (cfg.flags.momentum) {
      bool degenerate = false;
      st.g = momentum_step(st.g, grad, cfg.mu, &degenerate);
      if (degenerate) ++st.degenerate_gradient_warnings;
      direction = &st.g;
    }

    ImageTensor step(C, H, W);
    for (std::size_t i = 0; i < step.data.size(); ++i) {
      const float v = direction->data[i];
      step.data[i] =
          alpha * static_cast<float>((v > 0.0f) - (v < 0.0f));
    }

    ImageTensor x_pre(C, H, W);
    if (cfg.flags.patchwise) {
      for (std::size_t i = 0; i < st.a.data.size(); ++i)
        st.a.data[i] += step.data[i];
      if (linf_norm(st.a) >= static_cast<double>(eps)) {
        st.c = cut_noise(st.a, eps);
        ImageTensor proj = conv2d_same(st.c, wp);
        for (std::size_t i = 0; i < proj.data.size(); ++i) {
          const float v = proj.data[i];
          proj.data[i] = gamma * static_cast<float>((v > 0.0f) - (v < 0.0f));
        }
        for (std::size_t i = 0; i < st.a.data.size(); ++i)
          st.a.data[i] += proj.data[i];
        for (std::size_t i = 0; i < x_pre.data.size(); ++i)
          x_pre.data[i] = st.x_adv.data[i] + step.data[i] + proj.data[i];
      } else {
        st.c = ImageTensor(C, H, W);
        for (std::size_t i = 0; i < x_pre.data.size(); ++i)
          x_pre.data[i] = st.x_adv.data[i] + step.data[i];
      }
    } else {
      for (std::size_t i = 0; i < x_pre.data.size(); ++i)
        x_pre.data[i] = st.x_adv.data[i] + step.data[i];
    }

    const ImageTensor x_eps = linf_clip(x_pre, x_clean, eps);
    double clipped_mass = 0.0;
    for (std::size_t i = 0; i < x_pre.data.size(); ++i)
      clipped_mass +=
          std::abs(static_cast<double>(x_pre.data[i]) - x_eps.data[i]);
    st.clip_loss_trace.push_back(clipped_mass);
    st.x_adv = clip_box(x_eps, -1.0f, 1.0f);
    st.iteration = t + 1;
  }
  return st;
}

inline AttackState run_attack(const Model& model, const ImageTensor& x_clean,
                              int y, const AttackConfig& cfg) {
  return run_attack(std::vector<const Model*>{&model}, x_clean, y, cfg);
}

/// Per-iteration L1 mass the eps-ball clip removed from the update; the
/// measurable cost of direct clipping that the projection strategy reuses.
inline std::vector<double> clipping_loss_diagnostic(const AttackState& st) {
  return st.clip_loss_trace;
}

}  // namespace patchstrike
