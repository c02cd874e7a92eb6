#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "patchstrike/errors.hpp"
#include "patchstrike/rng.hpp"
#include "patchstrike/tensor.hpp"

namespace patchstrike {

// ---------------------------------------------------------------------------
// Layer descriptors
// ---------------------------------------------------------------------------

enum class LayerKind { kConv, kTanh, kAvgPool, kDense };

/// One layer of a classifier. Conv layers are full multichannel 2-D
/// convolutions, stride 1, zero "same" padding, optional dilation. Dense
/// layers flatten their input implicitly. The pointwise nonlinearity is
/// tanh everywhere: it is smooth, so analytic gradients can be validated
/// against central finite differences without kink artifacts.
struct LayerSpec {
  LayerKind kind;
  int in_ch = 0, out_ch = 0, ksize = 0, dilation = 1;  // conv
  int pool = 0;                                        // avgpool
  int in_dim = 0, out_dim = 0;                         // dense

  static LayerSpec conv(int in_ch, int out_ch, int k, int dilation = 1) {
    LayerSpec s;
    s.kind = LayerKind::kConv;
    s.in_ch = in_ch;
    s.out_ch = out_ch;
    s.ksize = k;
    s.dilation = dilation;
    return s;
  }
  static LayerSpec tanh() {
    LayerSpec s;
    s.kind = LayerKind::kTanh;
    return s;
  }
  static LayerSpec avgpool(int k) {
    LayerSpec s;
    s.kind = LayerKind::kAvgPool;
    s.pool = k;
    return s;
  }
  static LayerSpec dense(int in_dim, int out_dim) {
    LayerSpec s;
    s.kind = LayerKind::kDense;
    s.in_dim = in_dim;
    s.out_dim = out_dim;
    return s;
  }

  std::size_t weight_count() const {
    switch (kind) {
      case LayerKind::kConv:
        return static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize + out_ch;
      case LayerKind::kDense:
        return static_cast<std::size_t>(out_dim) * in_dim + out_dim;
      default:
        return 0;
    }
  }

  bool operator==(const LayerSpec&) const = default;
};

struct Shape3 {
  int c = 0, h = 0, w = 0;
  bool operator==(const Shape3&) const = default;
};

/// Walk the layer list from an input shape, validating chain consistency.
/// Returns the shape after every layer (size layers+1, index 0 = input).
inline std::vector<Shape3> chain_shapes(const std::vector<LayerSpec>& layers,
                                        Shape3 input) {
  std::vector<Shape3> shapes{input};
  Shape3 cur = input;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv: {
        if (l.ksize < 1 || l.ksize % 2 == 0)
          throw ConfigError("conv kernel size must be odd");
        if (l.in_ch != cur.c)
          throw ConfigError("conv in_ch " + std::to_string(l.in_ch) +
                            " != incoming channels " + std::to_string(cur.c));
        cur.c = l.out_ch;  // same padding keeps h, w
        break;
      }
      case LayerKind::kTanh:
        break;
      case LayerKind::kAvgPool:
        if (l.pool < 1 || cur.h % l.pool != 0 || cur.w % l.pool != 0)
          throw ConfigError("avgpool must divide the spatial size evenly");
        cur.h /= l.pool;
        cur.w /= l.pool;
        break;
      case LayerKind::kDense:
        if (l.in_dim != cur.c * cur.h * cur.w)
          throw ConfigError("dense in_dim " + std::to_string(l.in_dim) +
                            " != incoming size " +
                            std::to_string(cur.c * cur.h * cur.w));
        cur = Shape3{l.out_dim, 1, 1};
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// A trained classifier. Weights are float32 and immutable once
/// trained_flag is set; nothing in the attack or evaluation path mutates a
/// model, so concurrent reads are safe.
struct Model {
  std::string arch_tag;
  std::vector<LayerSpec> layers;
  std::vector<std::vector<float>> weights;  // per layer; empty for tanh/pool
  Shape3 input_shape;
  int num_classes = 0;
  bool trained_flag = false;
  std::uint64_t training_seed = 0;
  bool adversarially_trained = false;

  /// Stable identifier used in reports and weight-file names.
  std::string id() const {
    return arch_tag + "_s" + std::to_string(training_seed) +
           (adversarially_trained ? "_adv" : "");
  }

  void validate() const {
    const auto shapes = chain_shapes(layers, input_shape);
    if (shapes.back() != Shape3{num_classes, 1, 1})
      throw ConfigError("model " + arch_tag + " does not end in " +
                        std::to_string(num_classes) + " logits");
    if (weights.size() != layers.size())
      throw ConfigError("model weight list length mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (weights[i].size() != layers[i].weight_count())
        throw ConfigError("layer " + std::to_string(i) + " weight size mismatch");
    for (const auto& w : weights)
      for (float v : w)
        if (!std::isfinite(v)) throw ComputeError("non-finite weight");
  }
};

// ---------------------------------------------------------------------------
// Architecture registry
// ---------------------------------------------------------------------------

/// Four desk-scale architectures with deliberately different receptive
/// fields, so independently trained models key on different image regions:
///   cnn-a  deep stack of 3x3 convolutions
///   cnn-b  shallow 5x5 convolutions at full resolution
///   cnn-c  aggressive pooling before any convolution
///   cnn-d  dilated 3x3 convolutions (sparse wide receptive field)
inline const std::vector<std::string>& registered_architectures() {
  static const std::vector<std::string> tags{"cnn-a", "cnn-b", "cnn-c", "cnn-d"};
  return tags;
}

inline std::vector<LayerSpec> make_architecture(const std::string& tag,
                                                Shape3 input, int num_classes) {
  const int c = input.c, h = input.h, w = input.w;
  std::vector<LayerSpec> L;
  if (tag == "cnn-a") {
    L = {LayerSpec::conv(c, 8, 3),  LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::conv(8, 12, 3), LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::conv(12, 16, 3), LayerSpec::tanh(),
         LayerSpec::dense(16 * (h / 4) * (w / 4), num_classes)};
  } else if (tag == "cnn-b") {
    L = {LayerSpec::conv(c, 5, 5),  LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::conv(5, 10, 5), LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::dense(10 * (h / 4) * (w / 4), num_classes)};
  } else if (tag == "cnn-c") {
    L = {LayerSpec::avgpool(2),
         LayerSpec::conv(c, 8, 3),  LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::conv(8, 16, 3), LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::dense(16 * (h / 8) * (w / 8), num_classes)};
  } else if (tag == "cnn-d") {
    L = {LayerSpec::conv(c, 8, 3, 2),  LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::conv(8, 12, 3, 2), LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::conv(12, 16, 3),   LayerSpec::tanh(), LayerSpec::avgpool(2),
         LayerSpec::dense(16 * (h / 8) * (w / 8), num_classes)};
  } else {
    throw ConfigError("unknown arch_tag: " + tag);
  }
  chain_shapes(L, input);  // validate
  return L;
}

/// Xavier-uniform weights, zero biases, fully determined by the seed.
inline Model make_untrained_model(const std::string& tag, Shape3 input,
                                  int num_classes, std::uint64_t seed) {
  Model m;
  m.arch_tag = tag;
  m.layers = make_architecture(tag, input, num_classes);
  m.input_shape = input;
  m.num_classes = num_classes;
  m.training_seed = seed;
  m.weights.resize(m.layers.size());
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const auto& l = m.layers[li];
    m.weights[li].assign(l.weight_count(), 0.0f);
    if (l.kind == LayerKind::kConv) {
      const double fan_in = static_cast<double>(l.in_ch) * l.ksize * l.ksize;
      const double fan_out = static_cast<double>(l.out_ch) * l.ksize * l.ksize;
      const float lim = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));
      Rng rng = make_rng(seed, 0x11aa00 + li);
      const std::size_t n = m.weights[li].size() - l.out_ch;  // biases stay 0
      for (std::size_t i = 0; i < n; ++i)
        m.weights[li][i] = uniform_float(rng, -lim, lim);
    } else if (l.kind == LayerKind::kDense) {
      const float lim =
          static_cast<float>(std::sqrt(6.0 / (l.in_dim + l.out_dim)));
      Rng rng = make_rng(seed, 0x22bb00 + li);
      const std::size_t n = m.weights[li].size() - l.out_dim;
      for (std::size_t i = 0; i < n; ++i)
        m.weights[li][i] = uniform_float(rng, -lim, lim);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <typename T>
struct ForwardCache {
  std::vector<BasicTensor<T>> acts;  // acts[0] = input, acts[i+1] = layer i out
  std::vector<T> logits;
};

namespace detail {

template <typename T>
void conv_forward(const LayerSpec& l, const std::vector<float>& w,
                  const BasicTensor<T>& x, BasicTensor<T>& y) {
  const int H = x.height, W = x.width;
  const int k = l.ksize, half = k / 2, d = l.dilation;
  const std::size_t wstride = static_cast<std::size_t>(l.in_ch) * k * k;
  const float* bias = w.data() + static_cast<std::size_t>(l.out_ch) * wstride;
  for (int o = 0; o < l.out_ch; ++o) {
    T* ybase = &y.at(o, 0, 0);
    const T b = static_cast<T>(bias[o]);
    for (int i = 0; i < H * W; ++i) ybase[i] = b;
    for (int ci = 0; ci < l.in_ch; ++ci) {
      const float* wk = w.data() + o * wstride +
                        static_cast<std::size_t>(ci) * k * k;
      for (int u = 0; u < k; ++u) {
        const int dy0 = d * (u - half);
        const int i_lo = std::max(0, -dy0), i_hi = std::min(H, H - dy0);
        for (int v = 0; v < k; ++v) {
          const int dx0 = d * (v - half);
          const T wv = static_cast<T>(wk[u * k + v]);
          const int j_lo = std::max(0, -dx0), j_hi = std::min(W, W - dx0);
          for (int i = i_lo; i < i_hi; ++i) {
            T* yrow = ybase + static_cast<std::size_t>(i) * W;
            const T* xrow = &x.at(ci, i + dy0, 0) + dx0;
            for (int j = j_lo; j < j_hi; ++j) yrow[j] += wv * xrow[j];
          }
        }
      }
    }
  }
}

/// Backward pass of the conv layer. Fills dx (same shape as x) and, when
/// dw is non-null, accumulates weight/bias gradients into it.
template <typename T>
void conv_backward(const LayerSpec& l, const std::vector<float>& w,
                   const BasicTensor<T>& x, const BasicTensor<T>& dy,
                   BasicTensor<T>& dx, std::vector<T>* dw) {
  const int H = x.height, W = x.width;
  const int k = l.ksize, half = k / 2, d = l.dilation;
  const std::size_t wstride = static_cast<std::size_t>(l.in_ch) * k * k;
  for (int o = 0; o < l.out_ch; ++o) {
    const T* dybase = &dy.at(o, 0, 0);
    if (dw) {
      T acc = T(0);
      for (int i = 0; i < H * W; ++i) acc += dybase[i];
      (*dw)[static_cast<std::size_t>(l.out_ch) * wstride + o] += acc;
    }
    for (int ci = 0; ci < l.in_ch; ++ci) {
      const float* wk =
          w.data() + o * wstride + static_cast<std::size_t>(ci) * k * k;
      for (int u = 0; u < k; ++u) {
        const int dy0 = d * (u - half);
        const int i_lo = std::max(0, -dy0), i_hi = std::min(H, H - dy0);
        for (int v = 0; v < k; ++v) {
          const int dx0 = d * (v - half);
          const int j_lo = std::max(0, -dx0), j_hi = std::min(W, W - dx0);
          const T wv = static_cast<T>(wk[u * k + v]);
          T wacc = T(0);
          for (int i = i_lo; i < i_hi; ++i) {
            const T* dyrow = dybase + static_cast<std::size_t>(i) * W;
            const T* xrow = &x.at(ci, i + dy0, 0) + dx0;
            T* dxrow = &dx.at(ci, i + dy0, 0) + dx0;
            for (int j = j_lo; j < j_hi; ++j) {
              dxrow[j] += wv * dyrow[j];
              wacc += dyrow[j] * xrow[j];
            }
          }
          if (dw)
            (*dw)[o * wstride + static_cast<std::size_t>(ci) * k * k + u * k + v] += wacc;
        }
      }
    }
  }
}

}  // namespace detail

/// Run the network; the cache keeps every activation for backprop.
template <typename T>
std::vector<T> forward_logits(const Model& m, const BasicTensor<T>& x,
                              ForwardCache<T>* cache = nullptr) {
  if (x.channels != m.input_shape.c || x.height != m.input_shape.h ||
      x.width != m.input_shape.w)
    throw ConfigError("forward_logits: input shape " + x.shape_str() +
                      " does not match model " + m.arch_tag);
  ForwardCache<T> local;
  ForwardCache<T>& cc = cache ? *cache : local;
  cc.acts.clear();
  cc.acts.push_back(x);
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const auto& l = m.layers[li];
    const BasicTensor<T>& in = cc.acts.back();
    switch (l.kind) {
      case LayerKind::kConv: {
        BasicTensor<T> out(l.out_ch, in.height, in.width);
        detail::conv_forward(l, m.weights[li], in, out);
        cc.acts.push_back(std::move(out));
        break;
      }
      case LayerKind::kTanh: {
        BasicTensor<T> out(in.channels, in.height, in.width);
        for (std::size_t i = 0; i < in.data.size(); ++i)
          out.data[i] = std::tanh(in.data[i]);
        cc.acts.push_back(std::move(out));
        break;
      }
      case LayerKind::kAvgPool: {
        const int p = l.pool;
        BasicTensor<T> out(in.channels, in.height / p, in.width / p);
        const T inv = T(1) / static_cast<T>(p * p);
        for (int c = 0; c < out.channels; ++c)
          for (int y = 0; y < out.height; ++y)
            for (int xx = 0; xx < out.width; ++xx) {
              T acc = T(0);
              for (int u = 0; u < p; ++u)
                for (int v = 0; v < p; ++v)
                  acc += in.at(c, y * p + u, xx * p + v);
              out.at(c, y, xx) = acc * inv;
            }
        cc.acts.push_back(std::move(out));
        break;
      }
      case LayerKind::kDense: {
        BasicTensor<T> out(l.out_dim, 1, 1);
        const float* w = m.weights[li].data();
        const float* bias = w + static_cast<std::size_t>(l.out_dim) * l.in_dim;
        for (int o = 0; o < l.out_dim; ++o) {
          T acc = static_cast<T>(bias[o]);
          const float* row = w + static_cast<std::size_t>(o) * l.in_dim;
          for (int i = 0; i < l.in_dim; ++i)
            acc += static_cast<T>(row[i]) * in.data[i];
          out.data[o] = acc;
        }
        cc.acts.push_back(std::move(out));
        break;
      }
    }
  }
  cc.logits.assign(cc.acts.back().data.begin(), cc.acts.back().data.end());
  for (const T v : cc.logits)
    if (!std::isfinite(static_cast<double>(v)))
      throw ComputeError("non-finite logit from model " + m.arch_tag);
  return cc.logits;
}

/// -log softmax(logits)[y], evaluated with the log-sum-exp trick in double.
template <typename T>
double cross_entropy(const std::vector<T>& logits, int y) {
  if (y < 0 || y >= static_cast<int>(logits.size()))
    throw ConfigError("cross_entropy: label out of range");
  double mx = -1e300;
  for (const T v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (const T v : logits) sum += std::exp(static_cast<double>(v) - mx);
  return (mx + std::log(sum)) - static_cast<double>(logits[y]);
}

/// softmax(logits) - onehot(y): the logit gradient of cross_entropy.
template <typename T>
std::vector<T> cross_entropy_logit_grad(const std::vector<T>& logits, int y) {
  double mx = -1e300;
  for (const T v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (const T v : logits) sum += std::exp(static_cast<double>(v) - mx);
  std::vector<T> g(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - mx) / sum;
    g[i] = static_cast<T>(p - (static_cast<int>(i) == y ? 1.0 : 0.0));
  }
  return g;
}

template <typename T>
struct Gradients {
  BasicTensor<T> input;
  std::vector<std::vector<T>> weights;  // empty unless requested
};

/// Backpropagate cross_entropy(forward(x), y) through the cached forward
/// pass. Weight gradients are only produced when want_weight_grads is set
/// (training); the attack loop needs just the input gradient.
template <typename T>
Gradients<T> backward(const Model& m, const ForwardCache<T>& cache, int y,
                      bool want_weight_grads = false) {
  Gradients<T> g;
  if (want_weight_grads) {
    g.weights.resize(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i)
      g.weights[i].assign(m.weights[i].size(), T(0));
  }
  const auto dlogits = cross_entropy_logit_grad(cache.logits, y);
  BasicTensor<T> delta(static_cast<int>(dlogits.size()), 1, 1);
  delta.data.assign(dlogits.begin(), dlogits.end());

  for (int li = static_cast<int>(m.layers.size()) - 1; li >= 0; --li) {
    const auto& l = m.layers[li];
    const BasicTensor<T>& in = cache.acts[li];
    const BasicTensor<T>& out = cache.acts[li + 1];
    switch (l.kind) {
      case LayerKind::kConv: {
        BasicTensor<T> dx(in.channels, in.height, in.width);
        detail::conv_backward(l, m.weights[li], in, delta, dx,
                              want_weight_grads ? &g.weights[li] : nullptr);
        delta = std::move(dx);
        break;
      }
      case LayerKind::kTanh: {
        BasicTensor<T> dx(in.channels, in.height, in.width);
        for (std::size_t i = 0; i < in.data.size(); ++i) {
          const T t = out.data[i];
          dx.data[i] = delta.data[i] * (T(1) - t * t);
        }
        delta = std::move(dx);
        break;
      }
      case LayerKind::kAvgPool: {
        const int p = l.pool;
        BasicTensor<T> dx(in.channels, in.height, in.width);
        const T inv = T(1) / static_cast<T>(p * p);
        for (int c = 0; c < delta.channels; ++c)
          for (int y2 = 0; y2 < delta.height; ++y2)
            for (int x2 = 0; x2 < delta.width; ++x2) {
              const T v = delta.at(c, y2, x2) * inv;
              for (int u = 0; u < p; ++u)
                for (int v2 = 0; v2 < p; ++v2)
                  dx.at(c, y2 * p + u, x2 * p + v2) = v;
            }
        delta = std::move(dx);
        break;
      }
      case LayerKind::kDense: {
        BasicTensor<T> dx(in.channels, in.height, in.width);
        const float* w = m.weights[li].data();
        for (int o = 0; o < l.out_dim; ++o) {
          const T dv = delta.data[o];
          const float* row = w + static_cast<std::size_t>(o) * l.in_dim;
          for (int i = 0; i < l.in_dim; ++i)
            dx.data[i] += static_cast<T>(row[i]) * dv;
        }
        if (want_weight_grads) {
          T* dwp = g.weights[li].data();
          for (int o = 0; o < l.out_dim; ++o) {
            const T dv = delta.data[o];
            T* dwrow = dwp + static_cast<std::size_t>(o) * l.in_dim;
            for (int i = 0; i < l.in_dim; ++i) dwrow[i] += dv * in.data[i];
            dwp[static_cast<std::size_t>(l.out_dim) * l.in_dim + o] += dv;
          }
        }
        delta = std::move(dx);
        break;
      }
    }
  }
  g.input = std::move(delta);
  return g;
}

/// Analytic gradient of cross_entropy(forward_logits(m, x), y) w.r.t. x.
template <typename T>
BasicTensor<T> input_gradient(const Model& m, const BasicTensor<T>& x, int y) {
  if (y < 0 || y >= m.num_classes)
    throw ConfigError("input_gradient: label out of range");
  ForwardCache<T> cache;
  forward_logits(m, x, &cache);
  return backward(m, cache, y, false).input;
}

/// Argmax of the logits; ties resolve to the lowest class index.
template <typename T>
int predict(const Model& m, const BasicTensor<T>& x) {
  const auto logits = forward_logits(m, x);
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

}  // namespace patchstrike
