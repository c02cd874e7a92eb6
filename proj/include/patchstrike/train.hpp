#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "patchstrike/dataset.hpp"
#include "patchstrike/errors.hpp"
#include "patchstrike/model.hpp"
#include "patchstrike/rng.hpp"
#include "patchstrike/tensor.hpp"

namespace patchstrike {

/// Fixed training schedule. Plain SGD, no momentum or weight decay: every
/// run is a pure function of (arch_tag, dataset, seed, adversarial flag,
/// options), reproducible to the bit.
struct TrainOptions {
  int epochs = 4;
  int batch_size = 32;
  float lr0 = 0.20f;
  float lr_decay = 0.70f;        // per-epoch multiplier
  float adv_eps_pixels = 8.0f;   // FGSM budget for the adversarial proxy
};

/// Single-step FGSM example used by the adversarial-training proxy.
inline ImageTensor fgsm_example(const Model& m, const ImageTensor& x, int y,
                                float eps_norm) {
  const ImageTensor g = input_gradient(m, x, y);
  ImageTensor out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const float s = static_cast<float>((g.data[i] > 0.0f) - (g.data[i] < 0.0f));
    out.data[i] = std::min(1.0f, std::max(-1.0f, x.data[i] + eps_norm * s));
  }
  return out;
}

/// Train a registered architecture on the dataset's train split.
///
/// With adversarial_training set, every batch is augmented with FGSM
/// examples at adv_eps_pixels crafted against the current weights -- a
/// desk-scale stand-in for ensemble adversarial training. The resulting
/// model resists gradient-sign attacks noticeably better than its plain
/// twin while giving up a little clean accuracy.
inline Model train_model_with(const std::string& arch_tag, const Dataset& ds,
                              std::uint64_t seed, bool adversarial_training,
                              const TrainOptions& opt) {
  const auto train_idx = ds.train_indices();
  if (train_idx.empty()) throw ConfigError("train_model: empty train split");
  if (ds.images.empty()) throw ConfigError("train_model: empty dataset");
  const Shape3 in_shape{ds.images[0].channels, ds.images[0].height,
                        ds.images[0].width};
  Model m = make_untrained_model(arch_tag, in_shape, ds.num_classes, seed);
  m.adversarially_trained = adversarial_training;

  const float adv_eps = pixels_to_norm(opt.adv_eps_pixels);
  std::vector<std::size_t> order(train_idx);
  Rng shuffle_rng = make_rng(seed, 0x5511);

  std::vector<std::vector<float>> acc(m.layers.size());
  float lr = opt.lr0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    deterministic_shuffle(order, shuffle_rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      for (std::size_t li = 0; li < m.layers.size(); ++li)
        acc[li].assign(m.weights[li].size(), 0.0f);
      int grads_in_batch = 0;
      auto accumulate = [&](const ImageTensor& x, int y) {
        ForwardCache<float> cache;
        forward_logits(m, x, &cache);
        const auto g = backward(m, cache, y, true);
        for (std::size_t li = 0; li < m.layers.size(); ++li)
          for (std::size_t i = 0; i < acc[li].size(); ++i)
            acc[li][i] += g.weights[li][i];
        ++grads_in_batch;
      };
      for (std::size_t b = start; b < end; ++b) {
        const ImageTensor& x = ds.images[order[b]];
        const int y = ds.labels[order[b]];
        if (adversarial_training) accumulate(fgsm_example(m, x, y, adv_eps), y);
        accumulate(x, y);
      }
      const float scale = lr / static_cast<float>(grads_in_batch);
      for (std::size_t li = 0; li < m.layers.size(); ++li)
        for (std::size_t i = 0; i < m.weights[li].size(); ++i)
          m.weights[li][i] -= scale * acc[li][i];
    }
    lr *= opt.lr_decay;
  }
  m.trained_flag = true;
  m.validate();
  return m;
}

inline Model train_model(const std::string& arch_tag, const Dataset& ds,
                         std::uint64_t seed, bool adversarial_training = false) {
  return train_model_with(arch_tag, ds, seed, adversarial_training,
                          TrainOptions{});
}

/// Fraction of a split the model classifies correctly.
inline double accuracy(const Model& m, const Dataset& ds, Split split) {
  long correct = 0, total = 0;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    if (ds.split[i] != split) continue;
    correct += (predict(m, ds.images[i]) == ds.labels[i]);
    ++total;
  }
  if (total == 0) throw ConfigError("accuracy: empty split");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace patchstrike
