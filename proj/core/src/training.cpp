#include "vpr/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace vpr {
namespace {

// splitmix64 finaliser; derives independent per-sample streams from one seed.
std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor3 crop_and_normalize(const Tensor3& resized, std::size_t crop, std::size_t y0, std::size_t x0, bool flip,
                           std::span<const float> mean) {
  Tensor3 out(resized.channels(), crop, crop);
  for (std::size_t c = 0; c < resized.channels(); ++c) {
    const float m = c < mean.size() ? mean[c] : 0.0f;
    for (std::size_t y = 0; y < crop; ++y) {
      for (std::size_t x = 0; x < crop; ++x) {
        const std::size_t sx = flip ? x0 + crop - 1 - x : x0 + x;
        out.at(c, y, x) = resized.at(c, y0 + y, sx) / 255.0f - m;
      }
    }
  }
  return out;
}

Tensor3 resize_if_needed(const Tensor3& image, std::size_t size) {
  if (image.height() == size && image.width() == size) return image;
  return resize_bilinear(image, size, size);
}

std::size_t argmax(std::span<const float> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_dataset(const LabeledImages& data, const NetworkSpec& spec, const char* what) {
  if (data.images.size() != data.labels.size()) {
    throw ArgumentError(std::string(what) + ": " + std::to_string(data.images.size()) + " images but " +
                        std::to_string(data.labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] >= spec.num_classes) {
      throw ArgumentError(std::string(what) + ": label " + std::to_string(data.labels[i]) + " of sample " +
                          std::to_string(i) + " outside [0, " + std::to_string(spec.num_classes) + ")");
    }
    if (data.images[i].channels() != 3) {
      throw ShapeError(std::string(what) + ": sample " + std::to_string(i) + " has shape " +
                       data.images[i].shape().str() + ", expected 3 channels");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ArgumentError("lr_factor must lie in (0, 1)");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (lr_step_iters < 1) throw ArgumentError("lr_step_iters must be >= 1");
  if (!(base_lr > 0.0)) throw ArgumentError("base_lr must be positive");
  if (weight_decay < 0.0) throw ArgumentError("weight_decay must be non-negative");
}

void AugmentConfig::validate() const {
  if (crop_to < 1 || crop_to > resize_to) {
    throw ArgumentError("crop_to (" + std::to_string(crop_to) + ") must lie in [1, resize_to=" +
                        std::to_string(resize_to) + "]");
  }
}

Tensor3 resize_bilinear(const Tensor3& image, std::size_t out_height, std::size_t out_width) {
  if (image.empty() || out_height == 0 || out_width == 0) throw ShapeError("cannot resize an empty image");
  Tensor3 out(image.channels(), out_height, out_width);
  const double sy = static_cast<double>(image.height()) / static_cast<double>(out_height);
  const double sx = static_cast<double>(image.width()) / static_cast<double>(out_width);
  const auto max_y = static_cast<double>(image.height() - 1);
  const auto max_x = static_cast<double>(image.width() - 1);
  for (std::size_t y = 0; y < out_height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < image.channels(); ++c) {
        const double top = image.at(c, y0, x0) * (1 - wx) + image.at(c, y0, x1) * wx;
        const double bottom = image.at(c, y1, x0) * (1 - wx) + image.at(c, y1, x1) * wx;
        out.at(c, y, x) = static_cast<float>(top * (1 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

std::pair<std::size_t, std::size_t> crop_offset(std::size_t resized, std::size_t crop, PreprocessMode mode,
                                                CropMode train_crop, std::mt19937_64& rng) {
  if (crop > resized) throw ArgumentError("crop larger than image");
  const std::size_t slack = resized - crop;
  if (mode == PreprocessMode::kEval || train_crop == CropMode::kCenter) return {slack / 2, slack / 2};
  std::uniform_int_distribution<std::size_t> pick(0, slack);
  const std::size_t y = pick(rng);
  const std::size_t x = pick(rng);
  return {y, x};
}

Tensor3 preprocess(const Tensor3& image, const AugmentConfig& cfg, PreprocessMode mode, std::mt19937_64& rng,
                   std::span<const float> channel_mean) {
  if (image.channels() != 3) {
    throw ShapeError("preprocess expects a 3-channel image, got " + image.shape().str());
  }
  cfg.validate();
  const Tensor3 resized = resize_if_needed(image, cfg.resize_to);
  const auto [y0, x0] = crop_offset(cfg.resize_to, cfg.crop_to, mode, cfg.train_crop, rng);
  bool flip = false;
  if (mode == PreprocessMode::kTrain && cfg.horizontal_flip) flip = std::bernoulli_distribution(0.5)(rng);
  return crop_and_normalize(resized, cfg.crop_to, y0, x0, flip, channel_mean);
}

std::vector<float> channel_mean(std::span<const Tensor3> images) {
  if (images.empty()) return {};
  const std::size_t channels = images.front().channels();
  std::vector<double> sums(channels, 0.0);
  double count = 0;
  for (const Tensor3& img : images) {
    if (img.channels() != channels) throw ShapeError("channel_mean: mixed channel counts");
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0;
      for (float v : img.plane(c)) s += v;
      sums[c] += s / 255.0;
    }
    count += static_cast<double>(img.plane_size());
  }
  std::vector<float> mean(channels);
  for (std::size_t c = 0; c < channels; ++c) mean[c] = static_cast<float>(sums[c] / count);
  return mean;
}

double lr_at(std::size_t iter, const TrainConfig& cfg) {
  const std::size_t step = iter / cfg.lr_step_iters;
  return cfg.base_lr * std::pow(cfg.lr_factor, static_cast<double>(step));
}

void sgd_step(ModelWeights& weights, const ModelWeights& grads, Velocity& velocity, const TrainConfig& cfg,
              std::size_t iter) {
  if (grads.layers.size() != weights.layers.size() || velocity.layers.size() != weights.layers.size()) {
    throw ShapeError("sgd_step: weights, gradients and velocity cover different layer counts");
  }
  const auto lr = static_cast<float>(lr_at(iter, cfg));
  const auto momentum = static_cast<float>(cfg.momentum);
  const auto decay = static_cast<float>(cfg.weight_decay);
  auto update = [&](std::vector<float>& w, const std::vector<float>& g, std::vector<float>& v, const std::string& name) {
    if (g.size() != w.size() || v.size() != w.size()) {
      throw ShapeError("sgd_step: layer '" + name + "' has " + std::to_string(w.size()) + " weights, " +
                       std::to_string(g.size()) + " gradients, " + std::to_string(v.size()) + " velocities");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum * v[i] - lr * (g[i] + decay * w[i]);
      w[i] += v[i];
    }
  };
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    const std::string& name = l < weights.names.size() ? weights.names[l] : std::to_string(l);
    update(weights.layers[l].weights, grads.layers[l].weights, velocity.layers[l].weights, name);
    update(weights.layers[l].biases, grads.layers[l].biases, velocity.layers[l].biases, name);
  }
}

void TrainLog::write(std::ostream& out, std::size_t every) const {
  out << "iteration lr loss val_accuracy\n";
  char buf[128];
  every = std::max<std::size_t>(every, 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (i != 0 && i + 1 != rows.size() && (row.iteration + 1) % every != 0) continue;
    if (row.val_accuracy >= 0) {
      std::snprintf(buf, sizeof buf, "%zu %.9g %.9g %.6f\n", row.iteration, row.lr, row.loss, row.val_accuracy);
    } else {
      std::snprintf(buf, sizeof buf, "%zu %.9g %.9g -\n", row.iteration, row.lr, row.loss);
    }
    out << buf;
  }
}

AugmentConfig default_augment_for(const NetworkSpec& spec) {
  AugmentConfig cfg;
  if (spec.input.height == 227 && spec.input.width == 227) return cfg;
  cfg.crop_to = spec.input.height;
  cfg.resize_to = spec.input.height + spec.input.height / 8;
  return cfg;
}

Tensor3 prepare_input(const Tensor3& image, const NetworkSpec& spec, const ModelWeights& weights,
                      const AugmentConfig& aug_cfg) {
  if (aug_cfg.crop_to != spec.input.height || spec.input.height != spec.input.width) {
    throw ShapeError("crop size " + std::to_string(aug_cfg.crop_to) + " does not produce network input " +
                     spec.input.str());
  }
  std::mt19937_64 unused(0);
  return preprocess(image, aug_cfg, PreprocessMode::kEval, unused, weights.channel_mean);
}

double accuracy(const NetworkSpec& spec, const ModelWeights& weights, const LabeledImages& data,
                const AugmentConfig& aug_cfg) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto out = forward(spec, weights, prepare_input(data.images[i], spec, weights, aug_cfg));
    if (argmax(out.probabilities) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const LabeledImages& train_set, const LabeledImages& val_set, const NetworkSpec& spec,
                  const TrainConfig& train_cfg, const AugmentConfig& aug_cfg, const TrainProgress& progress) {
  return train(train_set, val_set, spec, init_weights(spec, train_cfg.seed), train_cfg, aug_cfg, progress);
}

TrainResult train(const LabeledImages& train_set, const LabeledImages& val_set, const NetworkSpec& spec,
                  ModelWeights initial, const TrainConfig& train_cfg, const AugmentConfig& aug_cfg,
                  const TrainProgress& progress) {
  train_cfg.validate();
  aug_cfg.validate();
  if (train_set.size() == 0) throw TrainingError("training set is empty");
  check_dataset(train_set, spec, "training set");
  check_dataset(val_set, spec, "validation set");
  check_weights(spec, initial);
  if (aug_cfg.crop_to != spec.input.height || spec.input.height != spec.input.width) {
    throw ShapeError("crop size " + std::to_string(aug_cfg.crop_to) + " does not produce network input " +
                     spec.input.str());
  }

  TrainResult result;
  ModelWeights& weights = result.weights;
  weights = std::move(initial);
  weights.channel_mean = channel_mean(train_set.images);
  Velocity velocity = weights.zeros_like();

  // Resizing is deterministic, so it is done once; crops are drawn per use.
  std::vector<Tensor3> resized;
  resized.reserve(train_set.size());
  for (const Tensor3& img : train_set.images) resized.push_back(resize_if_needed(img, aug_cfg.resize_to));

  std::mt19937_64 shuffle_rng(mix(train_cfg.seed, 0x5EED));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::size_t cursor = 0;

  const std::size_t log_every = std::max<std::size_t>(train_cfg.log_every, 1);
  for (std::size_t iter = 0; iter < train_cfg.max_iters; ++iter) {
    ModelWeights grads = weights.zeros_like();
    double loss = 0;
    for (std::size_t b = 0; b < train_cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      std::mt19937_64 rng(mix(mix(train_cfg.seed, iter), b));
      const auto [y0, x0] = crop_offset(aug_cfg.resize_to, aug_cfg.crop_to, PreprocessMode::kTrain,
                                        aug_cfg.train_crop, rng);
      const bool flip = aug_cfg.horizontal_flip && std::bernoulli_distribution(0.5)(rng);
      const Tensor3 input = crop_and_normalize(resized[idx], aug_cfg.crop_to, y0, x0, flip, weights.channel_mean);
      const auto tape = forward_with_tape(spec, weights, input);
      const auto sample = backward(spec, weights, tape, train_set.labels[idx]);
      loss += sample.loss;
      for (std::size_t l = 0; l < grads.layers.size(); ++l) {
        auto& dst = grads.layers[l];
        const auto& src = sample.gradients.layers[l];
        for (std::size_t i = 0; i < dst.weights.size(); ++i) dst.weights[i] += src.weights[i];
        for (std::size_t i = 0; i < dst.biases.size(); ++i) dst.biases[i] += src.biases[i];
      }
    }
    const auto inv = 1.0f / static_cast<float>(train_cfg.batch_size);
    for (auto& layer : grads.layers) {
      for (float& g : layer.weights) g *= inv;
      for (float& g : layer.biases) g *= inv;
    }
    loss /= static_cast<double>(train_cfg.batch_size);
    if (!std::isfinite(loss)) {
      throw TrainingError("non-finite loss at iteration " + std::to_string(iter));
    }
    TrainLogRow row{iter, lr_at(iter, train_cfg), loss, -1.0};
    sgd_step(weights, grads, velocity, train_cfg, iter);
    const bool last = iter + 1 == train_cfg.max_iters;
    if (val_set.size() > 0 && ((iter + 1) % log_every == 0 || last)) {
      row.val_accuracy = accuracy(spec, weights, val_set, aug_cfg);
    }
    result.log.rows.push_back(row);
    if (progress) progress(iter, loss);
  }
  return result;
}

namespace {

using WeightsD = BasicModelWeights<double>;

// ReLU sign pattern plus pool winners; a change means the finite difference
// straddled a kink.
struct KinkSignature {
  std::vector<bool> relu_mask;
  std::vector<std::uint32_t> pool_winners;
  bool operator==(const KinkSignature&) const = default;
};

KinkSignature signature(const NetworkSpec& spec, const ForwardTape<double>& tape) {
  KinkSignature sig;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (std::holds_alternative<ReluLayer>(spec.layers[i].kind)) {
      for (double v : tape.inputs[i].data()) sig.relu_mask.push_back(v > 0.0);
    } else if (std::holds_alternative<MaxPoolLayer>(spec.layers[i].kind)) {
      const auto& idx = tape.pool_indices[i].indices;
      sig.pool_winners.insert(sig.pool_winners.end(), idx.begin(), idx.end());
    }
  }
  return sig;
}

double& param_ref(WeightsD& w, std::size_t layer, std::size_t index) {
  auto& p = w.layers[layer];
  return index < p.weights.size() ? p.weights[index] : p.biases[index - p.weights.size()];
}

}  // namespace

GradCheckReport grad_check(const NetworkSpec& spec, const ModelWeights& weights, const Tensor3& sample,
                           std::size_t target, const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw ArgumentError("grad_check epsilon must be positive");
  check_weights(spec, weights);
  WeightsD w = weights.cast<double>();
  const Tensor3d x = sample.cast<double>();

  const auto base_tape = forward_with_tape(spec, w, x);
  const KinkSignature base_sig = signature(spec, base_tape);
  auto analytic = backward(spec, w, base_tape, target).gradients;
  if (options.tamper) options.tamper(analytic);

  auto loss_at = [&](KinkSignature& sig) {
    const auto tape = forward_with_tape(spec, w, x);
    sig = signature(spec, tape);
    return cross_entropy_loss<double>(tape.probabilities, target);
  };

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (!spec.layers[l].is_parametric()) continue;
    GradCheckLayer layer{spec.layers[l].name};
    const std::size_t total = w.layers[l].weights.size() + w.layers[l].biases.size();
    std::vector<std::size_t> candidates(total);
    std::iota(candidates.begin(), candidates.end(), 0);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (std::size_t idx : candidates) {
      if (layer.checked >= options.params_per_layer) break;
      double& p = param_ref(w, l, idx);
      const double original = p;
      KinkSignature sig_plus, sig_minus;
      p = original + options.epsilon;
      const double plus = loss_at(sig_plus);
      p = original - options.epsilon;
      const double minus = loss_at(sig_minus);
      p = original;
      if (sig_plus != base_sig || sig_minus != base_sig) {
        ++layer.skipped_kinks;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double exact = param_ref(analytic, l, idx);
      const double scale = std::max(std::abs(numeric), std::abs(exact));
      const double rel = scale < 1e-12 ? 0.0 : std::abs(numeric - exact) / scale;
      layer.max_rel_error = std::max(layer.max_rel_error, rel);
      ++layer.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, layer.max_rel_error);
    report.layers.push_back(std::move(layer));
  }
  return report;
}

}  // namespace vpr
