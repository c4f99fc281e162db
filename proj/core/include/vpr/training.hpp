#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vpr/network.hpp"
#include "vpr/tensor.hpp"

namespace vpr {

struct TrainConfig {
  double base_lr = 0.01;
  std::size_t lr_step_iters = 60000;
  double lr_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.005;
  std::size_t batch_size = 50;
  std::size_t max_iters = 120000;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;  // validation accuracy is measured at these iterations

  void validate() const;
};

enum class CropMode { kRandom, kCenter };
enum class PreprocessMode { kTrain, kEval };

struct AugmentConfig {
  std::size_t resize_to = 256;
  std::size_t crop_to = 227;
  CropMode train_crop = CropMode::kRandom;
  bool horizontal_flip = false;

  void validate() const;
};

/// Bilinear resize with half-pixel centres.
Tensor3 resize_bilinear(const Tensor3& image, std::size_t out_height, std::size_t out_width);

/// Crop offset (row, col) chosen for a given mode. Eval mode is the centre crop.
std::pair<std::size_t, std::size_t> crop_offset(std::size_t resized, std::size_t crop, PreprocessMode mode,
                                                CropMode train_crop, std::mt19937_64& rng);

/// image: 3 channels with 0..255 pixel values. Resizes to resize_to^2,
/// crops crop_to^2, scales to [0,1] and subtracts `channel_mean`.
Tensor3 preprocess(const Tensor3& image, const AugmentConfig& cfg, PreprocessMode mode, std::mt19937_64& rng,
                   std::span<const float> channel_mean = {});

/// Per-channel mean of images in [0,1] units, accumulated in double in image order.
std::vector<float> channel_mean(std::span<const Tensor3> images);

/// base_lr * lr_factor ^ floor(iter / lr_step_iters)
double lr_at(std::size_t iter, const TrainConfig& cfg);

using Velocity = ModelWeights;

/// v' = momentum v - lr (g + weight_decay w); w' = w + v'. Updates in place.
void sgd_step(ModelWeights& weights, const ModelWeights& grads, Velocity& velocity, const TrainConfig& cfg,
              std::size_t iter);

struct LabeledImages {
  std::vector<Tensor3> images;  // 3 channels, 0..255
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return images.size(); }
};

struct TrainLogRow {
  std::size_t iteration = 0;
  double lr = 0;
  double loss = 0;
  double val_accuracy = -1;  // negative when not measured at this row
};

struct TrainLog {
  std::vector<TrainLogRow> rows;

  /// Plain-text table "iteration lr loss val_accuracy". With every > 1 only
  /// the first row, each every-th row and the last row are written.
  void write(std::ostream& out, std::size_t every = 1) const;
};

struct TrainResult {
  ModelWeights weights;
  TrainLog log;  // one row per iteration, val_accuracy at log_every boundaries
};

/// Optional progress callback: (iteration, loss).
using TrainProgress = std::function<void(std::size_t, double)>;

/// Minibatch SGD over seeded shuffled epochs. The channel mean is computed
/// from `train_set` and stored in the returned weights.
TrainResult train(const LabeledImages& train_set, const LabeledImages& val_set, const NetworkSpec& spec,
                  const TrainConfig& train_cfg, const AugmentConfig& aug_cfg, const TrainProgress& progress = {});

/// Same, starting from the given weights.
TrainResult train(const LabeledImages& train_set, const LabeledImages& val_set, const NetworkSpec& spec,
                  ModelWeights initial, const TrainConfig& train_cfg, const AugmentConfig& aug_cfg,
                  const TrainProgress& progress = {});

/// Top-1 accuracy on eval-mode preprocessed images.
double accuracy(const NetworkSpec& spec, const ModelWeights& weights, const LabeledImages& data,
                const AugmentConfig& aug_cfg);

/// Eval-mode preprocessing with the model's stored channel mean.
Tensor3 prepare_input(const Tensor3& image, const NetworkSpec& spec, const ModelWeights& weights,
                      const AugmentConfig& aug_cfg);

/// Augmentation defaults matching a network's input size: 256/227 for the
/// full network, 72/64 for the mini variants.
AugmentConfig default_augment_for(const NetworkSpec& spec);

struct GradCheckOptions {
  double epsilon = 1e-3;
  std::size_t params_per_layer = 200;
  std::uint64_t seed = 0;
  /// Test hook applied to the analytic gradients before comparison.
  std::function<void(BasicModelWeights<double>&)> tamper;
};

struct GradCheckLayer {
  std::string name;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  // perturbations that flipped a ReLU mask or pool argmax
  double max_rel_error = 0;
};

struct GradCheckReport {
  double max_rel_error = 0;
  std::vector<GradCheckLayer> layers;
};

/// Compares backprop parameter gradients of the full-network loss against
/// central differences in double precision on a random parameter subset of
/// every parametric layer. Relative error is |a - n| / max(|a|, |n|), taken
/// as 0 when both magnitudes are below 1e-12.
GradCheckReport grad_check(const NetworkSpec& spec, const ModelWeights& weights, const Tensor3& sample,
                           std::size_t target, const GradCheckOptions& options = {});

}  // namespace vpr
