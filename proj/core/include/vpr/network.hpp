#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vpr/ops.hpp"
#include "vpr/tensor.hpp"

namespace vpr {

struct ConvLayer {
  std::size_t out_channels = 0;
  std::size_t kernel_size = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  bool operator==(const ConvLayer&) const = default;
};
struct ReluLayer {
  bool operator==(const ReluLayer&) const = default;
};
struct MaxPoolLayer {
  std::size_t window = 0;
  std::size_t stride = 0;
  bool operator==(const MaxPoolLayer&) const = default;
};
struct FullyConnectedLayer {
  std::size_t out_features = 0;
  bool operator==(const FullyConnectedLayer&) const = default;
};
struct SoftmaxLayer {
  bool operator==(const SoftmaxLayer&) const = default;
};

using LayerKind = std::variant<ConvLayer, ReluLayer, MaxPoolLayer, FullyConnectedLayer, SoftmaxLayer>;

struct LayerSpec {
  std::string name;
  LayerKind kind;

  bool is_parametric() const noexcept {
    return std::holds_alternative<ConvLayer>(kind) || std::holds_alternative<FullyConnectedLayer>(kind);
  }
  bool operator==(const LayerSpec&) const = default;
};

std::string_view kind_name(const LayerKind& kind) noexcept;

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  Shape3 input{3, 227, 227};
  std::size_t num_classes = 0;

  /// Index of the named layer, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws ArgumentError

  bool operator==(const NetworkSpec&) const = default;
};

/// Output shape of one layer. Layers from the first fully-connected layer on
/// are flat and carry their length in `shape.channels`.
struct LayerShape {
  Shape3 shape;
  bool spatial = true;

  bool operator==(const LayerShape&) const = default;
};

/// Validates names, softmax placement and class count, and applies the
/// floor shape rules layer by layer. Throws ShapeError naming the bad layer.
std::vector<LayerShape> infer_shapes(const NetworkSpec& spec);

/// Six conv layers with ReLU, four 3x3/s2 pools, fc7 (4096) + ReLU, fc8, softmax
/// on 3x227x227 inputs.
NetworkSpec amosnet_spec(std::size_t num_classes);

/// Desk-scale variant on 3x64x64 inputs with non-overlapping 2x2 pooling.
NetworkSpec amosnet_mini_spec(std::size_t num_classes);

/// Looks up a preset by name ("amosnet" or "amosnet-mini").
NetworkSpec network_preset(std::string_view name, std::size_t num_classes);

template <class T>
struct BasicLayerParams {
  std::vector<T> weights;
  std::vector<T> biases;

  bool empty() const noexcept { return weights.empty() && biases.empty(); }
  bool operator==(const BasicLayerParams&) const = default;
};

/// Parameters for every layer of a spec, stored in layer order. Non-parametric
/// layers hold empty entries. `channel_mean` is the per-channel input mean
/// (in [0,1] pixel units) subtracted during preprocessing.
template <class T>
struct BasicModelWeights {
  std::vector<std::string> names;
  std::vector<BasicLayerParams<T>> layers;
  std::vector<float> channel_mean;

  const BasicLayerParams<T>& at(std::string_view name) const;
  BasicLayerParams<T>& at(std::string_view name);

  /// Same layout, all zeros.
  BasicModelWeights zeros_like() const;
  std::size_t parameter_count() const noexcept;

  template <class U>
  BasicModelWeights<U> cast() const {
    BasicModelWeights<U> out;
    out.names = names;
    out.channel_mean = channel_mean;
    for (const auto& p : layers) {
      out.layers.push_back({std::vector<U>(p.weights.begin(), p.weights.end()),
                            std::vector<U>(p.biases.begin(), p.biases.end())});
    }
    return out;
  }

  bool operator==(const BasicModelWeights&) const = default;
};

using LayerParams = BasicLayerParams<float>;
using ModelWeights = BasicModelWeights<float>;

/// Expected (weights, biases) lengths for a layer given its input shape.
std::pair<std::size_t, std::size_t> parameter_shape(const LayerSpec& layer, const LayerShape& input);

/// Throws ShapeError unless weights match the spec layer for layer.
template <class T>
void check_weights(const NetworkSpec& spec, const BasicModelWeights<T>& weights);

inline constexpr double kDefaultInitStddev = 0.01;

/// Gaussian N(0, stddev^2) weights, zero biases, zero channel mean.
ModelWeights init_weights(const NetworkSpec& spec, std::uint64_t seed,
                          double stddev = kDefaultInitStddev);

template <class T>
using BasicActivationTrace = std::map<std::string, BasicTensor3<T>, std::less<>>;
using ActivationTrace = BasicActivationTrace<float>;

template <class T>
struct ForwardResult {
  std::vector<T> probabilities;
  BasicActivationTrace<T> trace;
};

/// Runs the network on an already-preprocessed input. The trace holds the
/// output of each captured layer (flat layers as n x 1 x 1 tensors).
template <class T>
ForwardResult<T> forward(const NetworkSpec& spec, const BasicModelWeights<T>& weights,
                         const BasicTensor3<T>& image, const std::set<std::string, std::less<>>& capture = {});

/// Everything backprop needs from one forward pass.
template <class T>
struct ForwardTape {
  std::vector<BasicTensor3<T>> inputs;  // input of each layer
  std::vector<PoolIndexMap> pool_indices;  // indexed by layer, empty for non-pool layers
  std::vector<T> probabilities;
};

template <class T>
ForwardTape<T> forward_with_tape(const NetworkSpec& spec, const BasicModelWeights<T>& weights,
                                 const BasicTensor3<T>& image);

template <class T>
struct BackwardResult {
  T loss{};
  BasicModelWeights<T> gradients;
  BasicTensor3<T> input_gradient;
};

/// Gradient of -log(softmax output[target]) w.r.t. every parameter.
template <class T>
BackwardResult<T> backward(const NetworkSpec& spec, const BasicModelWeights<T>& weights,
                           const ForwardTape<T>& tape, std::size_t target);

/// Model container. Little-endian: "SPDN", version, record count, records
/// (name, kind tag, dims, float payload), CRC32 trailer.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const NetworkSpec& spec, const ModelWeights& weights);

struct LoadedModel {
  NetworkSpec spec;
  ModelWeights weights;
};

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelWeights& weights, const NetworkSpec& spec, const std::string& path);
LoadedModel load_model(const std::string& path);

}  // namespace vpr
