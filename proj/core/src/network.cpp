#include "vpr/network.hpp"

#include <random>
#include <unordered_set>

namespace vpr {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

LayerSpec conv(std::string name, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad) {
  return {std::move(name), ConvLayer{out, k, stride, pad}};
}
LayerSpec relu_layer(std::string name) { return {std::move(name), ReluLayer{}}; }
LayerSpec pool(std::string name, std::size_t window, std::size_t stride) {
  return {std::move(name), MaxPoolLayer{window, stride}};
}
LayerSpec dense(std::string name, std::size_t out) {
  return {std::move(name), FullyConnectedLayer{out}};
}

}  // namespace

std::string_view kind_name(const LayerKind& kind) noexcept {
  return std::visit(Overloaded{[](const ConvLayer&) { return std::string_view("conv"); },
                               [](const ReluLayer&) { return std::string_view("relu"); },
                               [](const MaxPoolLayer&) { return std::string_view("maxpool"); },
                               [](const FullyConnectedLayer&) { return std::string_view("fc"); },
                               [](const SoftmaxLayer&) { return std::string_view("softmax"); }},
                    kind);
}

std::optional<std::size_t> NetworkSpec::find(std::string_view name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t NetworkSpec::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ArgumentError("network has no layer named '" + std::string(name) + "'");
}

std::vector<LayerShape> infer_shapes(const NetworkSpec& spec) {
  if (spec.layers.empty()) throw ShapeError("network spec has no layers");
  if (spec.input.size() == 0) throw ShapeError("network input shape " + spec.input.str() + " is empty");
  std::unordered_set<std::string> seen;
  std::vector<LayerShape> shapes;
  LayerShape current{spec.input, true};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    if (layer.name.empty()) throw ShapeError("layer " + std::to_string(i) + " has an empty name");
    if (!seen.insert(layer.name).second) throw ShapeError("duplicate layer name '" + layer.name + "'");
    const bool last = i + 1 == spec.layers.size();
    auto fail = [&](const std::string& why) {
      throw ShapeError("layer '" + layer.name + "' (" + std::string(kind_name(layer.kind)) + "): " + why);
    };
    std::visit(
        Overloaded{
            [&](const ConvLayer& c) {
              if (!current.spatial) fail("convolution after a flat layer");
              if (c.out_channels == 0 || c.kernel_size == 0 || c.stride == 0) fail("zero-sized parameter");
              const auto h = window_output_extent(current.shape.height, c.kernel_size, c.stride, c.pad);
              const auto w = window_output_extent(current.shape.width, c.kernel_size, c.stride, c.pad);
              if (h == 0 || w == 0) fail("non-positive output size from input " + current.shape.str());
              current.shape = {c.out_channels, h, w};
            },
            [&](const ReluLayer&) {},
            [&](const MaxPoolLayer& p) {
              if (!current.spatial) fail("pooling after a flat layer");
              if (p.window == 0 || p.stride == 0) fail("zero-sized parameter");
              if (p.window > current.shape.height || p.window > current.shape.width) {
                fail("window " + std::to_string(p.window) + " larger than input " + current.shape.str());
              }
              current.shape = {current.shape.channels,
                               window_output_extent(current.shape.height, p.window, p.stride),
                               window_output_extent(current.shape.width, p.window, p.stride)};
            },
            [&](const FullyConnectedLayer& f) {
              if (f.out_features == 0) fail("zero output features");
              current = {{f.out_features, 1, 1}, false};
            },
            [&](const SoftmaxLayer&) {
              if (!last) fail("softmax must be the final layer");
            },
        },
        layer.kind);
    shapes.push_back(current);
  }
  if (!std::holds_alternative<SoftmaxLayer>(spec.layers.back().kind)) {
    throw ShapeError("network must end with a softmax layer");
  }
  if (current.shape.size() != spec.num_classes) {
    throw ShapeError("network output length " + std::to_string(current.shape.size()) +
                     " does not match class count " + std::to_string(spec.num_classes));
  }
  return shapes;
}

NetworkSpec amosnet_spec(std::size_t num_classes) {
  if (num_classes < 2) throw ArgumentError("amosnet needs at least 2 classes");
  NetworkSpec spec;
  spec.input = {3, 227, 227};
  spec.num_classes = num_classes;
  spec.layers = {
      conv("conv1", 96, 11, 4, 0),  relu_layer("relu1"), pool("pool1", 3, 2),
      conv("conv2", 256, 5, 1, 2), relu_layer("relu2"), pool("pool2", 3, 2),
      conv("conv3", 384, 3, 1, 1), relu_layer("relu3"),
      conv("conv4", 384, 3, 1, 1), relu_layer("relu4"),
      conv("conv5", 256, 3, 1, 1), relu_layer("relu5"), pool("pool5", 3, 2),
      conv("conv6", 256, 3, 1, 1), relu_layer("relu6"), pool("pool6", 3, 2),
      dense("fc7", 4096),          relu_layer("relu7"),
      dense("fc8", num_classes),   {"prob", SoftmaxLayer{}},
  };
  return spec;
}

NetworkSpec amosnet_mini_spec(std::size_t num_classes) {
  if (num_classes < 1) throw ArgumentError("amosnet-mini needs at least 1 class");
  NetworkSpec spec;
  spec.input = {3, 64, 64};
  spec.num_classes = num_classes;
  spec.layers = {
      conv("conv1", 16, 5, 2, 0), relu_layer("relu1"), pool("pool1", 2, 2),
      conv("conv2", 32, 3, 1, 1), relu_layer("relu2"), pool("pool2", 2, 2),
      dense("fc3", 128),          relu_layer("relu3"),
      dense("fc4", num_classes),  {"prob", SoftmaxLayer{}},
  };
  return spec;
}

NetworkSpec network_preset(std::string_view name, std::size_t num_classes) {
  if (name == "amosnet") return amosnet_spec(num_classes);
  if (name == "amosnet-mini") return amosnet_mini_spec(num_classes);
  if (name == "amosnet-mini-overlap") {
    // Overlapping 3x3/s2 first pool; same flattened size as amosnet-mini.
    NetworkSpec spec = amosnet_mini_spec(num_classes);
    spec.layers[spec.index_of("pool1")].kind = MaxPoolLayer{3, 2};
    return spec;
  }
  throw ArgumentError("unknown network preset '" + std::string(name) +
                      "' (expected amosnet, amosnet-mini or amosnet-mini-overlap)");
}

std::pair<std::size_t, std::size_t> parameter_shape(const LayerSpec& layer, const LayerShape& input) {
  if (const auto* c = std::get_if<ConvLayer>(&layer.kind)) {
    return {c->out_channels * input.shape.channels * c->kernel_size * c->kernel_size, c->out_channels};
  }
  if (const auto* f = std::get_if<FullyConnectedLayer>(&layer.kind)) {
    return {f->out_features * input.shape.size(), f->out_features};
  }
  return {0, 0};
}

template <class T>
const BasicLayerParams<T>& BasicModelWeights<T>::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return layers[i];
  }
  throw ArgumentError("weights have no layer named '" + std::string(name) + "'");
}

template <class T>
BasicLayerParams<T>& BasicModelWeights<T>::at(std::string_view name) {
  return const_cast<BasicLayerParams<T>&>(std::as_const(*this).at(name));
}

template <class T>
BasicModelWeights<T> BasicModelWeights<T>::zeros_like() const {
  BasicModelWeights out;
  out.names = names;
  out.channel_mean = channel_mean;
  for (const auto& p : layers) {
    out.layers.push_back({std::vector<T>(p.weights.size(), T{}), std::vector<T>(p.biases.size(), T{})});
  }
  return out;
}

template <class T>
std::size_t BasicModelWeights<T>::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : layers) n += p.weights.size() + p.biases.size();
  return n;
}

template <class T>
void check_weights(const NetworkSpec& spec, const BasicModelWeights<T>& weights) {
  const auto shapes = infer_shapes(spec);
  if (weights.layers.size() != spec.layers.size() || weights.names.size() != spec.layers.size()) {
    throw ShapeError("weights cover " + std::to_string(weights.layers.size()) + " layers, spec has " +
                     std::to_string(spec.layers.size()));
  }
  LayerShape input{spec.input, true};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    if (weights.names[i] != layer.name) {
      throw ShapeError("weights layer " + std::to_string(i) + " is '" + weights.names[i] +
                       "', spec expects '" + layer.name + "'");
    }
    const auto [nw, nb] = parameter_shape(layer, input);
    const auto& p = weights.layers[i];
    if (p.weights.size() != nw || p.biases.size() != nb) {
      throw ShapeError("layer '" + layer.name + "' has " + std::to_string(p.weights.size()) + "+" +
                       std::to_string(p.biases.size()) + " parameters, expected " +
                       std::to_string(nw) + "+" + std::to_string(nb));
    }
    input = shapes[i];
  }
  if (!weights.channel_mean.empty() && weights.channel_mean.size() != spec.input.channels) {
    throw ShapeError("channel mean has " + std::to_string(weights.channel_mean.size()) +
                     " entries for " + std::to_string(spec.input.channels) + " input channels");
  }
}

ModelWeights init_weights(const NetworkSpec& spec, std::uint64_t seed, double stddev) {
  const auto shapes = infer_shapes(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  ModelWeights weights;
  weights.channel_mean.assign(spec.input.channels, 0.0f);
  LayerShape input{spec.input, true};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto [nw, nb] = parameter_shape(spec.layers[i], input);
    LayerParams p;
    p.weights.resize(nw);
    for (float& w : p.weights) w = static_cast<float>(gauss(rng));
    p.biases.assign(nb, 0.0f);
    weights.names.push_back(spec.layers[i].name);
    weights.layers.push_back(std::move(p));
    input = shapes[i];
  }
  return weights;
}

namespace {

template <class T>
ConvKernelView<T> conv_view(const ConvLayer& c, const Shape3& in, const BasicLayerParams<T>& p) {
  return {c.out_channels, in.channels, c.kernel_size, p.weights, p.biases};
}

template <class T>
DenseView<T> dense_view(const FullyConnectedLayer& f, const Shape3& in, const BasicLayerParams<T>& p) {
  return {f.out_features, in.size(), p.weights, p.biases};
}

template <class T>
BasicTensor3<T> flat(std::vector<T> v) {
  const std::size_t n = v.size();
  return BasicTensor3<T>(Shape3{n, 1, 1}, std::move(v));
}

// Applies one layer; pool indices are written when `indices` is non-null.
template <class T>
BasicTensor3<T> apply_layer(const LayerSpec& layer, const BasicLayerParams<T>& params,
                            const BasicTensor3<T>& x, PoolIndexMap* indices) {
  return std::visit(
      Overloaded{
          [&](const ConvLayer& c) { return conv2d_forward(x, conv_view(c, x.shape(), params), c.stride, c.pad); },
          [&](const ReluLayer&) { return relu(x); },
          [&](const MaxPoolLayer& p) {
            auto r = maxpool_forward(x, p.window, p.stride);
            if (indices) *indices = std::move(r.indices);
            return std::move(r.output);
          },
          [&](const FullyConnectedLayer& f) {
            return flat(fc_forward<T>(x.data(), dense_view(f, x.shape(), params)));
          },
          [&](const SoftmaxLayer&) { return flat(softmax<T>(x.data())); },
      },
      layer.kind);
}

template <class T>
void check_input(const NetworkSpec& spec, const BasicModelWeights<T>& weights, const BasicTensor3<T>& image) {
  if (image.shape() != spec.input) {
    throw ShapeError("input image " + image.shape().str() + " does not match network input " + spec.input.str());
  }
  if (weights.layers.size() != spec.layers.size()) {
    throw ShapeError("weights cover " + std::to_string(weights.layers.size()) + " layers, spec has " +
                     std::to_string(spec.layers.size()));
  }
}

}  // namespace

template <class T>
ForwardResult<T> forward(const NetworkSpec& spec, const BasicModelWeights<T>& weights,
                         const BasicTensor3<T>& image, const std::set<std::string, std::less<>>& capture) {
  check_input(spec, weights, image);
  for (const auto& name : capture) spec.index_of(name);
  ForwardResult<T> result;
  BasicTensor3<T> x = image;
  // A captured conv/fc layer records the output of the ReLU directly after it.
  std::optional<std::string> pending;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    x = apply_layer(layer, weights.layers[i], x, nullptr);
    if (pending) {
      if (std::holds_alternative<ReluLayer>(layer.kind)) result.trace[*pending] = x;
      pending.reset();
    }
    if (capture.contains(layer.name)) {
      result.trace[layer.name] = x;
      const bool next_is_relu = i + 1 < spec.layers.size() &&
                                std::holds_alternative<ReluLayer>(spec.layers[i + 1].kind);
      if (layer.is_parametric() && next_is_relu) pending = layer.name;
    }
  }
  result.probabilities.assign(x.data().begin(), x.data().end());
  return result;
}

template <class T>
ForwardTape<T> forward_with_tape(const NetworkSpec& spec, const BasicModelWeights<T>& weights,
                                 const BasicTensor3<T>& image) {
  check_input(spec, weights, image);
  ForwardTape<T> tape;
  tape.inputs.reserve(spec.layers.size());
  tape.pool_indices.resize(spec.layers.size());
  BasicTensor3<T> x = image;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    tape.inputs.push_back(x);
    x = apply_layer(spec.layers[i], weights.layers[i], x, &tape.pool_indices[i]);
  }
  tape.probabilities.assign(x.data().begin(), x.data().end());
  return tape;
}

template <class T>
BackwardResult<T> backward(const NetworkSpec& spec, const BasicModelWeights<T>& weights,
                           const ForwardTape<T>& tape, std::size_t target) {
  if (tape.inputs.size() != spec.layers.size()) throw ShapeError("forward tape does not match spec");
  BackwardResult<T> result;
  result.gradients = weights.zeros_like();
  result.loss = cross_entropy_loss<T>(tape.probabilities, target);
  BasicTensor3<T> grad = flat(softmax_ce_backward<T>(tape.probabilities, target));
  // The softmax layer is last; its adjoint is folded into the loss gradient above.
  for (std::size_t i = spec.layers.size() - 1; i-- > 0;) {
    const LayerSpec& layer = spec.layers[i];
    const BasicTensor3<T>& x = tape.inputs[i];
    auto& g = result.gradients.layers[i];
    grad = std::visit(
        Overloaded{
            [&](const ConvLayer& c) {
              auto r = conv2d_backward(x, conv_view(c, x.shape(), weights.layers[i]), c.stride, c.pad, grad);
              g.weights = std::move(r.weights);
              g.biases = std::move(r.biases);
              return std::move(r.input);
            },
            [&](const ReluLayer&) { return relu_backward(x, grad); },
            [&](const MaxPoolLayer&) { return maxpool_backward(x.shape(), tape.pool_indices[i], grad); },
            [&](const FullyConnectedLayer& f) {
              auto r = fc_backward<T>(x.data(), dense_view(f, x.shape(), weights.layers[i]), grad.data());
              g.weights = std::move(r.weights);
              g.biases = std::move(r.biases);
              return BasicTensor3<T>(x.shape(), std::move(r.input));
            },
            [&](const SoftmaxLayer&) -> BasicTensor3<T> {
              throw ShapeError("softmax layer '" + layer.name + "' is not final");
            },
        },
        layer.kind);
  }
  result.input_gradient = std::move(grad);
  return result;
}

#define VPR_INSTANTIATE_NETWORK(T)                                                                     \
  template struct BasicModelWeights<T>;                                                                \
  template void check_weights(const NetworkSpec&, const BasicModelWeights<T>&);                        \
  template ForwardResult<T> forward(const NetworkSpec&, const BasicModelWeights<T>&,                   \
                                    const BasicTensor3<T>&, const std::set<std::string, std::less<>>&); \
  template ForwardTape<T> forward_with_tape(const NetworkSpec&, const BasicModelWeights<T>&,           \
                                            const BasicTensor3<T>&);                                   \
  template BackwardResult<T> backward(const NetworkSpec&, const BasicModelWeights<T>&,                 \
                                      const ForwardTape<T>&, std::size_t);

VPR_INSTANTIATE_NETWORK(float)
VPR_INSTANTIATE_NETWORK(double)

#undef VPR_INSTANTIATE_NETWORK

}  // namespace vpr
