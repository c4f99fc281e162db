#pragma once

// Forward and backward kernels for convolution, ReLU, max pooling,
// fully-connected layers and softmax with cross-entropy. Every kernel is
// instantiated for float (storage) and double (gradient checking).

#include <cstddef>
#include <span>
#include <vector>

#include "vpr/tensor.hpp"

namespace vpr {

/// out[o] = bias[o] + sum_i kernel[o][i] (*) input[i], cross-correlation with
/// zero padding. The ReLU of the fused formulation is a separate op.
template <class T>
BasicTensor3<T> conv2d_forward(const BasicTensor3<T>& input, const ConvKernelView<T>& bank,
                               std::size_t stride, std::size_t pad);

template <class T>
BasicTensor3<T> conv2d_forward(const BasicTensor3<T>& input, const BasicConvKernelBank<T>& bank,
                               std::size_t stride, std::size_t pad) {
  return conv2d_forward(input, bank.view(), stride, pad);
}

template <class T>
struct ConvGradients {
  BasicTensor3<T> input;
  std::vector<T> weights;
  std::vector<T> biases;
};

template <class T>
ConvGradients<T> conv2d_backward(const BasicTensor3<T>& input, const ConvKernelView<T>& bank,
                                 std::size_t stride, std::size_t pad,
                                 const BasicTensor3<T>& grad_output);

template <class T>
BasicTensor3<T> relu(const BasicTensor3<T>& input);

/// Gradient passes where the forward input was strictly positive.
template <class T>
BasicTensor3<T> relu_backward(const BasicTensor3<T>& input, const BasicTensor3<T>& grad_output);

template <class T>
struct PoolResult {
  BasicTensor3<T> output;
  PoolIndexMap indices;
};

/// Windows that would overhang the border are dropped. Ties go to the
/// smallest flat input index.
template <class T>
PoolResult<T> maxpool_forward(const BasicTensor3<T>& input, std::size_t window, std::size_t stride);

template <class T>
BasicTensor3<T> maxpool_backward(const Shape3& input_shape, const PoolIndexMap& indices,
                                 const BasicTensor3<T>& grad_output);

/// y = W x + b
template <class T>
std::vector<T> fc_forward(std::span<const T> input, const DenseView<T>& layer);

template <class T>
struct DenseGradients {
  std::vector<T> input;
  std::vector<T> weights;
  std::vector<T> biases;
};

template <class T>
DenseGradients<T> fc_backward(std::span<const T> input, const DenseView<T>& layer,
                              std::span<const T> grad_output);

/// Max-subtracted softmax.
template <class T>
std::vector<T> softmax(std::span<const T> logits);

/// Smallest probability the loss will take the log of.
inline constexpr double kProbabilityFloor = 1e-12;

/// -log(max(probs[target], 1e-12)).
template <class T>
T cross_entropy_loss(std::span<const T> probs, std::size_t target);

/// Gradient of cross_entropy_loss(softmax(logits)) w.r.t. the logits: probs - onehot(target).
template <class T>
std::vector<T> softmax_ce_backward(std::span<const T> probs, std::size_t target);

}  // namespace vpr
