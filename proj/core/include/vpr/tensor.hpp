#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vpr/error.hpp"

namespace vpr {

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return channels * height * width; }
  std::string str() const;

  auto operator<=>(const Shape3&) const = default;
};

/// Channel-major, row-major grid of scalars: element (c, y, x) lives at
/// (c * height + y) * width + x.
template <class T>
class BasicTensor3 {
 public:
  using value_type = T;

  BasicTensor3() = default;
  explicit BasicTensor3(Shape3 shape, T fill = T{})
      : shape_(shape), data_(shape.size(), fill) {}
  BasicTensor3(std::size_t channels, std::size_t height, std::size_t width, T fill = T{})
      : BasicTensor3(Shape3{channels, height, width}, fill) {}
  BasicTensor3(Shape3 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
    }
  }

  const Shape3& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane_size() const noexcept { return shape_.height * shape_.width; }
  bool empty() const noexcept { return data_.empty(); }

  T& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::span<T> plane(std::size_t c) { return std::span<T>(data_).subspan(c * plane_size(), plane_size()); }
  std::span<const T> plane(std::size_t c) const {
    return std::span<const T>(data_).subspan(c * plane_size(), plane_size());
  }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  template <class U>
  BasicTensor3<U> cast() const {
    return BasicTensor3<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const BasicTensor3&) const = default;

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

using Tensor3 = BasicTensor3<float>;
using Tensor3d = BasicTensor3<double>;

/// Read-only view of a convolution kernel bank: weights are laid out
/// [out][in][ky][kx], one bias per output channel.
template <class T>
struct ConvKernelView {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_size = 0;
  std::span<const T> weights;
  std::span<const T> biases;

  std::size_t fan_in() const noexcept { return in_channels * kernel_size * kernel_size; }
  void validate() const;
};

template <class T>
struct BasicConvKernelBank {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_size = 0;
  std::vector<T> weights;
  std::vector<T> biases;

  BasicConvKernelBank() = default;
  BasicConvKernelBank(std::size_t out, std::size_t in, std::size_t k)
      : out_channels(out), in_channels(in), kernel_size(k), weights(out * in * k * k), biases(out) {}

  T& weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_channels + i) * kernel_size + ky) * kernel_size + kx];
  }
  const T& weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * kernel_size + ky) * kernel_size + kx];
  }

  ConvKernelView<T> view() const {
    return {out_channels, in_channels, kernel_size, weights, biases};
  }
};

using ConvKernelBank = BasicConvKernelBank<float>;

/// Read-only view of a fully-connected layer: weights are [out][in].
template <class T>
struct DenseView {
  std::size_t out_features = 0;
  std::size_t in_features = 0;
  std::span<const T> weights;
  std::span<const T> biases;

  void validate() const;
};

/// Argmax bookkeeping for max pooling: one flat input index per output cell.
struct PoolIndexMap {
  Shape3 shape{};
  std::vector<std::uint32_t> indices;

  bool operator==(const PoolIndexMap&) const = default;
};

/// floor((extent + 2 pad - kernel) / stride) + 1, or 0 when the window does not fit.
std::size_t window_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                                 std::size_t pad = 0) noexcept;

}  // namespace vpr
