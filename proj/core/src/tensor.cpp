#include "vpr/tensor.hpp"

namespace vpr {

std::string Shape3::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

std::size_t window_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                                 std::size_t pad) noexcept {
  const std::size_t padded = extent + 2 * pad;
  if (stride == 0 || kernel == 0 || padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

template <class T>
void ConvKernelView<T>::validate() const {
  if (out_channels == 0 || in_channels == 0 || kernel_size == 0) {
    throw ShapeError("conv kernel bank has a zero dimension");
  }
  if (weights.size() != out_channels * in_channels * kernel_size * kernel_size) {
    throw ShapeError("conv kernel bank holds " + std::to_string(weights.size()) +
                     " weights, expected " + std::to_string(out_channels) + "x" +
                     std::to_string(in_channels) + "x" + std::to_string(kernel_size) + "x" +
                     std::to_string(kernel_size));
  }
  if (biases.size() != out_channels) {
    throw ShapeError("conv kernel bank holds " + std::to_string(biases.size()) +
                     " biases, expected " + std::to_string(out_channels));
  }
}

template <class T>
void DenseView<T>::validate() const {
  if (weights.size() != out_features * in_features) {
    throw ShapeError("dense layer holds " + std::to_string(weights.size()) +
                     " weights, expected " + std::to_string(out_features) + "x" +
                     std::to_string(in_features));
  }
  if (biases.size() != out_features) {
    throw ShapeError("dense layer holds " + std::to_string(biases.size()) +
                     " biases, expected " + std::to_string(out_features));
  }
}

template struct ConvKernelView<float>;
template struct ConvKernelView<double>;
template struct DenseView<float>;
template struct DenseView<double>;

}  // namespace vpr
