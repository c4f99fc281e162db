#include "vpr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vpr {
namespace {

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kernel, stride, pad;
  std::size_t out_height, out_width;

  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return out_height * out_width; }
};

template <class T>
ConvGeometry conv_geometry(const BasicTensor3<T>& input, const ConvKernelView<T>& bank,
                           std::size_t stride, std::size_t pad) {
  bank.validate();
  if (stride == 0) throw ArgumentError("conv stride must be >= 1");
  if (input.channels() != bank.in_channels) {
    throw ShapeError("conv input " + input.shape().str() + " does not match kernel bank " +
                     std::to_string(bank.out_channels) + "x" + std::to_string(bank.in_channels) +
                     "x" + std::to_string(bank.kernel_size) + "x" +
                     std::to_string(bank.kernel_size));
  }
  const std::size_t oh = window_output_extent(input.height(), bank.kernel_size, stride, pad);
  const std::size_t ow = window_output_extent(input.width(), bank.kernel_size, stride, pad);
  if (oh == 0 || ow == 0) {
    throw ShapeError("conv kernel " + std::to_string(bank.kernel_size) + " with pad " +
                     std::to_string(pad) + " does not fit input " + input.shape().str());
  }
  return {input.channels(), input.height(), input.width(), bank.kernel_size, stride, pad, oh, ow};
}

// col[(c * k + ky) * k + kx][oy * ow + ox] = padded input sample under that tap.
template <class T>
std::vector<T> im2col(const BasicTensor3<T>& input, const ConvGeometry& g) {
  std::vector<T> col(g.rows() * g.cols(), T{});
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = input.data().data() + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx, ++row) {
        T* dst = col.data() + row * g.cols();
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          T* out_row = dst + oy * g.out_width;
          if (y < 0 || y >= h) continue;
          const T* src = plane + y * w;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (x >= 0 && x < w) out_row[ox] = src[x];
          }
        }
      }
    }
  }
  return col;
}

template <class T>
void col2im_accumulate(const std::vector<T>& col, const ConvGeometry& g, BasicTensor3<T>& grad) {
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = grad.data().data() + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx, ++row) {
        const T* src = col.data() + row * g.cols();
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (y < 0 || y >= h) continue;
          T* dst = plane + y * w;
          const T* in_row = src + oy * g.out_width;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (x >= 0 && x < w) dst[x] += in_row[ox];
          }
        }
      }
    }
  }
}

// out[o][p] += sum_k a[o][k] * b[k][p]; row-blocked so each row of b is
// streamed once per four output rows.
template <class T>
void gemm_accumulate(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* out) {
  std::size_t o = 0;
  for (; o + 4 <= m; o += 4) {
    T* r0 = out + (o + 0) * n;
    T* r1 = out + (o + 1) * n;
    T* r2 = out + (o + 2) * n;
    T* r3 = out + (o + 3) * n;
    const T* a0 = a + (o + 0) * k;
    const T* a1 = a + (o + 1) * k;
    const T* a2 = a + (o + 2) * k;
    const T* a3 = a + (o + 3) * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T* brow = b + kk * n;
      const T w0 = a0[kk], w1 = a1[kk], w2 = a2[kk], w3 = a3[kk];
      for (std::size_t p = 0; p < n; ++p) {
        const T v = brow[p];
        r0[p] += w0 * v;
        r1[p] += w1 * v;
        r2[p] += w2 * v;
        r3[p] += w3 * v;
      }
    }
  }
  for (; o < m; ++o) {
    T* r = out + o * n;
    const T* ar = a + o * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T* brow = b + kk * n;
      const T wv = ar[kk];
      for (std::size_t p = 0; p < n; ++p) r[p] += wv * brow[p];
    }
  }
}

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  // Four independent partial sums; the reduction order is fixed.
  T s0{}, s1{}, s2{}, s3{};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void require_same_shape(const Shape3& a, const Shape3& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape " + a.str() + " does not match " + b.str());
  }
}

}  // namespace

template <class T>
BasicTensor3<T> conv2d_forward(const BasicTensor3<T>& input, const ConvKernelView<T>& bank,
                               std::size_t stride, std::size_t pad) {
  const ConvGeometry g = conv_geometry(input, bank, stride, pad);
  BasicTensor3<T> out(bank.out_channels, g.out_height, g.out_width);
  T* o = out.data().data();
  for (std::size_t c = 0; c < bank.out_channels; ++c) {
    std::fill_n(o + c * g.cols(), g.cols(), bank.biases[c]);
  }
  if (g.kernel == 1 && g.stride == 1 && g.pad == 0) {
    gemm_accumulate(bank.out_channels, g.rows(), g.cols(), bank.weights.data(),
                    input.data().data(), o);
  } else {
    const std::vector<T> col = im2col(input, g);
    gemm_accumulate(bank.out_channels, g.rows(), g.cols(), bank.weights.data(), col.data(), o);
  }
  return out;
}

template <class T>
ConvGradients<T> conv2d_backward(const BasicTensor3<T>& input, const ConvKernelView<T>& bank,
                                 std::size_t stride, std::size_t pad,
                                 const BasicTensor3<T>& grad_output) {
  const ConvGeometry g = conv_geometry(input, bank, stride, pad);
  require_same_shape(grad_output.shape(), Shape3{bank.out_channels, g.out_height, g.out_width},
                     "conv2d_backward upstream gradient");
  const std::size_t rows = g.rows();
  const std::size_t cols = g.cols();
  const std::vector<T> col = im2col(input, g);
  const T* dy = grad_output.data().data();

  ConvGradients<T> grads;
  grads.biases.assign(bank.out_channels, T{});
  grads.weights.assign(bank.weights.size(), T{});
  for (std::size_t o = 0; o < bank.out_channels; ++o) {
    const T* dy_row = dy + o * cols;
    T acc{};
    for (std::size_t p = 0; p < cols; ++p) acc += dy_row[p];
    grads.biases[o] = acc;
    T* dw = grads.weights.data() + o * rows;
    for (std::size_t r = 0; r < rows; ++r) dw[r] = dot(dy_row, col.data() + r * cols, cols);
  }

  // dcol = W^T dy, accumulated row by row of W.
  std::vector<T> dcol(rows * cols, T{});
  for (std::size_t o = 0; o < bank.out_channels; ++o) {
    const T* w = bank.weights.data() + o * rows;
    const T* dy_row = dy + o * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const T wv = w[r];
      if (wv == T{}) continue;
      T* dst = dcol.data() + r * cols;
      for (std::size_t p = 0; p < cols; ++p) dst[p] += wv * dy_row[p];
    }
  }
  grads.input = BasicTensor3<T>(input.shape());
  col2im_accumulate(dcol, g, grads.input);
  return grads;
}

template <class T>
BasicTensor3<T> relu(const BasicTensor3<T>& input) {
  BasicTensor3<T> out = input;
  for (T& v : out.data()) v = v > T{} ? v : T{};
  return out;
}

template <class T>
BasicTensor3<T> relu_backward(const BasicTensor3<T>& input, const BasicTensor3<T>& grad_output) {
  require_same_shape(grad_output.shape(), input.shape(), "relu_backward upstream gradient");
  BasicTensor3<T> out(input.shape());
  const auto x = input.data();
  const auto dy = grad_output.data();
  auto dx = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{} ? dy[i] : T{};
  return out;
}

template <class T>
PoolResult<T> maxpool_forward(const BasicTensor3<T>& input, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ArgumentError("pool window and stride must be >= 1");
  if (window > input.height() || window > input.width()) {
    throw ShapeError("pool window " + std::to_string(window) + " larger than input " +
                     input.shape().str());
  }
  const std::size_t oh = window_output_extent(input.height(), window, stride);
  const std::size_t ow = window_output_extent(input.width(), window, stride);
  PoolResult<T> result{BasicTensor3<T>(input.channels(), oh, ow),
                       PoolIndexMap{{input.channels(), oh, ow}, {}}};
  result.indices.indices.resize(result.output.size());
  const std::size_t w = input.width();
  const T* in = input.data().data();
  std::size_t out_i = 0;
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const std::size_t base = c * input.plane_size();
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++out_i) {
        std::size_t best = base + oy * stride * w + ox * stride;
        T best_value = in[best];
        for (std::size_t dy = 0; dy < window; ++dy) {
          const std::size_t row = base + (oy * stride + dy) * w + ox * stride;
          for (std::size_t dx = 0; dx < window; ++dx) {
            if (in[row + dx] > best_value) {
              best_value = in[row + dx];
              best = row + dx;
            }
          }
        }
        result.output[out_i] = best_value;
        result.indices.indices[out_i] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return result;
}

template <class T>
BasicTensor3<T> maxpool_backward(const Shape3& input_shape, const PoolIndexMap& indices,
                                 const BasicTensor3<T>& grad_output) {
  require_same_shape(grad_output.shape(), indices.shape, "maxpool_backward upstream gradient");
  BasicTensor3<T> grad(input_shape);
  for (std::size_t i = 0; i < indices.indices.size(); ++i) {
    const std::uint32_t at = indices.indices[i];
    if (at >= grad.size()) {
      throw ShapeError("pool index " + std::to_string(at) + " outside input " + input_shape.str());
    }
    grad[at] += grad_output[i];
  }
  return grad;
}

template <class T>
std::vector<T> fc_forward(std::span<const T> input, const DenseView<T>& layer) {
  layer.validate();
  if (input.size() != layer.in_features) {
    throw ShapeError("dense input length " + std::to_string(input.size()) +
                     " does not match weight columns " + std::to_string(layer.in_features));
  }
  std::vector<T> out(layer.out_features);
  for (std::size_t o = 0; o < layer.out_features; ++o) {
    out[o] = layer.biases[o] +
             dot(layer.weights.data() + o * layer.in_features, input.data(), layer.in_features);
  }
  return out;
}

template <class T>
DenseGradients<T> fc_backward(std::span<const T> input, const DenseView<T>& layer,
                              std::span<const T> grad_output) {
  layer.validate();
  if (input.size() != layer.in_features || grad_output.size() != layer.out_features) {
    throw ShapeError("dense backward got input " + std::to_string(input.size()) +
                     " and upstream " + std::to_string(grad_output.size()) + " for a " +
                     std::to_string(layer.out_features) + "x" +
                     std::to_string(layer.in_features) + " layer");
  }
  const std::size_t n = layer.in_features;
  DenseGradients<T> grads;
  grads.biases.assign(grad_output.begin(), grad_output.end());
  grads.weights.resize(layer.out_features * n);
  grads.input.assign(n, T{});
  for (std::size_t o = 0; o < layer.out_features; ++o) {
    const T g = grad_output[o];
    T* dw = grads.weights.data() + o * n;
    const T* w = layer.weights.data() + o * n;
    for (std::size_t i = 0; i < n; ++i) {
      dw[i] = g * input[i];
      grads.input[i] += w[i] * g;
    }
  }
  return grads;
}

template <class T>
std::vector<T> softmax(std::span<const T> logits) {
  if (logits.empty()) throw ArgumentError("softmax of an empty vector");
  const T peak = *std::max_element(logits.begin(), logits.end());
  std::vector<T> out(logits.size());
  T total{};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (T& v : out) v /= total;
  return out;
}

template <class T>
T cross_entropy_loss(std::span<const T> probs, std::size_t target) {
  if (target >= probs.size()) {
    throw ArgumentError("target class " + std::to_string(target) + " outside " +
                        std::to_string(probs.size()) + " classes");
  }
  const T p = std::max(probs[target], static_cast<T>(kProbabilityFloor));
  return -std::log(p);
}

template <class T>
std::vector<T> softmax_ce_backward(std::span<const T> probs, std::size_t target) {
  if (target >= probs.size()) {
    throw ArgumentError("target class " + std::to_string(target) + " outside " +
                        std::to_string(probs.size()) + " classes");
  }
  std::vector<T> grad(probs.begin(), probs.end());
  grad[target] -= T{1};
  return grad;
}

#define VPR_INSTANTIATE_OPS(T)                                                                   \
  template BasicTensor3<T> conv2d_forward(const BasicTensor3<T>&, const ConvKernelView<T>&,      \
                                          std::size_t, std::size_t);                             \
  template ConvGradients<T> conv2d_backward(const BasicTensor3<T>&, const ConvKernelView<T>&,    \
                                            std::size_t, std::size_t, const BasicTensor3<T>&);   \
  template BasicTensor3<T> relu(const BasicTensor3<T>&);                                         \
  template BasicTensor3<T> relu_backward(const BasicTensor3<T>&, const BasicTensor3<T>&);        \
  template PoolResult<T> maxpool_forward(const BasicTensor3<T>&, std::size_t, std::size_t);      \
  template BasicTensor3<T> maxpool_backward(const Shape3&, const PoolIndexMap&,                  \
                                            const BasicTensor3<T>&);                             \
  template std::vector<T> fc_forward(std::span<const T>, const DenseView<T>&);                   \
  template DenseGradients<T> fc_backward(std::span<const T>, const DenseView<T>&,                \
                                         std::span<const T>);                                    \
  template std::vector<T> softmax(std::span<const T>);                                           \
  template T cross_entropy_loss(std::span<const T>, std::size_t);                                \
  template std::vector<T> softmax_ce_backward(std::span<const T>, std::size_t);

VPR_INSTANTIATE_OPS(float)
VPR_INSTANTIATE_OPS(double)

#undef VPR_INSTANTIATE_OPS

}  // namespace vpr
