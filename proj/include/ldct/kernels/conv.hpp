#pragma once

#include <cstddef>

namespace ldct::kernels {

/// Geometry of a zero-padded 2D cross-correlation, NCHW activations and
/// [out, in, kh, kw] weights.
struct ConvDims {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t out_height() const { return (height + 2 * pad - kernel_h) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * pad - kernel_w) / stride + 1; }
  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
};

// im2col + blocked GEMM, parallel over batch / output channels with OpenMP.
// Every output element is reduced by one thread in a fixed order, so results
// do not depend on the thread count.

/// y = conv(x, w) + bias; `bias` may be null.
template <typename T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* bias, T* y);

/// gx += conv^T(gy, w).
template <typename T>
void conv2d_backward_input(const ConvDims& d, const T* gy, const T* w, T* gx);

/// gw += dL/dw, gbias += dL/dbias; `gbias` may be null.
template <typename T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* gy, T* gw, T* gbias);

namespace reference {

// Direct nested loops, single threaded. Kept as the test oracle and the
// benchmark baseline.

template <typename T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* bias, T* y);

template <typename T>
void conv2d_backward_input(const ConvDims& d, const T* gy, const T* w, T* gx);

template <typename T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* gy, T* gw, T* gbias);

}  // namespace reference

}  // namespace ldct::kernels
