#include "ldct/kernels/conv.hpp"

#include <algorithm>
#include <vector>

#include "ldct/kernels/gemm.hpp"

namespace ldct::kernels {

namespace {

// Output columns ox whose input column ox * stride + kj - pad lies in [0, w).
struct ValidSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

ValidSpan valid_columns(const ConvDims& d, std::size_t kj) {
  const auto ow = static_cast<std::ptrdiff_t>(d.out_width());
  const auto s = static_cast<std::ptrdiff_t>(d.stride);
  const auto off = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(d.pad);
  const auto w = static_cast<std::ptrdiff_t>(d.width);
  const std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(ow, w - off <= 0 ? 0 : (w - off + s - 1) / s);
  return lo < hi ? ValidSpan{static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)} : ValidSpan{};
}

// col[(c, ki, kj)][(oy, ox)]
template <typename T>
void im2col(const ConvDims& d, const T* x, T* col) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  const auto h = static_cast<std::ptrdiff_t>(d.height);
  const auto pad = static_cast<std::ptrdiff_t>(d.pad);
  for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
    const ValidSpan span = valid_columns(d, kj);
    const auto off = static_cast<std::ptrdiff_t>(kj) - pad;
    for (std::size_t c = 0; c < d.in_channels; ++c) {
      const T* xc = x + c * d.height * d.width;
      for (std::size_t ki = 0; ki < d.kernel_h; ++ki) {
        T* row = col + ((c * d.kernel_h + ki) * d.kernel_w + kj) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) - pad;
          T* out = row + oy * ow;
          if (iy < 0 || iy >= h || span.begin == span.end) {
            std::fill(out, out + ow, T{0});
            continue;
          }
          const T* xr = xc + iy * static_cast<std::ptrdiff_t>(d.width) + off;
          std::fill(out, out + span.begin, T{0});
          if (d.stride == 1) {
            std::copy(xr + span.begin, xr + span.end, out + span.begin);
          } else {
            for (std::size_t ox = span.begin; ox < span.end; ++ox) out[ox] = xr[ox * d.stride];
          }
          std::fill(out + span.end, out + ow, T{0});
        }
      }
    }
  }
}

template <typename T>
void col2im_accumulate(const ConvDims& d, const T* col, T* gx) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  const auto h = static_cast<std::ptrdiff_t>(d.height);
  const auto pad = static_cast<std::ptrdiff_t>(d.pad);
  for (std::size_t c = 0; c < d.in_channels; ++c) {
    T* gc = gx + c * d.height * d.width;
    for (std::size_t ki = 0; ki < d.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
        const ValidSpan span = valid_columns(d, kj);
        const auto off = static_cast<std::ptrdiff_t>(kj) - pad;
        const T* row = col + ((c * d.kernel_h + ki) * d.kernel_w + kj) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) - pad;
          if (iy < 0 || iy >= h) continue;
          T* gr = gc + iy * static_cast<std::ptrdiff_t>(d.width) + off;
          const T* in = row + oy * ow;
          for (std::size_t ox = span.begin; ox < span.end; ++ox) gr[ox * d.stride] += in[ox];
        }
      }
    }
  }
}

// Single-output-channel convs skip im2col: a GEMM with one row spends more on
// packing the patch matrix than on arithmetic.
template <typename T>
void single_forward(const ConvDims& d, const T* x, const T* w, T* y) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  const auto h = static_cast<std::ptrdiff_t>(d.height);
  const auto pad = static_cast<std::ptrdiff_t>(d.pad);
  for (std::size_t c = 0; c < d.in_channels; ++c) {
    const T* xc = x + c * d.height * d.width;
    for (std::size_t ki = 0; ki < d.kernel_h; ++ki)
      for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
        const T wv = w[(c * d.kernel_h + ki) * d.kernel_w + kj];
        const ValidSpan span = valid_columns(d, kj);
        const auto off = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) - pad;
          if (iy < 0 || iy >= h) continue;
          const T* xr = xc + iy * static_cast<std::ptrdiff_t>(d.width) + off;
          T* yr = y + oy * ow;
          if (d.stride == 1) {
            for (std::size_t ox = span.begin; ox < span.end; ++ox) yr[ox] += wv * xr[ox];
          } else {
            for (std::size_t ox = span.begin; ox < span.end; ++ox) yr[ox] += wv * xr[ox * d.stride];
          }
        }
      }
  }
}

template <typename T>
void single_backward_input(const ConvDims& d, const T* gy, const T* w, T* gx) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  const auto h = static_cast<std::ptrdiff_t>(d.height);
  const auto pad = static_cast<std::ptrdiff_t>(d.pad);
  for (std::size_t c = 0; c < d.in_channels; ++c) {
    T* gc = gx + c * d.height * d.width;
    for (std::size_t ki = 0; ki < d.kernel_h; ++ki)
      for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
        const T wv = w[(c * d.kernel_h + ki) * d.kernel_w + kj];
        const ValidSpan span = valid_columns(d, kj);
        const auto off = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) - pad;
          if (iy < 0 || iy >= h) continue;
          T* gr = gc + iy * static_cast<std::ptrdiff_t>(d.width) + off;
          const T* in = gy + oy * ow;
          if (d.stride == 1) {
            for (std::size_t ox = span.begin; ox < span.end; ++ox) gr[ox] += wv * in[ox];
          } else {
            for (std::size_t ox = span.begin; ox < span.end; ++ox) gr[ox * d.stride] += wv * in[ox];
          }
        }
      }
  }
}

// Fixed lane count keeps the reduction order independent of the compiler's vectoriser.
template <typename T>
T strided_dot(const T* a, const T* b, std::size_t stride_b, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  T acc[kLanes] = {};
  std::size_t i = 0;
  if (stride_b == 1) {
    for (; i + kLanes <= n; i += kLanes)
      for (std::size_t l = 0; l < kLanes; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (; i < n; ++i) acc[i % kLanes] += a[i] * b[i * stride_b];
  T s{0};
  for (T v : acc) s += v;
  return s;
}

template <typename T>
void single_backward_weight(const ConvDims& d, const T* x, const T* gy, T* gw) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  const auto h = static_cast<std::ptrdiff_t>(d.height);
  const auto pad = static_cast<std::ptrdiff_t>(d.pad);
  const auto rows = static_cast<std::ptrdiff_t>(d.in_channels * d.kernel_h);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t c = static_cast<std::size_t>(r) / d.kernel_h;
    const std::size_t ki = static_cast<std::size_t>(r) % d.kernel_h;
    const T* xc = x + c * d.height * d.width;
    for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
      const ValidSpan span = valid_columns(d, kj);
      const auto off = static_cast<std::ptrdiff_t>(kj) - pad;
      T s{0};
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) - pad;
        if (iy < 0 || iy >= h || span.begin == span.end) continue;
        const T* xr = xc + iy * static_cast<std::ptrdiff_t>(d.width) + off;
        s += strided_dot(gy + oy * ow + span.begin, xr + span.begin * d.stride, d.stride, span.end - span.begin);
      }
      gw[(c * d.kernel_h + ki) * d.kernel_w + kj] += s;
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* bias, T* y) {
  const std::size_t p = d.out_height() * d.out_width(), kk = d.patch_size();
  const std::size_t in_stride = d.in_channels * d.height * d.width;
  const auto batch = static_cast<std::ptrdiff_t>(d.batch);
#pragma omp parallel
  {
    std::vector<T> col(d.out_channels == 1 ? 0 : kk * p);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      T* yn = y + n * d.out_channels * p;
      for (std::size_t co = 0; co < d.out_channels; ++co)
        std::fill(yn + co * p, yn + (co + 1) * p, bias ? bias[co] : T{0});
      if (d.out_channels == 1) {
        single_forward(d, x + n * in_stride, w, yn);
        continue;
      }
      im2col(d, x + n * in_stride, col.data());
      gemm_accumulate(d.out_channels, p, kk, w, col.data(), yn);
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvDims& d, const T* gy, const T* w, T* gx) {
  const std::size_t p = d.out_height() * d.out_width(), kk = d.patch_size();
  const std::size_t in_stride = d.in_channels * d.height * d.width;
  const auto batch = static_cast<std::ptrdiff_t>(d.batch);
#pragma omp parallel
  {
    std::vector<T> col(d.out_channels == 1 ? 0 : kk * p);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      if (d.out_channels == 1) {
        single_backward_input(d, gy + n * p, w, gx + n * in_stride);
        continue;
      }
      std::fill(col.begin(), col.end(), T{0});
      gemm_tn_accumulate(kk, p, d.out_channels, w, gy + n * d.out_channels * p, col.data());
      col2im_accumulate(d, col.data(), gx + n * in_stride);
    }
  }
}

template <typename T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* gy, T* gw, T* gbias) {
  const std::size_t p = d.out_height() * d.out_width(), kk = d.patch_size();
  const std::size_t in_stride = d.in_channels * d.height * d.width;
  std::vector<T> col(d.out_channels == 1 ? 0 : kk * p);
  // Samples are summed in order so the weight gradient is thread-count independent.
  for (std::size_t n = 0; n < d.batch; ++n) {
    const T* gyn = gy + n * d.out_channels * p;
    if (d.out_channels == 1) {
      single_backward_weight(d, x + n * in_stride, gyn, gw);
    } else {
      im2col(d, x + n * in_stride, col.data());
      gemm_nt_accumulate(d.out_channels, kk, p, gyn, col.data(), gw);
    }
    if (gbias) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t co = 0; co < static_cast<std::ptrdiff_t>(d.out_channels); ++co) {
        T s{0};
        for (std::size_t i = 0; i < p; ++i) s += gyn[co * p + i];
        gbias[co] += s;
      }
    }
  }
}

namespace reference {

template <typename T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* bias, T* y) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t co = 0; co < d.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T s = bias ? bias[co] : T{0};
          for (std::size_t ci = 0; ci < d.in_channels; ++ci)
            for (std::size_t ki = 0; ki < d.kernel_h; ++ki)
              for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) -
                                static_cast<std::ptrdiff_t>(d.pad);
                const auto ix = static_cast<std::ptrdiff_t>(ox * d.stride + kj) -
                                static_cast<std::ptrdiff_t>(d.pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(d.height) ||
                    ix >= static_cast<std::ptrdiff_t>(d.width))
                  continue;
                s += w[((co * d.in_channels + ci) * d.kernel_h + ki) * d.kernel_w + kj] *
                     x[((n * d.in_channels + ci) * d.height + iy) * d.width + ix];
              }
          y[((n * d.out_channels + co) * oh + oy) * ow + ox] = s;
        }
}

template <typename T>
void conv2d_backward_input(const ConvDims& d, const T* gy, const T* w, T* gx) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t co = 0; co < d.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T g = gy[((n * d.out_channels + co) * oh + oy) * ow + ox];
          for (std::size_t ci = 0; ci < d.in_channels; ++ci)
            for (std::size_t ki = 0; ki < d.kernel_h; ++ki)
              for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) -
                                static_cast<std::ptrdiff_t>(d.pad);
                const auto ix = static_cast<std::ptrdiff_t>(ox * d.stride + kj) -
                                static_cast<std::ptrdiff_t>(d.pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(d.height) ||
                    ix >= static_cast<std::ptrdiff_t>(d.width))
                  continue;
                gx[((n * d.in_channels + ci) * d.height + iy) * d.width + ix] +=
                    g * w[((co * d.in_channels + ci) * d.kernel_h + ki) * d.kernel_w + kj];
              }
        }
}

template <typename T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* gy, T* gw, T* gbias) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t co = 0; co < d.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T g = gy[((n * d.out_channels + co) * oh + oy) * ow + ox];
          if (gbias) gbias[co] += g;
          for (std::size_t ci = 0; ci < d.in_channels; ++ci)
            for (std::size_t ki = 0; ki < d.kernel_h; ++ki)
              for (std::size_t kj = 0; kj < d.kernel_w; ++kj) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * d.stride + ki) -
                                static_cast<std::ptrdiff_t>(d.pad);
                const auto ix = static_cast<std::ptrdiff_t>(ox * d.stride + kj) -
                                static_cast<std::ptrdiff_t>(d.pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(d.height) ||
                    ix >= static_cast<std::ptrdiff_t>(d.width))
                  continue;
                gw[((co * d.in_channels + ci) * d.kernel_h + ki) * d.kernel_w + kj] +=
                    g * x[((n * d.in_channels + ci) * d.height + iy) * d.width + ix];
              }
        }
}

}  // namespace reference

#define LDCT_INSTANTIATE_CONV(T)                                                        \
  template void conv2d_forward<T>(const ConvDims&, const T*, const T*, const T*, T*);   \
  template void conv2d_backward_input<T>(const ConvDims&, const T*, const T*, T*);      \
  template void conv2d_backward_weight<T>(const ConvDims&, const T*, const T*, T*, T*); \
  template void reference::conv2d_forward<T>(const ConvDims&, const T*, const T*,       \
                                             const T*, T*);                             \
  template void reference::conv2d_backward_input<T>(const ConvDims&, const T*,          \
                                                    const T*, T*);                      \
  template void reference::conv2d_backward_weight<T>(const ConvDims&, const T*,         \
                                                     const T*, T*, T*);

LDCT_INSTANTIATE_CONV(float)
LDCT_INSTANTIATE_CONV(double)

#undef LDCT_INSTANTIATE_CONV

}  // namespace ldct::kernels
