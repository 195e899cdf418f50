#include "ldct/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ldct/error.hpp"
#include "ldct/kernels/conv.hpp"

namespace ldct::nn {

namespace {

void require_rank4(const Shape& s, const char* what) {
  require(s.size() == 4, ErrorCategory::shape_mismatch,
          std::string(what) + " expects an NCHW tensor, got " + to_string(s));
}

template <typename T>
void require_same(Var<T> a, Var<T> b, const char* what) {
  require(a.shape() == b.shape(), ErrorCategory::shape_mismatch,
          std::string(what) + ": shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
              " differ");
}

template <typename T>
std::vector<Var<T>> operands(Var<T> a, std::optional<Var<T>> b, std::optional<Var<T>> c = {}) {
  std::vector<Var<T>> v{a};
  if (b) v.push_back(*b);
  if (c) v.push_back(*c);
  return v;
}

template <typename T, typename F, typename G>
Var<T> elementwise(Var<T> x, F forward, G derivative_from_output) {
  const auto& xv = x.value();
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = forward(xv[i]);
  const auto xid = x.id();
  return x.tape().record(std::move(y), {x}, [xid, derivative_from_output](Tape<T>& t, std::uint32_t self) {
    if (!t.requires_grad(xid)) return;
    const auto& g = t.grad(self);
    const auto& yv = t.value(self);
    const auto& xin = t.value(xid);
    auto& gx = t.grad(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * derivative_from_output(xin[i], yv[i]);
  });
}

template <typename T>
Tensor<T> scalar_tensor(T v) {
  return Tensor<T>(Shape{}, std::vector<T>{v});
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, std::optional<Var<T>> bias, std::size_t stride,
              std::size_t pad) {
  const auto& xs = x.shape();
  const auto& ks = kernel.shape();
  require_rank4(xs, "conv2d input");
  require_rank4(ks, "conv2d kernel");
  require(xs[1] == ks[1], ErrorCategory::shape_mismatch,
          "conv2d: input " + to_string(xs) + " has " + std::to_string(xs[1]) +
              " channels but kernel " + to_string(ks) + " expects " + std::to_string(ks[1]));
  require(stride >= 1, ErrorCategory::invalid_argument, "conv2d: stride must be >= 1");
  require(xs[2] + 2 * pad >= ks[2] && xs[3] + 2 * pad >= ks[3], ErrorCategory::shape_mismatch,
          "conv2d: kernel " + to_string(ks) + " larger than padded input " + to_string(xs));
  if (bias)
    require(bias->shape() == Shape{ks[0]}, ErrorCategory::shape_mismatch,
            "conv2d: bias " + to_string(bias->shape()) + " does not match kernel " + to_string(ks));

  kernels::ConvDims d{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], ks[3], stride, pad};
  Tensor<T> y({d.batch, d.out_channels, d.out_height(), d.out_width()});
  kernels::conv2d_forward(d, x.value().data(), kernel.value().data(),
                          bias ? bias->value().data() : nullptr, y.data());

  const auto xid = x.id(), kid = kernel.id();
  const std::optional<std::uint32_t> bid = bias ? std::optional(bias->id()) : std::nullopt;
  auto parts = operands(x, std::optional<Var<T>>(kernel), bias);
  return x.tape().record(std::move(y), parts, [d, xid, kid, bid](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(xid))
      kernels::conv2d_backward_input(d, g.data(), t.value(kid).data(), t.grad(xid).data());
    const bool wk = t.requires_grad(kid);
    const bool wb = bid && t.requires_grad(*bid);
    if (wk || wb) {
      Tensor<T> gw_scratch;
      T* gw = nullptr;
      if (wk) {
        gw = t.grad(kid).data();
      } else {
        gw_scratch = Tensor<T>(t.value(kid).shape());
        gw = gw_scratch.data();
      }
      kernels::conv2d_backward_weight(d, t.value(xid).data(), g.data(), gw,
                                      wb ? t.grad(*bid).data() : nullptr);
    }
  });
}

template <typename T>
Var<T> conv_transpose2d(Var<T> x, Var<T> kernel, std::optional<Var<T>> bias, std::size_t stride,
                        std::size_t pad, std::size_t output_pad) {
  const auto& xs = x.shape();
  const auto& ks = kernel.shape();
  require_rank4(xs, "conv_transpose2d input");
  require_rank4(ks, "conv_transpose2d kernel");
  require(xs[1] == ks[0], ErrorCategory::shape_mismatch,
          "conv_transpose2d: input " + to_string(xs) + " has " + std::to_string(xs[1]) +
              " channels but kernel " + to_string(ks) + " expects " + std::to_string(ks[0]));
  require(stride >= 1 && output_pad < stride, ErrorCategory::invalid_argument,
          "conv_transpose2d: need stride >= 1 and output_pad < stride");
  const std::size_t oh = (xs[2] - 1) * stride + ks[2] + output_pad;
  const std::size_t ow = (xs[3] - 1) * stride + ks[3] + output_pad;
  require(oh > 2 * pad && ow > 2 * pad, ErrorCategory::shape_mismatch,
          "conv_transpose2d: padding too large for " + to_string(xs));
  const std::size_t cout = ks[1];
  if (bias)
    require(bias->shape() == Shape{cout}, ErrorCategory::shape_mismatch,
            "conv_transpose2d: bias " + to_string(bias->shape()) + " does not match kernel " +
                to_string(ks));

  // The adjoint of a conv whose input is our output and whose output is our input.
  kernels::ConvDims d{xs[0], cout, oh - 2 * pad, ow - 2 * pad, xs[1], ks[2], ks[3], stride, pad};
  Tensor<T> y({d.batch, cout, d.height, d.width});
  kernels::conv2d_backward_input(d, x.value().data(), kernel.value().data(), y.data());
  const std::size_t plane = d.height * d.width;
  if (bias) {
    const auto& b = bias->value();
    for (std::size_t n = 0; n < d.batch; ++n)
      for (std::size_t c = 0; c < cout; ++c) {
        T* p = y.data() + (n * cout + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] += b[c];
      }
  }

  const auto xid = x.id(), kid = kernel.id();
  const std::optional<std::uint32_t> bid = bias ? std::optional(bias->id()) : std::nullopt;
  auto parts = operands(x, std::optional<Var<T>>(kernel), bias);
  return x.tape().record(std::move(y), parts, [d, xid, kid, bid, plane](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(xid)) {
      Tensor<T> tmp(t.value(xid).shape());
      kernels::conv2d_forward(d, g.data(), t.value(kid).data(), static_cast<const T*>(nullptr),
                              tmp.data());
      t.grad(xid).accumulate(tmp);
    }
    if (t.requires_grad(kid))
      kernels::conv2d_backward_weight(d, g.data(), t.value(xid).data(), t.grad(kid).data(),
                                      static_cast<T*>(nullptr));
    if (bid && t.requires_grad(*bid)) {
      auto& gb = t.grad(*bid);
      for (std::size_t n = 0; n < d.batch; ++n)
        for (std::size_t c = 0; c < d.in_channels; ++c) {
          const T* p = g.data() + (n * d.in_channels + c) * plane;
          T s{0};
          for (std::size_t i = 0; i < plane; ++i) s += p[i];
          gb[c] += s;
        }
    }
  });
}

template <typename T>
Var<T> reflect_pad2d(Var<T> x, std::size_t pad) {
  const auto& s = x.shape();
  require_rank4(s, "reflect_pad2d");
  require(pad < s[2] && pad < s[3], ErrorCategory::shape_mismatch,
          "reflect_pad2d: pad " + std::to_string(pad) + " too large for " + to_string(s));
  const std::size_t h = s[2], w = s[3], oh = h + 2 * pad, ow = w + 2 * pad;
  auto src = [pad](std::size_t i, std::size_t n) {
    auto k = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    if (k < 0) k = -k;
    if (k > last) k = 2 * last - k;
    return static_cast<std::size_t>(k);
  };
  std::vector<std::size_t> rmap(oh), cmap(ow);
  for (std::size_t i = 0; i < oh; ++i) rmap[i] = src(i, h);
  for (std::size_t j = 0; j < ow; ++j) cmap[j] = src(j, w);
  const std::size_t planes = s[0] * s[1];
  Tensor<T> y({s[0], s[1], oh, ow});
  const T* xv = x.value().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j)
        y[(p * oh + i) * ow + j] = xv[(p * h + rmap[i]) * w + cmap[j]];
  const auto xid = x.id();
  return x.tape().record(std::move(y), {x}, [=](Tape<T>& t, std::uint32_t self) {
    if (!t.requires_grad(xid)) return;
    const auto& g = t.grad(self);
    auto& gx = t.grad(xid);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j)
          gx[(p * h + rmap[i]) * w + cmap[j]] += g[(p * oh + i) * ow + j];
  });
}

template <typename T>
Var<T> instance_norm(Var<T> x, std::optional<Var<T>> scale, std::optional<Var<T>> shift, double eps) {
  const auto& s = x.shape();
  require_rank4(s, "instance_norm");
  const std::size_t n = s[0], c = s[1], plane = s[2] * s[3];
  for (auto* p : {&scale, &shift})
    if (*p)
      require((*p)->shape() == Shape{c}, ErrorCategory::shape_mismatch,
              "instance_norm: affine parameter " + to_string((*p)->shape()) + " for input " +
                  to_string(s));
  const auto& xv = x.value();
  Tensor<T> xhat(s), y(s);
  std::vector<T> inv_std(n * c);
  for (std::size_t p = 0; p < n * c; ++p) {
    const T* in = xv.data() + p * plane;
    double m = 0.0;
    for (std::size_t i = 0; i < plane; ++i) m += in[i];
    m /= static_cast<double>(plane);
    double v = 0.0;
    for (std::size_t i = 0; i < plane; ++i) v += (in[i] - m) * (in[i] - m);
    v /= static_cast<double>(plane);
    const double inv = 1.0 / std::sqrt(v + eps);
    inv_std[p] = static_cast<T>(inv);
    const T g = scale ? scale->value()[p % c] : T{1};
    const T b = shift ? shift->value()[p % c] : T{0};
    for (std::size_t i = 0; i < plane; ++i) {
      const T h = static_cast<T>((in[i] - m) * inv);
      xhat[p * plane + i] = h;
      y[p * plane + i] = g * h + b;
    }
  }
  const auto xid = x.id();
  const std::optional<std::uint32_t> gid = scale ? std::optional(scale->id()) : std::nullopt;
  const std::optional<std::uint32_t> bid = shift ? std::optional(shift->id()) : std::nullopt;
  auto parts = operands(x, scale, shift);
  return x.tape().record(
      std::move(y), parts,
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& t, std::uint32_t self) {
        const auto& g = t.grad(self);
        const bool wx = t.requires_grad(xid);
        const bool wg = gid && t.requires_grad(*gid);
        const bool wb = bid && t.requires_grad(*bid);
        for (std::size_t p = 0; p < n * c; ++p) {
          const std::size_t ch = p % c;
          const T* gp = g.data() + p * plane;
          const T* hp = xhat.data() + p * plane;
          const T gamma = gid ? t.value(*gid)[ch] : T{1};
          double sum_g = 0.0, sum_gh = 0.0;
          for (std::size_t i = 0; i < plane; ++i) {
            sum_g += gp[i];
            sum_gh += gp[i] * hp[i];
          }
          if (wg) t.grad(*gid)[ch] += static_cast<T>(sum_gh);
          if (wb) t.grad(*bid)[ch] += static_cast<T>(sum_g);
          if (wx) {
            T* gx = t.grad(xid).data() + p * plane;
            const double mg = sum_g / static_cast<double>(plane);
            const double mgh = sum_gh / static_cast<double>(plane);
            const double k = gamma * inv_std[p];
            for (std::size_t i = 0; i < plane; ++i)
              gx[i] += static_cast<T>(k * (gp[i] - mg - hp[i] * mgh));
          }
        }
      });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return elementwise(x, [](T v) { return v > T{0} ? v : T{0}; },
                     [](T in, T) { return in > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, double slope) {
  const T a = static_cast<T>(slope);
  return elementwise(x, [a](T v) { return v > T{0} ? v : a * v; },
                     [a](T in, T) { return in > T{0} ? T{1} : a; });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  return elementwise(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  return elementwise(x, [](T v) { return T{1} / (T{1} + std::exp(-v)); },
                     [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same(a, b, "add");
  Tensor<T> y = a.value();
  y.accumulate(b.value());
  const auto aid = a.id(), bid = b.id();
  return a.tape().record(std::move(y), {a, b}, [aid, bid](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(aid)) t.grad(aid).accumulate(g);
    if (t.requires_grad(bid)) t.grad(bid).accumulate(g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same(a, b, "sub");
  Tensor<T> y = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const auto aid = a.id(), bid = b.id();
  return a.tape().record(std::move(y), {a, b}, [aid, bid](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(aid)) t.grad(aid).accumulate(g);
    if (t.requires_grad(bid)) {
      auto& gb = t.grad(bid);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> x, double factor) {
  const T f = static_cast<T>(factor);
  return elementwise(x, [f](T v) { return f * v; }, [f](T, T) { return f; });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), ErrorCategory::invalid_argument, "concat_channels: no operands");
  const auto& s0 = parts.front().shape();
  require_rank4(s0, "concat_channels");
  std::size_t channels = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    require(s.size() == 4 && s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
            ErrorCategory::shape_mismatch,
            "concat_channels: " + to_string(s) + " incompatible with " + to_string(s0));
    channels += s[1];
  }
  const std::size_t n = s0[0], plane = s0[2] * s0[3];
  Tensor<T> y({n, channels, s0[2], s0[3]});
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets, widths;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.shape()[1];
    const T* src = p.value().data();
    for (std::size_t b = 0; b < n; ++b)
      std::copy(src + b * c * plane, src + (b + 1) * c * plane, y.data() + (b * channels + off) * plane);
    ids.push_back(p.id());
    offsets.push_back(off);
    widths.push_back(c);
    off += c;
  }
  return parts.front().tape().record(
      std::move(y), std::span<const Var<T>>(parts),
      [=](Tape<T>& t, std::uint32_t self) {
        const auto& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          auto& gp = t.grad(ids[k]);
          const std::size_t c = widths[k];
          for (std::size_t b = 0; b < n; ++b) {
            const T* src = g.data() + (b * channels + offsets[k]) * plane;
            T* dst = gp.data() + b * c * plane;
            for (std::size_t i = 0; i < c * plane; ++i) dst[i] += src[i];
          }
        }
      });
}

template <typename T>
Var<T> sum(Var<T> x) {
  double s = 0.0;
  for (auto v : x.value().values()) s += v;
  const auto xid = x.id();
  return x.tape().record(scalar_tensor(static_cast<T>(s)), {x}, [xid](Tape<T>& t, std::uint32_t self) {
    if (!t.requires_grad(xid)) return;
    const T g = t.grad(self)[0];
    for (auto& v : t.grad(xid).values()) v += g;
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t n = x.value().size();
  require(n > 0, ErrorCategory::invalid_argument, "mean of an empty tensor");
  double s = 0.0;
  for (auto v : x.value().values()) s += v;
  const auto xid = x.id();
  return x.tape().record(scalar_tensor(static_cast<T>(s / n)), {x}, [xid, n](Tape<T>& t, std::uint32_t self) {
    if (!t.requires_grad(xid)) return;
    const T g = t.grad(self)[0] / static_cast<T>(n);
    for (auto& v : t.grad(xid).values()) v += g;
  });
}

template <typename T>
Var<T> mean_abs_diff(Var<T> a, Var<T> b) {
  require_same(a, b, "mean_abs_diff");
  const std::size_t n = a.value().size();
  require(n > 0, ErrorCategory::invalid_argument, "mean_abs_diff of empty tensors");
  const auto &av = a.value(), &bv = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(static_cast<double>(av[i]) - bv[i]);
  const auto aid = a.id(), bid = b.id();
  return a.tape().record(scalar_tensor(static_cast<T>(s / n)), {a, b}, [aid, bid, n](Tape<T>& t, std::uint32_t self) {
    const T g = t.grad(self)[0] / static_cast<T>(n);
    const auto &av = t.value(aid), &bv = t.value(bid);
    const bool wa = t.requires_grad(aid), wb = t.requires_grad(bid);
    for (std::size_t i = 0; i < n; ++i) {
      const T d = av[i] - bv[i];
      const T sg = d > T{0} ? g : (d < T{0} ? -g : T{0});
      if (wa) t.grad(aid)[i] += sg;
      if (wb) t.grad(bid)[i] -= sg;
    }
  });
}

template <typename T>
Var<T> binary_cross_entropy(Var<T> probs, double label, double eps) {
  require(label == 0.0 || label == 1.0, ErrorCategory::invalid_argument,
          "binary_cross_entropy: label must be 0 or 1");
  const auto& pv = probs.value();
  const std::size_t n = pv.size();
  require(n > 0, ErrorCategory::invalid_argument, "binary_cross_entropy of an empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(static_cast<double>(pv[i]), eps, 1.0 - eps);
    s -= label == 1.0 ? std::log(p) : std::log(1.0 - p);
  }
  const auto pid = probs.id();
  return probs.tape().record(scalar_tensor(static_cast<T>(s / n)), {probs},
                             [pid, n, label, eps](Tape<T>& t, std::uint32_t self) {
    if (!t.requires_grad(pid)) return;
    const double g = t.grad(self)[0] / static_cast<double>(n);
    const auto& pv = t.value(pid);
    auto& gp = t.grad(pid);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = pv[i];
      if (p < eps || p > 1.0 - eps) continue;
      gp[i] += static_cast<T>(label == 1.0 ? -g / p : g / (1.0 - p));
    }
  });
}

template <typename T>
Var<T> detach(Var<T> x) {
  return x.tape().constant(x.value());
}

#define LDCT_INSTANTIATE_OPS(T)                                                                   \
  template Var<T> conv2d<T>(Var<T>, Var<T>, std::optional<Var<T>>, std::size_t, std::size_t);     \
  template Var<T> conv_transpose2d<T>(Var<T>, Var<T>, std::optional<Var<T>>, std::size_t,         \
                                      std::size_t, std::size_t);                                  \
  template Var<T> reflect_pad2d<T>(Var<T>, std::size_t);                                          \
  template Var<T> instance_norm<T>(Var<T>, std::optional<Var<T>>, std::optional<Var<T>>, double); \
  template Var<T> relu<T>(Var<T>);                                                                \
  template Var<T> leaky_relu<T>(Var<T>, double);                                                  \
  template Var<T> tanh<T>(Var<T>);                                                                \
  template Var<T> sigmoid<T>(Var<T>);                                                             \
  template Var<T> add<T>(Var<T>, Var<T>);                                                         \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                         \
  template Var<T> scale<T>(Var<T>, double);                                                       \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                                 \
  template Var<T> sum<T>(Var<T>);                                                                 \
  template Var<T> mean<T>(Var<T>);                                                                \
  template Var<T> mean_abs_diff<T>(Var<T>, Var<T>);                                               \
  template Var<T> binary_cross_entropy<T>(Var<T>, double, double);                                \
  template Var<T> detach<T>(Var<T>);

LDCT_INSTANTIATE_OPS(float)
LDCT_INSTANTIATE_OPS(double)

#undef LDCT_INSTANTIATE_OPS

}  // namespace ldct::nn
