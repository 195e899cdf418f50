#pragma once

#include <optional>
#include <vector>

#include "ldct/nn/tape.hpp"

namespace ldct::nn {

// Differentiable operations. Images are NCHW. Every op validates operand
// shapes and throws ldct::Error(shape_mismatch) naming the offending shapes.

/// Zero-padded cross-correlation; kernel [out, in, kh, kw], bias [out].
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, std::optional<Var<T>> bias, std::size_t stride,
              std::size_t pad);

/// Transposed convolution; kernel [in, out, kh, kw]. Output extent is
/// (H - 1) * stride - 2 * pad + kh + output_pad.
template <typename T>
Var<T> conv_transpose2d(Var<T> x, Var<T> kernel, std::optional<Var<T>> bias, std::size_t stride,
                        std::size_t pad, std::size_t output_pad);

/// Mirror padding without repeating the edge pixel; pad < H and pad < W.
template <typename T>
Var<T> reflect_pad2d(Var<T> x, std::size_t pad);

/// Per-(sample, channel) normalisation with biased variance and optional
/// affine scale/shift of shape [C].
template <typename T>
Var<T> instance_norm(Var<T> x, std::optional<Var<T>> scale, std::optional<Var<T>> shift,
                     double eps = 1e-5);

template <typename T>
Var<T> relu(Var<T> x);
template <typename T>
Var<T> leaky_relu(Var<T> x, double slope = 0.2);
template <typename T>
Var<T> tanh(Var<T> x);
template <typename T>
Var<T> sigmoid(Var<T> x);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> x, double factor);

/// Concatenation along the channel axis; all other extents must agree.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

/// Scalar reductions.
template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);
/// mean |a - b|; the subgradient at ties is 0.
template <typename T>
Var<T> mean_abs_diff(Var<T> a, Var<T> b);
/// -mean[label log p + (1 - label) log(1 - p)] with p clamped to
/// [eps, 1 - eps]; clamped entries pass no gradient.
template <typename T>
Var<T> binary_cross_entropy(Var<T> probs, double label, double eps = 1e-7);

/// Copy of the value with no gradient path.
template <typename T>
Var<T> detach(Var<T> x);

}  // namespace ldct::nn
