#include <doctest.h>

#include <cmath>

#include "ldct/error.hpp"
#include "ldct/nn/ops.hpp"
#include "support.hpp"

using namespace ldct;
using namespace ldct::nn;
using ldct::testing::gradcheck_input;
using ldct::testing::gradcheck_params;
using ldct::testing::random_away_from_zero;
using ldct::testing::random_tensor;

namespace {

constexpr double kTol = 1e-4;
const std::optional<Var<double>> kNone;

// Scalar readout with non-uniform upstream gradients: sum(sigmoid(y + c)).
Var<double> readout(Tape<double>& tape, Var<double> y, std::uint64_t seed = 99) {
  return sum(sigmoid(add(y, tape.constant(random_tensor(y.shape(), seed, -2.0, 2.0)))));
}

}  // namespace

TEST_SUITE("nnkit") {

TEST_CASE("conv identities") {
  Tape<double> tape;
  auto x = tape.constant(random_tensor({2, 1, 5, 6}, 1));
  auto one = tape.constant(Tensor<double>({1, 1, 1, 1}, 1.0));
  CHECK(conv2d(x, one, kNone, 1, 0).value() == x.value());
  auto ones = tape.constant(Tensor<double>({1, 1, 3, 3}, 1.0));
  auto y = conv2d(tape.constant(Tensor<double>({1, 1, 3, 3}, 1.0)), ones, kNone, 1, 0);
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.value()[0] == 9.0);
}

TEST_CASE("conv output extent and shape errors") {
  Tape<double> tape;
  auto x = tape.constant(Tensor<double>({1, 2, 9, 7}));
  auto k = tape.constant(Tensor<double>({3, 2, 3, 3}));
  CHECK(conv2d(x, k, kNone, 2, 1).shape() == Shape{1, 3, 5, 4});
  auto wrong = tape.constant(Tensor<double>({3, 4, 3, 3}));
  try {
    conv2d(x, wrong, kNone, 1, 0);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::shape_mismatch);
    const std::string msg = e.what();
    CHECK(msg.find(to_string(Shape{1, 2, 9, 7})) != std::string::npos);
    CHECK(msg.find(to_string(Shape{3, 4, 3, 3})) != std::string::npos);
  }
  auto kt = tape.constant(Tensor<double>({2, 5, 3, 3}));
  CHECK(conv_transpose2d(x, kt, kNone, 2, 1, 1).shape() == Shape{1, 5, 18, 14});
}

TEST_CASE("backward of trivial losses") {
  Tape<double> tape;
  auto x = tape.variable(random_tensor({2, 3}, 2));
  tape.backward(sum(x));
  for (double g : tape.grad(x).values()) CHECK(g == 1.0);

  Tape<double> t2;
  auto xv = random_tensor({1, 1, 2, 5}, 3);
  auto yv = random_tensor({1, 1, 2, 5}, 4);
  auto a = t2.variable(xv);
  t2.backward(mean_abs_diff(a, t2.constant(yv)));
  for (std::size_t i = 0; i < xv.size(); ++i) CHECK(t2.grad(a)[i] == (xv[i] > yv[i] ? 0.1 : -0.1));

  Tape<double> t3;
  auto v = t3.variable(Tensor<double>({2}, 1.0));
  CHECK_THROWS_AS(t3.backward(v), Error);
}

TEST_CASE("gradcheck: conv and transposed conv") {
  ModelParams<double> params;
  std::mt19937_64 rng(5);
  const auto k = params.add("k", ParamRole::conv_kernel, random_tensor({3, 2, 3, 3}, 6));
  const auto b = params.add("b", ParamRole::bias, random_tensor({3}, 7));
  const auto kt = params.add("kt", ParamRole::conv_kernel, random_tensor({3, 2, 3, 3}, 8));
  const auto bt = params.add("bt", ParamRole::bias, random_tensor({2}, 9));
  const auto x = random_tensor({2, 2, 6, 5}, 10);
  auto build = [&](Tape<double>& tape, Var<double> in) {
    auto h = conv2d(in, tape.param(params[k]), std::optional(tape.param(params[b])), 2, 1);
    h = conv_transpose2d(h, tape.param(params[kt]), std::optional(tape.param(params[bt])), 2, 1, 1);
    return readout(tape, h);
  };
  CHECK(gradcheck_params(params, [&](Tape<double>& t) { return build(t, t.constant(x)); }) < kTol);
  CHECK(gradcheck_input(x, build) < kTol);
}

TEST_CASE("gradcheck: instance norm with affine parameters") {
  ModelParams<double> params;
  const auto s = params.add("s", ParamRole::norm_scale, random_tensor({3}, 11, 0.5, 1.5));
  const auto t = params.add("t", ParamRole::norm_shift, random_tensor({3}, 12));
  const auto x = random_tensor({2, 3, 4, 4}, 13);
  auto build = [&](Tape<double>& tape, Var<double> in) {
    return readout(tape, instance_norm(in, std::optional(tape.param(params[s])), std::optional(tape.param(params[t]))));
  };
  CHECK(gradcheck_params(params, [&](Tape<double>& tp) { return build(tp, tp.constant(x)); }) < kTol);
  CHECK(gradcheck_input(x, build) < kTol);
}

TEST_CASE("instance norm statistics") {
  Tape<double> tape;
  auto y = instance_norm(tape.constant(random_tensor({2, 3, 8, 8}, 14, -3.0, 7.0)), kNone, kNone);
  const auto& v = y.value();
  for (std::size_t plane = 0; plane < 6; ++plane) {
    double m = 0.0, q = 0.0;
    for (std::size_t i = 0; i < 64; ++i) m += v[plane * 64 + i];
    m /= 64.0;
    for (std::size_t i = 0; i < 64; ++i) q += (v[plane * 64 + i] - m) * (v[plane * 64 + i] - m);
    CHECK(std::abs(m) < 1e-6);
    // eps = 1e-5 inside the square root shrinks unit-variance outputs slightly.
    CHECK(std::abs(std::sqrt(q / 64.0) - 1.0) < 1e-5);
  }
}

TEST_CASE("gradcheck: pointwise, padding and structural ops") {
  const auto x = random_away_from_zero({1, 2, 4, 5}, 15);
  CHECK(gradcheck_input(x, [](Tape<double>& t, Var<double> in) { return readout(t, relu(in)); }) < kTol);
  CHECK(gradcheck_input(x, [](Tape<double>& t, Var<double> in) { return readout(t, leaky_relu(in, 0.2)); }) < kTol);
  CHECK(gradcheck_input(x, [](Tape<double>& t, Var<double> in) { return readout(t, nn::tanh(in)); }) < kTol);
  CHECK(gradcheck_input(x, [](Tape<double>& t, Var<double> in) { return readout(t, sigmoid(in)); }) < kTol);
  CHECK(gradcheck_input(x, [](Tape<double>& t, Var<double> in) { return readout(t, reflect_pad2d(in, 2)); }) < kTol);
  CHECK(gradcheck_input(x, [](Tape<double>& t, Var<double> in) { return readout(t, scale(in, -1.7)); }) < kTol);
  CHECK(gradcheck_input(x, [](Tape<double>& t, Var<double> in) { return mean(nn::tanh(in)); }) < kTol);
  const auto other = random_tensor({1, 1, 4, 5}, 16);
  CHECK(gradcheck_input(x, [&](Tape<double>& t, Var<double> in) {
          auto c = t.constant(other);
          return readout(t, concat_channels<double>({c, in, in}));
        }) < kTol);
  const auto y = random_tensor({1, 2, 4, 5}, 17);
  CHECK(gradcheck_input(x, [&](Tape<double>& t, Var<double> in) {
          return readout(t, sub(add(in, t.constant(y)), scale(in, 0.3)));
        }) < kTol);
}

TEST_CASE("gradcheck: loss reductions") {
  auto x = random_tensor({1, 1, 4, 4}, 18);
  auto target = x;
  for (std::size_t i = 0; i < target.size(); ++i) target[i] += (i % 2 ? 0.3 : -0.4);
  CHECK(gradcheck_input(x, [&](Tape<double>& t, Var<double> in) { return mean_abs_diff(in, t.constant(target)); }) < kTol);
  const auto p = random_tensor({2, 1, 3, 3}, 19, 0.1, 0.9);
  for (double label : {0.0, 1.0})
    CHECK(gradcheck_input(p, [&](Tape<double>& t, Var<double> in) { return binary_cross_entropy(in, label); }) < kTol);
}

TEST_CASE("detach blocks gradients and shapes are checked") {
  Tape<double> tape;
  auto x = tape.variable(random_tensor({1, 1, 2, 2}, 20));
  auto loss = add(sum(x), sum(detach(scale(x, 5.0))));
  tape.backward(loss);
  for (double g : tape.grad(x).values()) CHECK(g == 1.0);
  Tape<double> t2;
  CHECK_THROWS_AS(add(t2.constant(Tensor<double>({1, 2})), t2.constant(Tensor<double>({2, 1}))), Error);
  CHECK_THROWS_AS(reflect_pad2d(t2.constant(Tensor<double>({1, 1, 2, 2})), 2), Error);
}

TEST_CASE("forward and backward are bit-reproducible") {
  auto run = [] {
    ModelParams<double> params;
    const auto k = params.add("k", ParamRole::conv_kernel, random_tensor({4, 1, 3, 3}, 21));
    Tape<double> tape;
    auto y = instance_norm(conv2d(tape.constant(random_tensor({2, 1, 9, 9}, 22)), tape.param(params[k]), kNone, 1, 1),
                           kNone, kNone);
    tape.backward(readout(tape, leaky_relu(y)));
    return std::pair{y.value(), params[k].grad};
  };
  CHECK(run() == run());
}

TEST_CASE("gradients accumulate on parameters across tapes") {
  ModelParams<double> params;
  const auto k = params.add("k", ParamRole::bias, Tensor<double>({3}, 0.5));
  for (int pass = 0; pass < 2; ++pass) {
    Tape<double> tape;
    tape.backward(sum(tape.param(params[k])));
  }
  for (double g : params[k].grad.values()) CHECK(g == 2.0);
}

}  // TEST_SUITE
