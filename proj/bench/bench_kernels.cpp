// Optimised kernels against their single-threaded reference loops.
#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ldct/kernels/backproject.hpp"
#include "ldct/kernels/conv.hpp"

namespace {

using ldct::kernels::BackprojectDims;
using ldct::kernels::ConvDims;

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// A generator residual-block convolution at the bottleneck of 64 x 64 crops.
ConvDims block_conv(std::size_t width) {
  ConvDims d;
  d.batch = 4;
  d.in_channels = d.out_channels = width;
  d.height = d.width = 16;
  d.kernel_h = d.kernel_w = 3;
  d.pad = 1;
  return d;
}

template <auto Forward>
void conv_forward(benchmark::State& state) {
  const auto d = block_conv(static_cast<std::size_t>(state.range(0)));
  const auto x = random_floats(d.batch * d.in_channels * d.height * d.width, 1);
  const auto w = random_floats(d.out_channels * d.patch_size(), 2);
  const auto b = random_floats(d.out_channels, 3);
  std::vector<float> y(d.batch * d.out_channels * d.out_height() * d.out_width());
  for (auto _ : state) {
    Forward(d, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(y.size() * d.patch_size()));
}

template <auto BackwardWeight>
void conv_backward_weight(benchmark::State& state) {
  const auto d = block_conv(static_cast<std::size_t>(state.range(0)));
  const auto x = random_floats(d.batch * d.in_channels * d.height * d.width, 4);
  const auto gy = random_floats(d.batch * d.out_channels * d.out_height() * d.out_width(), 5);
  std::vector<float> gw(d.out_channels * d.patch_size()), gb(d.out_channels);
  for (auto _ : state) {
    BackwardWeight(d, x.data(), gy.data(), gw.data(), gb.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

template <auto Backproject>
void backprojection(benchmark::State& state) {
  BackprojectDims d;
  d.grid = static_cast<std::size_t>(state.range(0));
  d.views = 180;
  d.bins = static_cast<std::size_t>(std::ceil(d.grid * std::numbers::sqrt2)) + 2;
  d.weight = std::numbers::pi / static_cast<double>(d.views);
  std::vector<double> angles(d.views);
  for (std::size_t v = 0; v < d.views; ++v) angles[v] = static_cast<double>(v) * d.weight;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  std::vector<double> sino(d.views * d.bins), image(d.grid * d.grid);
  for (auto& s : sino) s = n01(rng);
  for (auto _ : state) {
    Backproject(d, angles, sino, image);
    benchmark::DoNotOptimize(image.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.views * image.size()));
}

BENCHMARK(conv_forward<ldct::kernels::conv2d_forward<float>>)->Name("conv_forward/optimised")->Arg(32)->Arg(64);
BENCHMARK(conv_forward<ldct::kernels::reference::conv2d_forward<float>>)
    ->Name("conv_forward/reference")
    ->Arg(32)
    ->Arg(64);
BENCHMARK(conv_backward_weight<ldct::kernels::conv2d_backward_weight<float>>)
    ->Name("conv_backward_weight/optimised")
    ->Arg(32)
    ->Arg(64);
BENCHMARK(conv_backward_weight<ldct::kernels::reference::conv2d_backward_weight<float>>)
    ->Name("conv_backward_weight/reference")
    ->Arg(32)
    ->Arg(64);
BENCHMARK(backprojection<ldct::kernels::backproject>)->Name("backproject/optimised")->Arg(128)->Arg(256);
BENCHMARK(backprojection<ldct::kernels::reference::backproject>)->Name("backproject/reference")->Arg(128)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
