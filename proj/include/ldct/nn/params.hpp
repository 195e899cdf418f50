#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ldct/nn/tensor.hpp"

namespace ldct::nn {

enum class ParamRole : std::uint8_t { conv_kernel, bias, norm_scale, norm_shift };

std::string_view to_string(ParamRole role);

template <typename T>
struct Parameter {
  std::string name;
  ParamRole role = ParamRole::conv_kernel;
  Tensor<T> value;
  Tensor<T> grad;  // empty until a backward pass reaches the parameter

  bool has_grad() const noexcept { return !grad.empty(); }
  void zero_grad() { grad = Tensor<T>(); }
};

/// Named parameters in registration order. Networks refer to entries by index.
template <typename T>
class ModelParams {
 public:
  std::size_t add(std::string name, ParamRole role, Tensor<T> value);

  std::size_t size() const noexcept { return entries_.size(); }
  Parameter<T>& operator[](std::size_t i) { return entries_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return entries_[i]; }
  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t scalar_count() const;
  void zero_grad();

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      const auto &x = a.entries_[i], &y = b.entries_[i];
      if (x.name != y.name || x.role != y.role || !(x.value == y.value)) return false;
    }
    return true;
  }

 private:
  std::vector<Parameter<T>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Gaussian initializer: kernels ~ N(0, sigma^2), biases and shifts 0, scales 1.
template <typename T>
Tensor<T> init_tensor(ParamRole role, Shape shape, std::mt19937_64& rng, double sigma = 0.02);

extern template class ModelParams<float>;
extern template class ModelParams<double>;

}  // namespace ldct::nn
