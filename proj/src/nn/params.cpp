#include "ldct/nn/params.hpp"

#include "ldct/error.hpp"

namespace ldct::nn {

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::conv_kernel: return "conv_kernel";
    case ParamRole::bias: return "bias";
    case ParamRole::norm_scale: return "norm_scale";
    case ParamRole::norm_shift: return "norm_shift";
  }
  return "unknown";
}

template <typename T>
std::size_t ModelParams<T>::add(std::string name, ParamRole role, Tensor<T> value) {
  require(!index_.contains(name), ErrorCategory::invalid_argument, "duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Parameter<T>{std::move(name), role, std::move(value), {}});
  return entries_.size() - 1;
}

template <typename T>
Parameter<T>* ModelParams<T>::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

template <typename T>
const Parameter<T>* ModelParams<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

template <typename T>
std::size_t ModelParams<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto& p : entries_) p.zero_grad();
}

template <typename T>
Tensor<T> init_tensor(ParamRole role, Shape shape, std::mt19937_64& rng, double sigma) {
  Tensor<T> t(std::move(shape));
  switch (role) {
    case ParamRole::conv_kernel: {
      std::normal_distribution<double> normal(0.0, sigma);
      for (auto& v : t.values()) v = static_cast<T>(normal(rng));
      break;
    }
    case ParamRole::norm_scale: t.fill(T{1}); break;
    case ParamRole::bias:
    case ParamRole::norm_shift: break;
  }
  return t;
}

template class ModelParams<float>;
template class ModelParams<double>;
template Tensor<float> init_tensor<float>(ParamRole, Shape, std::mt19937_64&, double);
template Tensor<double> init_tensor<double>(ParamRole, Shape, std::mt19937_64&, double);

}  // namespace ldct::nn
