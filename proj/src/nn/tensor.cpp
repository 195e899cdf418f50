#include "ldct/nn/tensor.hpp"

#include <algorithm>

#include "ldct/error.hpp"

namespace ldct::nn {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  require(element_count(shape_) == data_.size(), ErrorCategory::shape_mismatch,
          "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
              to_string(shape_));
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
void Tensor<T>::accumulate(const Tensor& other) {
  require(shape_ == other.shape_, ErrorCategory::shape_mismatch,
          "accumulate: " + to_string(shape_) + " vs " + to_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace ldct::nn
