#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "ldct/nn/params.hpp"
#include "ldct/nn/tensor.hpp"

namespace ldct::nn {

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape<T>& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<T>* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode autodiff tape.
///
/// Operations append nodes in evaluation order; backward() walks them in
/// reverse. Parameters enter through param(): their gradients are added to
/// Parameter::grad at the end of backward(), so gradients accumulate across
/// tapes until the optimizer clears them.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> variable(Tensor<T> value);
  Var<T> param(Parameter<T>& p);

  /// Appends an op result. The backward function is kept only when some
  /// parent requires a gradient.
  Var<T> record(Tensor<T> value, std::span<const Var<T>> parents, BackwardFn backward);
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn backward) {
    return record(std::move(value), std::span<const Var<T>>(parents.begin(), parents.size()),
                  std::move(backward));
  }

  const Tensor<T>& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::uint32_t id) const { return !nodes_[id].grad.empty(); }
  /// Gradient buffer of a node, zero-initialised on first access.
  Tensor<T>& grad(std::uint32_t id);
  const Tensor<T>& grad(Var<T> v) const { return nodes_[v.id()].grad; }

  /// Populates gradients of everything reachable from a scalar `loss`.
  void backward(Var<T> loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
  };

  Var<T> push(Node node);

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::uint32_t> param_nodes_;
  bool consumed_ = false;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ldct::nn
