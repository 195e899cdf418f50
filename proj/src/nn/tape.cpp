#include "ldct/nn/tape.hpp"

#include "ldct/error.hpp"

namespace ldct::nn {

template <typename T>
Var<T> Tape<T>::push(Node node) {
  require(!consumed_, ErrorCategory::state, "tape already ran backward; start a new tape");
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  return push(Node{std::move(value), {}, {}, false, nullptr});
}

template <typename T>
Var<T> Tape<T>::variable(Tensor<T> value) {
  return push(Node{std::move(value), {}, {}, true, nullptr});
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var<T>(this, it->second);
  auto v = push(Node{p.value, {}, {}, true, &p});
  param_nodes_.emplace(&p, v.id());
  return v;
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::span<const Var<T>> parents, BackwardFn backward) {
  bool needs = false;
  for (const auto& p : parents) {
    require(&p.tape() == this, ErrorCategory::invalid_argument, "operand recorded on another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  return push(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, needs, nullptr});
}

template <typename T>
Tensor<T>& Tape<T>::grad(std::uint32_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  require(&loss.tape() == this, ErrorCategory::invalid_argument, "loss belongs to another tape");
  require(loss.value().size() == 1, ErrorCategory::shape_mismatch,
          "backward needs a scalar loss, got shape " + to_string(loss.shape()));
  require(!consumed_, ErrorCategory::state, "backward already ran on this tape");
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id()).fill(T{1});
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && !n.grad.empty()) n.backward(*this, static_cast<std::uint32_t>(i));
  }
  for (auto& n : nodes_) {
    if (!n.param || n.grad.empty()) continue;
    if (n.param->grad.empty())
      n.param->grad = n.grad;
    else
      n.param->grad.accumulate(n.grad);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace ldct::nn
