#pragma once

#include <functional>
#include <vector>

#include "lmkd/tensor.hpp"

namespace lmkd {

/// Ordered record of differentiable operations executed in one unit of work.
///
/// Ops append an entry only when at least one input requires a gradient.
/// backward() replays gradient rules in reverse. Leaf gradients accumulate
/// across calls until the caller zeroes them; gradients of recorded
/// intermediate outputs are reset at the start of every backward().
template <typename T>
class Tape {
 public:
  /// Reads output.grad() and accumulates into the inputs' gradients.
  using Rule = std::function<void()>;

  void record(Tensor<T> output, std::vector<Tensor<T>> inputs, Rule rule);
  void backward(Tensor<T> loss);
  void reset() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    Tensor<T> output;
    std::vector<Tensor<T>> inputs;
    Rule rule;
  };
  std::vector<Entry> entries_;
};

/// True when any of the tensors participates in differentiation.
template <typename T>
bool any_requires_grad(std::initializer_list<const Tensor<T>*> tensors) {
  for (const auto* t : tensors) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace lmkd
