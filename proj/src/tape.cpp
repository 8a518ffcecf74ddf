#include "lmkd/tape.hpp"

#include <algorithm>

namespace lmkd {

template <typename T>
void Tape<T>::record(Tensor<T> output, std::vector<Tensor<T>> inputs, Rule rule) {
  output.set_requires_grad(true);
  entries_.push_back({std::move(output), std::move(inputs), std::move(rule)});
}

template <typename T>
void Tape<T>::backward(Tensor<T> loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + to_string(loss.shape()));
  }
  const auto produced = std::find_if(entries_.begin(), entries_.end(),
                                     [&](const Entry& e) { return e.output.same(loss); });
  if (produced == entries_.end()) {
    throw std::logic_error("backward: loss was not produced on this tape");
  }
  for (auto& e : entries_) e.output.drop_grad();
  loss.ensure_grad()[0] = T{1};
  for (auto it = std::make_reverse_iterator(produced + 1); it != entries_.rend(); ++it) {
    if (it->output.has_grad()) it->rule();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace lmkd
