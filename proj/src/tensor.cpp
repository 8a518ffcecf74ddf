#include "lmkd/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace lmkd {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Precision parse_precision(int bits) {
  if (bits == 32) return Precision::F32;
  if (bits == 64) return Precision::F64;
  throw std::invalid_argument("precision must be 32 or 64, got " + std::to_string(bits));
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T{0}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const std::size_t n = numel(shape);
  return from(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("tensor shape " + to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(values);
  t.impl_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t i) const {
  if (i >= rank()) {
    throw ShapeError("dimension " + std::to_string(i) + " out of range for " + to_string(shape()));
  }
  return impl().shape[i];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
  return impl().data[0];
}

template <typename T>
std::span<T> Tensor<T>::grad() {
  if (!impl().has_grad) throw std::logic_error("tensor has no gradient");
  return impl().grad;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!impl().has_grad) throw std::logic_error("tensor has no gradient");
  return impl().grad;
}

template <typename T>
std::span<T> Tensor<T>::ensure_grad() const {
  auto& d = shared();
  if (!d.has_grad) {
    d.grad.assign(d.data.size(), T{0});
    d.has_grad = true;
  }
  return d.grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  auto& d = shared();
  if (d.has_grad) std::fill(d.grad.begin(), d.grad.end(), T{0});
}

template <typename T>
void Tensor<T>::drop_grad() const {
  auto& d = shared();
  d.grad.clear();
  d.grad.shrink_to_fit();
  d.has_grad = false;
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from(impl().shape, impl().data, false);
}

template <typename T>
typename Tensor<T>::Impl& Tensor<T>::impl() {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return *impl_;
}

template <typename T>
const typename Tensor<T>::Impl& Tensor<T>::impl() const {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return *impl_;
}

template <typename T>
typename Tensor<T>::Impl& Tensor<T>::shared() const {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return *impl_;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace lmkd
