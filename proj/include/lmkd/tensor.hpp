#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmkd {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Thrown whenever operand shapes are incompatible with an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Storage precision of a run. Verification uses F64, training uses F32.
enum class Precision { F32 = 32, F64 = 64 };

Precision parse_precision(int bits);

/// Shared handle to an N-dimensional array with an optional gradient slot.
///
/// Copies of a Tensor alias the same storage; use clone() for a deep copy.
/// The gradient buffer is allocated lazily by ensure_grad() and accumulates
/// until zero_grad() or drop_grad() is called.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl().shape; }
  std::size_t rank() const { return impl().shape.size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t size() const { return impl().data.size(); }

  std::span<T> data() { return impl().data; }
  std::span<const T> data() const { return impl().data; }
  /// Value of a single-element tensor.
  T item() const;

  bool requires_grad() const { return impl().requires_grad; }
  void set_requires_grad(bool on) { impl().requires_grad = on; }

  bool has_grad() const { return impl().has_grad; }
  std::span<T> grad();
  std::span<const T> grad() const;
  /// Gradient buffer, allocated zero-filled on first use. Const because a
  /// Tensor is a handle: constness does not reach the shared storage.
  std::span<T> ensure_grad() const;
  void zero_grad() const;
  void drop_grad() const;

  bool same(const Tensor& other) const { return impl_ == other.impl_; }
  /// Deep copy of shape and values; the copy has no gradient.
  Tensor clone() const;

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
  };

  Impl& impl();
  const Impl& impl() const;
  Impl& shared() const;

  std::shared_ptr<Impl> impl_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace lmkd
