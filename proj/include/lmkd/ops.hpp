#pragma once

#include <cstddef>

#include "lmkd/tape.hpp"
#include "lmkd/tensor.hpp"

// Differentiable operations. Image-like tensors are either C×H×W or
// N×C×H×W; outputs keep the rank of the input.

namespace lmkd {

enum class Mode { Train, Eval };

/// Output side of a convolution window sweep.
std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);
/// Output side of a transposed convolution: (in - 1) * stride - 2 * padding + kernel.
std::size_t deconv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

/// Dense convolution. weight is C_out×C_in×k×k; bias is optional (undefined
/// tensor) or of length C_out.
template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride, std::size_t padding);

/// Per-channel convolution. weight is C×1×k×k.
template <typename T>
Tensor<T> depthwise_conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                           std::size_t stride, std::size_t padding);

/// Adjoint of conv2d with the same weight layout read as C_in×C_out×k×k.
template <typename T>
Tensor<T> transposed_conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                            std::size_t stride, std::size_t padding);

/// Running statistics owned by a batch-norm layer. Not trainable.
template <typename T>
struct RunningStats {
  Tensor<T> mean;
  Tensor<T> var;
  double momentum = 0.1;
  double eps = 1e-5;

  static RunningStats init(std::size_t channels);
};

/// Train mode normalizes with batch statistics and updates `stats`;
/// eval mode normalizes with `stats`.
template <typename T>
Tensor<T> batchnorm2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& scale,
                      const Tensor<T>& shift, RunningStats<T>& stats, Mode mode);

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& input);

template <typename T>
Tensor<T> relu6(Tape<T>& tape, const Tensor<T>& input);

/// Window maximum; padded cells never win.
template <typename T>
Tensor<T> max_pool2d(Tape<T>& tape, const Tensor<T>& input, std::size_t kernel,
                     std::size_t stride, std::size_t padding);

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

/// Multiplies every element by a constant.
template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& input, T factor);

/// Mean of squared element differences.
template <typename T>
Tensor<T> mse(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace lmkd
