#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lmkd/tape.hpp"
#include "lmkd/tensor.hpp"

namespace lmkd {

/// Weight of the distillation terms and which decoder layers (1..3) carry
/// feature-aligned (FA) and feature-similarity (FS) terms.
struct DistillConfig {
  double lambda = 1e-2;
  std::array<bool, 3> fa{};
  std::array<bool, 3> fs{};

  static DistillConfig all_layers(double lambda);
  /// Throws std::invalid_argument when lambda is negative or not finite.
  void validate() const;
  bool active() const;
  bool fa_enabled(std::size_t layer) const { return lambda > 0 && fa[layer]; }
  bool fs_enabled(std::size_t layer) const { return lambda > 0 && fs[layer]; }
};

/// Parses a layer list such as "1,2,3" or "" into per-layer toggles.
std::array<bool, 3> parse_layer_list(const std::string& text);
std::string format_layer_list(const std::array<bool, 3>& layers);

/// 1×1 convolution lifting a student feature (C channels) to the teacher's
/// channel count. Owned and trained by the student side.
template <typename T>
struct Adapter {
  Tensor<T> weight;  // C'×C×1×1
  Tensor<T> bias;    // C'

  static Adapter create(std::size_t in_channels, std::size_t out_channels, std::mt19937_64& rng);
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
};

template <typename T>
Tensor<T> align_features(Tape<T>& tape, const Tensor<T>& student_feat, const Adapter<T>& adapter);

/// Mean squared difference between the aligned student feature and the
/// teacher feature. Only `aligned` receives gradient.
template <typename T>
Tensor<T> fa_loss(Tape<T>& tape, const Tensor<T>& aligned, const Tensor<T>& teacher_feat);

/// Dense (H·W)×(H·W) cosine similarities between spatial feature vectors.
struct SimilarityMatrix {
  std::size_t locations = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * locations + j]; }
};

/// Feature vectors with norm below this are treated as zero: every cosine
/// involving them is 0, including the diagonal.
inline constexpr double kCosineEps = 1e-12;

/// Similarity of a single C×H×W (or 1×C×H×W) feature map.
template <typename T>
SimilarityMatrix similarity_matrix(const Tensor<T>& feat);

/// Sum of squared entry differences over (H·W)².
double fs_loss(const SimilarityMatrix& student, const SimilarityMatrix& teacher);

/// Differentiable feature-similarity loss computed straight from the two
/// feature maps, block_rows similarity rows at a time so the full matrices
/// are never held. Batched inputs average over samples. Channel counts may
/// differ; spatial sizes must match. Only `student_feat` receives gradient.
template <typename T>
Tensor<T> fs_loss_features(Tape<T>& tape, const Tensor<T>& student_feat, const Tensor<T>& teacher_feat,
                           std::size_t block_rows = 256);

/// mse_term + lambda · Σ(present terms). A term must be defined exactly when
/// its layer toggle is enabled. Returns `mse_term` itself when nothing is
/// active.
template <typename T>
Tensor<T> kd_loss(Tape<T>& tape, const Tensor<T>& mse_term, const std::array<Tensor<T>, 3>& fa_terms,
                  const std::array<Tensor<T>, 3>& fs_terms, const DistillConfig& cfg);

}  // namespace lmkd
