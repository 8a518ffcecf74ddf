#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lmkd/ops.hpp"
#include "lmkd/tape.hpp"
#include "lmkd/tensor.hpp"

namespace lmkd {

enum class BlockKind {
  Conv,              // conv -> [norm] -> [act]
  InvertedResidual,  // [1x1 expand] -> depthwise 3x3 -> 1x1 project (+ identity skip)
  Bottleneck,        // 1x1 -> 3x3 -> 1x1 (+ identity or projection skip) -> relu
  MaxPool,
  Deconv,            // transposed conv -> norm -> act, tapped as a decoder output
  Head,              // 1x1 conv with bias producing one plane per landmark
};

enum class Activation { None, ReLU, ReLU6 };

/// One architectural block. Fields unused by a kind stay at their defaults.
struct BlockSpec {
  BlockKind kind = BlockKind::Conv;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t expand = 1;  // inverted residual expansion factor
  std::size_t mid = 0;     // bottleneck inner width
  Activation act = Activation::None;
  bool norm = false;
  int tap = 0;  // decoder layer 1..3, or 0

  bool operator==(const BlockSpec&) const = default;
};

struct NetworkSpec {
  std::string name;
  std::size_t input_side = 256;
  std::size_t landmarks = 0;
  std::vector<BlockSpec> blocks;

  /// Checks channel chaining, exactly three decoder taps in order, and a
  /// final head producing `landmarks` planes.
  void validate() const;
  std::string to_text() const;
  static NetworkSpec parse(std::string_view text);

  bool operator==(const NetworkSpec&) const = default;
};

NetworkSpec build_student(double width, std::size_t landmarks);
NetworkSpec build_teacher(std::size_t landmarks);

enum class Role { Student, Teacher };

/// Desk-scale variants with the same topology contract (three taps, head at
/// a quarter of the input side, output stride 32 encoder).
struct ToyScale {
  std::size_t input_side = 64;
  std::size_t student_decoder = 64;
  std::size_t teacher_decoder = 128;
};

NetworkSpec build_toy(Role role, double width, std::size_t landmarks, ToyScale scale = {});

struct ModelStats {
  std::uint64_t param_count = 0;
  std::uint64_t flop_count = 0;
};

/// Trainable weights, biases and normalization scale/shift.
std::uint64_t count_params(const NetworkSpec& spec);
/// Multiply-accumulates of conv, depthwise and transposed-conv layers at a
/// square input of `input_side`. A transposed conv counts k²·C_in·C_out per
/// output pixel.
std::uint64_t count_flops(const NetworkSpec& spec, std::size_t input_side);
ModelStats model_stats(const NetworkSpec& spec, std::size_t input_side);

/// Spatial side of the three decoder taps for a given input side.
std::array<std::size_t, 3> tap_sides(const NetworkSpec& spec, std::size_t input_side);
std::array<std::size_t, 3> tap_channels(const NetworkSpec& spec);

template <typename T>
struct ForwardResult {
  Tensor<T> heatmaps;                 // N×L×(S/4)×(S/4)
  std::array<Tensor<T>, 3> features;  // decoder outputs r = 1, 2, 3
};

/// Parameters and normalization buffers instantiated from a NetworkSpec.
///
/// Copies share tensors; use clone() for an independent network.
template <typename T>
class Network {
 public:
  /// Fan-out normal weights, zero biases, unit scale and zero shift.
  static Network init(NetworkSpec spec, std::uint64_t seed);
  /// Adopts existing tensors after checking every shape against the spec.
  static Network from_tensors(NetworkSpec spec, std::vector<Tensor<T>> params, std::vector<Tensor<T>> buffers);

  const NetworkSpec& spec() const { return spec_; }
  /// Trainable tensors in spec order.
  std::vector<Tensor<T>> parameters() const;
  /// Running mean and variance of every normalization, in spec order.
  std::vector<Tensor<T>> buffers() const;
  void set_requires_grad(bool on);
  Network clone() const;

  /// Runs an N×3×S×S (or 3×S×S) batch. S must be divisible by 32.
  ForwardResult<T> forward(Tape<T>& tape, const Tensor<T>& images, Mode mode);

 private:
  struct Unit {
    enum class Op { Dense, Depthwise, Transposed } op = Op::Dense;
    std::size_t stride = 1;
    std::size_t padding = 0;
    Activation act = Activation::None;
    Tensor<T> weight;
    Tensor<T> bias;
    Tensor<T> gamma;
    Tensor<T> beta;
    RunningStats<T> stats;
    bool norm = false;
  };
  struct Block {
    BlockSpec spec;
    std::vector<Unit> units;
    bool has_projection = false;  // last unit is the skip projection
  };

  enum class Slot { Weight, Bias, Gamma, Beta, Mean, Var };
  using Source = std::function<Tensor<T>(Slot, const Shape&, std::size_t fan_out)>;
  static Network assemble(NetworkSpec spec, const Source& source);

  Tensor<T> run_unit(Tape<T>& tape, Unit& u, const Tensor<T>& x, Mode mode);

  NetworkSpec spec_;
  std::vector<Block> blocks_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace lmkd
