#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lmkd/tape.hpp"
#include "lmkd/tensor.hpp"

namespace lmkd {

using DiffOp = std::function<Tensor<double>(Tape<double>&, const std::vector<Tensor<double>>&)>;

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
};

/// Compares reverse-mode gradients with central differences for every
/// coordinate of every input that requires a gradient. Non-scalar outputs
/// are reduced to a scalar by a fixed random projection drawn from `seed`.
/// Error per coordinate is |analytic - numeric| / max(1e-8, |numeric|).
GradCheckResult finite_diff_check(const DiffOp& op, std::vector<Tensor<double>> inputs,
                                  double eps = 1e-5, std::uint64_t seed = 0);

}  // namespace lmkd
