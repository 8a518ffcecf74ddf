#include "lmkd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lmkd {
namespace {

double projected(const Tensor<double>& out, const std::vector<double>& proj) {
  if (out.size() == 1) return out.item();
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * proj[i];
  return s;
}

}  // namespace

GradCheckResult finite_diff_check(const DiffOp& op, std::vector<Tensor<double>> inputs, double eps,
                                  std::uint64_t seed) {
  std::vector<double> proj;
  auto evaluate = [&]() {
    Tape<double> tape;
    auto out = op(tape, inputs);
    if (proj.size() != out.size()) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      proj.resize(out.size());
      for (auto& p : proj) p = u(rng);
    }
    return projected(out, proj);
  };

  // Analytic pass: backward of the projected scalar.
  for (auto& in : inputs) in.drop_grad();
  {
    Tape<double> tape;
    auto out = op(tape, inputs);
    if (out.size() != 1) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      proj.resize(out.size());
      for (auto& p : proj) p = u(rng);
      auto w = Tensor<double>::from(out.shape(), proj);
      Tensor<double> weighted = Tensor<double>::scalar(0.0);
      // d(sum out*w)/d out = w, seeded directly through a recorded identity.
      tape.record(weighted, {out}, [out, w, weighted]() mutable {
        const double g = weighted.grad()[0];
        auto go = out.ensure_grad();
        for (std::size_t i = 0; i < go.size(); ++i) go[i] += g * w.data()[i];
      });
      tape.backward(weighted);
    } else {
      tape.backward(out);
    }
  }
  std::vector<std::vector<double>> analytic;
  for (auto& in : inputs) {
    if (in.requires_grad() && in.has_grad()) {
      analytic.emplace_back(in.grad().begin(), in.grad().end());
    } else {
      analytic.emplace_back(in.size(), 0.0);
    }
    in.drop_grad();
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    auto x = inputs[k].data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + eps;
      const double fp = evaluate();
      x[i] = orig - eps;
      const double fm = evaluate();
      x[i] = orig;
      const double numeric = (fp - fm) / (2 * eps);
      const double err = std::abs(analytic[k][i] - numeric) / std::max(1e-8, std::abs(numeric));
      if (err > result.max_rel_error) result = {err, k, i};
    }
  }
  return result;
}

}  // namespace lmkd
