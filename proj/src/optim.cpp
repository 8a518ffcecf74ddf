#include "lmkd/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lmkd {

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), T{0});
    v_.emplace_back(p.size(), T{0});
  }
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) {
      throw std::logic_error("adam: parameter " + std::to_string(i) + " " +
                             to_string(params_[i].shape()) + " has no gradient");
    }
  }
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].data();
    const auto g = params_[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      m[j] = static_cast<T>(b1 * m[j] + (1 - b1) * gj);
      v[j] = static_cast<T>(b2 * v[j] + (1 - b2) * gj * gj);
      const double mhat = m[j] / c1, vhat = v[j] / c2;
      w[j] = static_cast<T>(w[j] - options_.lr * mhat / (std::sqrt(vhat) + options_.eps));
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace lmkd
