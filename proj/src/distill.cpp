#include "lmkd/distill.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lmkd/ops.hpp"

namespace lmkd {

DistillConfig DistillConfig::all_layers(double lambda) {
  DistillConfig c;
  c.lambda = lambda;
  c.fa = {true, true, true};
  c.fs = {true, true, true};
  return c;
}

void DistillConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0) {
    std::ostringstream os;
    os << "lambda must be a finite non-negative number, got " << lambda;
    throw std::invalid_argument(os.str());
  }
}

bool DistillConfig::active() const {
  for (std::size_t r = 0; r < 3; ++r) {
    if (fa_enabled(r) || fs_enabled(r)) return true;
  }
  return false;
}

std::array<bool, 3> parse_layer_list(const std::string& text) {
  std::array<bool, 3> layers{};
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item != "1" && item != "2" && item != "3") {
      throw std::invalid_argument("layer list entries must be 1, 2 or 3, got '" + item + "'");
    }
    layers[static_cast<std::size_t>(item[0] - '1')] = true;
  }
  return layers;
}

std::string format_layer_list(const std::array<bool, 3>& layers) {
  std::string out;
  for (std::size_t r = 0; r < 3; ++r) {
    if (!layers[r]) continue;
    if (!out.empty()) out += ',';
    out += static_cast<char>('1' + r);
  }
  return out;
}

template <typename T>
Adapter<T> Adapter<T>::create(std::size_t in_channels, std::size_t out_channels, std::mt19937_64& rng) {
  // Fan-out normal initialisation, matching the network layers.
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(out_channels)));
  std::vector<T> w(out_channels * in_channels);
  for (auto& v : w) v = static_cast<T>(dist(rng));
  return {Tensor<T>::from({out_channels, in_channels, 1, 1}, std::move(w), true),
          Tensor<T>::zeros({out_channels}, true)};
}

template <typename T>
Tensor<T> align_features(Tape<T>& tape, const Tensor<T>& student_feat, const Adapter<T>& adapter) {
  const std::size_t channels = student_feat.rank() == 4 ? student_feat.dim(1) : student_feat.dim(0);
  if (channels != adapter.in_channels()) {
    throw ShapeError("align_features: feature has " + std::to_string(channels) +
                     " channels, adapter expects " + std::to_string(adapter.in_channels()));
  }
  return conv2d(tape, student_feat, adapter.weight, adapter.bias, 1, 0);
}

template <typename T>
Tensor<T> fa_loss(Tape<T>& tape, const Tensor<T>& aligned, const Tensor<T>& teacher_feat) {
  if (aligned.shape() != teacher_feat.shape()) {
    throw ShapeError("fa_loss: aligned feature " + to_string(aligned.shape()) + " vs teacher feature " +
                     to_string(teacher_feat.shape()));
  }
  const std::size_t n = aligned.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(aligned.data()[i]) - static_cast<double>(teacher_feat.data()[i]);
    acc += d * d;
  }
  auto out = Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));
  if (aligned.requires_grad()) {
    tape.record(out, {aligned}, [out, aligned, teacher_feat, n]() mutable {
      const double g = out.grad()[0] * 2.0 / static_cast<double>(n);
      auto ga = aligned.ensure_grad();
      const auto a = aligned.data();
      const auto t = teacher_feat.data();
      for (std::size_t i = 0; i < n; ++i) ga[i] += static_cast<T>(g * (a[i] - t[i]));
    });
  }
  return out;
}

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatDims {
  std::size_t n, c, h, w;
};

template <typename T>
FeatDims feat_dims(const Tensor<T>& t, const char* op) {
  const auto& s = t.shape();
  if (s.size() == 3) return {1, s[0], s[1], s[2]};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3]};
  throw ShapeError(std::string(op) + ": expected C×H×W or N×C×H×W feature, got " + to_string(s));
}

// Location-major unit vectors (rows) of one sample plus the original norms.
template <typename T>
Mat normalized_rows(const T* sample, std::size_t c, std::size_t locations, std::vector<double>& norms) {
  Mat f(locations, c);
  norms.assign(locations, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < locations; ++i) f(i, ch) = sample[ch * locations + i];
  }
  for (std::size_t i = 0; i < locations; ++i) {
    const double nrm = f.row(i).norm();
    norms[i] = nrm;
    if (nrm < kCosineEps) {
      f.row(i).setZero();
    } else {
      f.row(i) /= nrm;
    }
  }
  return f;
}

}  // namespace

template <typename T>
SimilarityMatrix similarity_matrix(const Tensor<T>& feat) {
  const auto d = feat_dims(feat, "similarity_matrix");
  if (d.n != 1) throw ShapeError("similarity_matrix: expects a single feature map, got " + to_string(feat.shape()));
  const std::size_t p = d.h * d.w;
  if (p == 0) throw ShapeError("similarity_matrix: empty spatial extent");
  std::vector<double> norms;
  const Mat f = normalized_rows(feat.data().data(), d.c, p, norms);
  SimilarityMatrix s;
  s.locations = p;
  s.values.resize(p * p);
  Eigen::Map<Mat> out(s.values.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  out.noalias() = f * f.transpose();
  return s;
}

double fs_loss(const SimilarityMatrix& student, const SimilarityMatrix& teacher) {
  if (student.locations != teacher.locations || student.values.size() != teacher.values.size()) {
    throw ShapeError("fs_loss: similarity matrices over " + std::to_string(student.locations) + " and " +
                     std::to_string(teacher.locations) + " locations");
  }
  double acc = 0;
  for (std::size_t i = 0; i < student.values.size(); ++i) {
    const double diff = student.values[i] - teacher.values[i];
    acc += diff * diff;
  }
  const auto p = static_cast<double>(student.locations);
  return acc / (p * p);
}

template <typename T>
Tensor<T> fs_loss_features(Tape<T>& tape, const Tensor<T>& student_feat, const Tensor<T>& teacher_feat,
                           std::size_t block_rows) {
  const auto ds = feat_dims(student_feat, "fs_loss_features");
  const auto dt = feat_dims(teacher_feat, "fs_loss_features");
  if (ds.n != dt.n || ds.h != dt.h || ds.w != dt.w) {
    throw ShapeError("fs_loss_features: student " + to_string(student_feat.shape()) + " and teacher " +
                     to_string(teacher_feat.shape()) + " differ in batch or spatial size");
  }
  if (block_rows == 0) block_rows = 1;
  const std::size_t p = ds.h * ds.w;
  const double inv_p2 = 1.0 / (static_cast<double>(p) * static_cast<double>(p));
  const bool want_grad = student_feat.requires_grad();

  double total = 0;
  // d loss / d student feature, per sample, filled only when needed.
  auto grad = std::make_shared<std::vector<double>>(want_grad ? student_feat.size() : 0);
  std::vector<double> snorm, tnorm;
  for (std::size_t n = 0; n < ds.n; ++n) {
    const Mat fs = normalized_rows(student_feat.data().data() + n * ds.c * p, ds.c, p, snorm);
    const Mat ft = normalized_rows(teacher_feat.data().data() + n * dt.c * p, dt.c, p, tnorm);
    Mat gunit = want_grad ? Mat::Zero(p, ds.c) : Mat();
    double sample_loss = 0;
    for (std::size_t r0 = 0; r0 < p; r0 += block_rows) {
      const auto rows = static_cast<Eigen::Index>(std::min(block_rows, p - r0));
      const auto start = static_cast<Eigen::Index>(r0);
      const Mat diff = fs.middleRows(start, rows) * fs.transpose() - ft.middleRows(start, rows) * ft.transpose();
      sample_loss += diff.squaredNorm();
      if (want_grad) gunit.middleRows(start, rows).noalias() = 4.0 * inv_p2 * diff * fs;
    }
    total += sample_loss * inv_p2;
    if (!want_grad) continue;
    // Back through f / |f|; guarded rows get no gradient.
    for (std::size_t i = 0; i < p; ++i) {
      if (snorm[i] < kCosineEps) continue;
      const auto idx = static_cast<Eigen::Index>(i);
      const double proj = fs.row(idx).dot(gunit.row(idx));
      for (std::size_t ch = 0; ch < ds.c; ++ch) {
        const auto cidx = static_cast<Eigen::Index>(ch);
        (*grad)[(n * ds.c + ch) * p + i] = (gunit(idx, cidx) - fs(idx, cidx) * proj) / snorm[i];
      }
    }
  }
  const double batch = static_cast<double>(ds.n);
  auto out = Tensor<T>::scalar(static_cast<T>(total / batch));
  if (want_grad) {
    tape.record(out, {student_feat}, [out, student_feat, grad, batch]() mutable {
      const double g = out.grad()[0] / batch;
      auto gs = student_feat.ensure_grad();
      for (std::size_t i = 0; i < gs.size(); ++i) gs[i] += static_cast<T>(g * (*grad)[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> kd_loss(Tape<T>& tape, const Tensor<T>& mse_term, const std::array<Tensor<T>, 3>& fa_terms,
                  const std::array<Tensor<T>, 3>& fs_terms, const DistillConfig& cfg) {
  cfg.validate();
  if (cfg.lambda == 0) return mse_term;
  Tensor<T> sum;
  auto accumulate = [&](const Tensor<T>& term, bool enabled, const char* kind, std::size_t r) {
    if (term.defined() != enabled) {
      throw std::invalid_argument(std::string("kd_loss: ") + kind + " term of layer " + std::to_string(r + 1) +
                                  (enabled ? " is missing" : " is present but disabled"));
    }
    if (!enabled) return;
    if (term.size() != 1) throw ShapeError(std::string("kd_loss: ") + kind + " term is not a scalar");
    sum = sum.defined() ? add(tape, sum, term) : term;
  };
  for (std::size_t r = 0; r < 3; ++r) {
    accumulate(fa_terms[r], cfg.fa[r], "FA", r);
    accumulate(fs_terms[r], cfg.fs[r], "FS", r);
  }
  if (!sum.defined()) return mse_term;
  return add(tape, mse_term, scale(tape, sum, static_cast<T>(cfg.lambda)));
}

#define LMKD_INSTANTIATE_DISTILL(T)                                                                 \
  template struct Adapter<T>;                                                                       \
  template Tensor<T> align_features(Tape<T>&, const Tensor<T>&, const Adapter<T>&);                 \
  template Tensor<T> fa_loss(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                         \
  template SimilarityMatrix similarity_matrix(const Tensor<T>&);                                    \
  template Tensor<T> fs_loss_features(Tape<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);   \
  template Tensor<T> kd_loss(Tape<T>&, const Tensor<T>&, const std::array<Tensor<T>, 3>&,           \
                             const std::array<Tensor<T>, 3>&, const DistillConfig&);

LMKD_INSTANTIATE_DISTILL(float)
LMKD_INSTANTIATE_DISTILL(double)

#undef LMKD_INSTANTIATE_DISTILL

}  // namespace lmkd
