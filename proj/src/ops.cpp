#include "lmkd/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmkd {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

struct ImageDims {
  std::size_t n, c, h, w;
  bool batched;
  std::size_t plane() const { return h * w; }
  std::size_t sample() const { return c * h * w; }
};

template <typename T>
ImageDims image_dims(const Tensor<T>& t, const char* op) {
  const auto& s = t.shape();
  if (s.size() == 3) return {1, s[0], s[1], s[2], false};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
  throw ShapeError(std::string(op) + ": expected C×H×W or N×C×H×W input, got " + to_string(s));
}

Shape image_shape(const ImageDims& d, std::size_t c, std::size_t h, std::size_t w) {
  if (d.batched) return {d.n, c, h, w};
  return {c, h, w};
}

// Unfolds k×k windows into a (c*k*k) × (oh*ow) matrix. Padded cells are zero.
template <typename T>
void im2col(const T* src, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
            std::size_t stride, std::size_t pad, std::size_t oh, std::size_t ow, T* cols) {
  const auto sh = static_cast<std::ptrdiff_t>(h), sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((ch * k + ky) * k + kx) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          T* out = row + oy * ow;
          if (iy < 0 || iy >= sh) {
            std::fill(out, out + ow, T{0});
            continue;
          }
          const T* in = src + (ch * h + static_cast<std::size_t>(iy)) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            out[ox] = (ix < 0 || ix >= sw) ? T{0} : in[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back onto the image.
template <typename T>
void col2im(const T* cols, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
            std::size_t stride, std::size_t pad, std::size_t oh, std::size_t ow, T* dst) {
  const auto sh = static_cast<std::ptrdiff_t>(h), sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((ch * k + ky) * k + kx) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= sh) continue;
          T* out = dst + (ch * h + static_cast<std::size_t>(iy)) * w;
          const T* in = row + oy * ow;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < sw) out[ix] += in[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(std::size_t k, std::size_t stride, std::size_t pad) {
  return k == 1 && stride == 1 && pad == 0;
}

void check_window(const char* op, std::size_t h, std::size_t w, std::size_t k, std::size_t stride,
                  std::size_t pad) {
  if (stride == 0) throw ShapeError(std::string(op) + ": stride must be positive");
  if (k == 0 || k > h + 2 * pad || k > w + 2 * pad) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(k) + " does not fit " +
                     std::to_string(h) + "x" + std::to_string(w) + " with padding " +
                     std::to_string(pad));
  }
}

}  // namespace

std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

std::size_t deconv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  const auto full = static_cast<std::ptrdiff_t>((in - 1) * stride + kernel);
  const auto out = full - 2 * static_cast<std::ptrdiff_t>(padding);
  return out > 0 ? static_cast<std::size_t>(out) : 0;
}

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t stride, std::size_t padding) {
  const auto d = image_dims(input, "conv2d");
  if (weight.rank() != 4 || weight.dim(1) != d.c || weight.dim(2) != weight.dim(3)) {
    throw ShapeError("conv2d: weight " + to_string(weight.shape()) + " incompatible with input " +
                     to_string(input.shape()));
  }
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  if (bias.defined() && bias.size() != cout) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) + " != " + std::to_string(cout));
  }
  check_window("conv2d", d.h, d.w, k, stride, padding);
  const std::size_t oh = conv_out_size(d.h, k, stride, padding), ow = conv_out_size(d.w, k, stride, padding);
  const std::size_t opix = oh * ow, kdim = d.c * k * k;
  const bool pointwise = is_pointwise(k, stride, padding);

  auto out = Tensor<T>::zeros(image_shape(d, cout, oh, ow));
  ConstMatMap<T> wmat(weight.data().data(), cout, kdim);
  std::vector<T> cols(pointwise ? 0 : kdim * opix);
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* x = input.data().data() + n * d.sample();
    if (!pointwise) im2col(x, d.c, d.h, d.w, k, stride, padding, oh, ow, cols.data());
    ConstMatMap<T> cmat(pointwise ? x : cols.data(), kdim, opix);
    MatMap<T> omat(out.data().data() + n * cout * opix, cout, opix);
    omat.noalias() = wmat * cmat;
    if (bias.defined()) {
      for (std::size_t co = 0; co < cout; ++co) omat.row(co).array() += bias.data()[co];
    }
  }

  if (any_requires_grad<T>({&input, &weight, &bias})) {
    tape.record(out, {input, weight, bias}, [=]() mutable {
      const auto gout = out.grad();
      std::vector<T> buf(pointwise ? 0 : kdim * opix);
      for (std::size_t n = 0; n < d.n; ++n) {
        ConstMatMap<T> g(gout.data() + n * cout * opix, cout, opix);
        const T* x = input.data().data() + n * d.sample();
        if (weight.requires_grad()) {
          if (!pointwise) im2col(x, d.c, d.h, d.w, k, stride, padding, oh, ow, buf.data());
          ConstMatMap<T> cmat(pointwise ? x : buf.data(), kdim, opix);
          MatMap<T> gw(weight.ensure_grad().data(), cout, kdim);
          gw.noalias() += g * cmat.transpose();
        }
        if (bias.defined() && bias.requires_grad()) {
          auto gb = bias.ensure_grad();
          for (std::size_t co = 0; co < cout; ++co) gb[co] += g.row(co).sum();
        }
        if (input.requires_grad()) {
          T* gx = input.ensure_grad().data() + n * d.sample();
          if (pointwise) {
            MatMap<T> gxm(gx, kdim, opix);
            gxm.noalias() += wmat.transpose() * g;
          } else {
            MatMap<T> gcols(buf.data(), kdim, opix);
            gcols.noalias() = wmat.transpose() * g;
            col2im(buf.data(), d.c, d.h, d.w, k, stride, padding, oh, ow, gx);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> depthwise_conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                           std::size_t stride, std::size_t padding) {
  const auto d = image_dims(input, "depthwise_conv2d");
  if (weight.rank() != 4 || weight.dim(0) != d.c || weight.dim(1) != 1 || weight.dim(2) != weight.dim(3)) {
    throw ShapeError("depthwise_conv2d: weight " + to_string(weight.shape()) +
                     " incompatible with input " + to_string(input.shape()));
  }
  const std::size_t k = weight.dim(2);
  check_window("depthwise_conv2d", d.h, d.w, k, stride, padding);
  const std::size_t oh = conv_out_size(d.h, k, stride, padding), ow = conv_out_size(d.w, k, stride, padding);
  const auto ih = static_cast<std::ptrdiff_t>(d.h), iw = static_cast<std::ptrdiff_t>(d.w);
  const auto pad = static_cast<std::ptrdiff_t>(padding);

  // Visits every (output cell, tap, input cell) triple inside the image.
  auto sweep = [=](auto&& fn) {
    for (std::size_t n = 0; n < d.n; ++n) {
      for (std::size_t c = 0; c < d.c; ++c) {
        const std::size_t in_base = (n * d.c + c) * d.plane();
        const std::size_t out_base = (n * d.c + c) * oh * ow;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::size_t widx = (c * k + ky) * k + kx;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
              if (iy < 0 || iy >= ih) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
                if (ix < 0 || ix >= iw) continue;
                fn(out_base + oy * ow + ox, widx, in_base + static_cast<std::size_t>(iy) * d.w +
                                                      static_cast<std::size_t>(ix));
              }
            }
          }
        }
      }
    }
  };

  auto out = Tensor<T>::zeros(image_shape(d, d.c, oh, ow));
  {
    auto o = out.data();
    const auto x = input.data();
    const auto w = weight.data();
    sweep([&](std::size_t oi, std::size_t wi, std::size_t xi) { o[oi] += w[wi] * x[xi]; });
  }
  if (any_requires_grad<T>({&input, &weight})) {
    tape.record(out, {input, weight}, [=]() mutable {
      const auto g = out.grad();
      const auto x = input.data();
      const auto w = weight.data();
      if (input.requires_grad()) {
        auto gx = input.ensure_grad();
        sweep([&](std::size_t oi, std::size_t wi, std::size_t xi) { gx[xi] += w[wi] * g[oi]; });
      }
      if (weight.requires_grad()) {
        auto gw = weight.ensure_grad();
        sweep([&](std::size_t oi, std::size_t wi, std::size_t xi) { gw[wi] += x[xi] * g[oi]; });
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> transposed_conv2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& weight,
                            std::size_t stride, std::size_t padding) {
  const auto d = image_dims(input, "transposed_conv2d");
  if (weight.rank() != 4 || weight.dim(0) != d.c || weight.dim(2) != weight.dim(3)) {
    throw ShapeError("transposed_conv2d: weight " + to_string(weight.shape()) +
                     " incompatible with input " + to_string(input.shape()));
  }
  if (stride == 0) throw ShapeError("transposed_conv2d: stride must be positive");
  const std::size_t cout = weight.dim(1), k = weight.dim(2);
  const std::size_t oh = deconv_out_size(d.h, k, stride, padding);
  const std::size_t ow = deconv_out_size(d.w, k, stride, padding);
  if (oh == 0 || ow == 0) {
    throw ShapeError("transposed_conv2d: kernel " + std::to_string(k) + ", stride " +
                     std::to_string(stride) + ", padding " + std::to_string(padding) +
                     " gives a non-positive output for input " + to_string(input.shape()));
  }
  const std::size_t ipix = d.plane(), kdim = cout * k * k, osample = cout * oh * ow;

  auto out = Tensor<T>::zeros(image_shape(d, cout, oh, ow));
  ConstMatMap<T> wmat(weight.data().data(), d.c, kdim);
  std::vector<T> cols(kdim * ipix);
  for (std::size_t n = 0; n < d.n; ++n) {
    ConstMatMap<T> x(input.data().data() + n * d.sample(), d.c, ipix);
    MatMap<T> cm(cols.data(), kdim, ipix);
    cm.noalias() = wmat.transpose() * x;
    col2im(cols.data(), cout, oh, ow, k, stride, padding, d.h, d.w, out.data().data() + n * osample);
  }

  if (any_requires_grad<T>({&input, &weight})) {
    tape.record(out, {input, weight}, [=]() mutable {
      const auto gout = out.grad();
      std::vector<T> buf(kdim * ipix);
      for (std::size_t n = 0; n < d.n; ++n) {
        im2col(gout.data() + n * osample, cout, oh, ow, k, stride, padding, d.h, d.w, buf.data());
        ConstMatMap<T> gcols(buf.data(), kdim, ipix);
        if (input.requires_grad()) {
          MatMap<T> gx(input.ensure_grad().data() + n * d.sample(), d.c, ipix);
          gx.noalias() += wmat * gcols;
        }
        if (weight.requires_grad()) {
          ConstMatMap<T> x(input.data().data() + n * d.sample(), d.c, ipix);
          MatMap<T> gw(weight.ensure_grad().data(), d.c, kdim);
          gw.noalias() += x * gcols.transpose();
        }
      }
    });
  }
  return out;
}

template <typename T>
RunningStats<T> RunningStats<T>::init(std::size_t channels) {
  return {Tensor<T>::zeros({channels}), Tensor<T>::full({channels}, T{1})};
}

template <typename T>
Tensor<T> batchnorm2d(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& scale,
                      const Tensor<T>& shift, RunningStats<T>& stats, Mode mode) {
  const auto d = image_dims(input, "batchnorm2d");
  if (scale.size() != d.c || shift.size() != d.c || stats.mean.size() != d.c || stats.var.size() != d.c) {
    throw ShapeError("batchnorm2d: per-channel parameters must have length " + std::to_string(d.c));
  }
  const std::size_t plane = d.plane(), count = d.n * plane;
  std::vector<double> mean(d.c), invstd(d.c);
  const auto x = input.data();

  if (mode == Mode::Train) {
    auto rm = stats.mean.data();
    auto rv = stats.var.data();
    for (std::size_t c = 0; c < d.c; ++c) {
      double s = 0;
      for (std::size_t n = 0; n < d.n; ++n) {
        const T* p = x.data() + (n * d.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double m = s / static_cast<double>(count);
      double ss = 0;
      for (std::size_t n = 0; n < d.n; ++n) {
        const T* p = x.data() + (n * d.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - m) * (p[i] - m);
      }
      const double var = ss / static_cast<double>(count);
      mean[c] = m;
      invstd[c] = 1.0 / std::sqrt(var + stats.eps);
      const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
      rm[c] = static_cast<T>((1 - stats.momentum) * rm[c] + stats.momentum * m);
      rv[c] = static_cast<T>((1 - stats.momentum) * rv[c] + stats.momentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < d.c; ++c) {
      mean[c] = stats.mean.data()[c];
      invstd[c] = 1.0 / std::sqrt(static_cast<double>(stats.var.data()[c]) + stats.eps);
    }
  }

  auto out = Tensor<T>::zeros(input.shape());
  auto xhat = std::make_shared<std::vector<T>>(input.size());
  {
    auto o = out.data();
    for (std::size_t n = 0; n < d.n; ++n) {
      for (std::size_t c = 0; c < d.c; ++c) {
        const std::size_t base = (n * d.c + c) * plane;
        const double g = scale.data()[c], b = shift.data()[c];
        for (std::size_t i = 0; i < plane; ++i) {
          const double h = (x[base + i] - mean[c]) * invstd[c];
          (*xhat)[base + i] = static_cast<T>(h);
          o[base + i] = static_cast<T>(g * h + b);
        }
      }
    }
  }

  if (any_requires_grad<T>({&input, &scale, &shift})) {
    tape.record(out, {input, scale, shift}, [=]() mutable {
      const auto g = out.grad();
      for (std::size_t c = 0; c < d.c; ++c) {
        double sum_g = 0, sum_gh = 0;
        for (std::size_t n = 0; n < d.n; ++n) {
          const std::size_t base = (n * d.c + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            sum_g += g[base + i];
            sum_gh += g[base + i] * (*xhat)[base + i];
          }
        }
        if (scale.requires_grad()) scale.ensure_grad()[c] += static_cast<T>(sum_gh);
        if (shift.requires_grad()) shift.ensure_grad()[c] += static_cast<T>(sum_g);
        if (!input.requires_grad()) continue;
        auto gx = input.ensure_grad();
        const double gam = scale.data()[c];
        const double m = static_cast<double>(count);
        for (std::size_t n = 0; n < d.n; ++n) {
          const std::size_t base = (n * d.c + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            double v;
            if (mode == Mode::Train) {
              v = gam * invstd[c] * (g[base + i] - sum_g / m - (*xhat)[base + i] * sum_gh / m);
            } else {
              v = gam * invstd[c] * g[base + i];
            }
            gx[base + i] += static_cast<T>(v);
          }
        }
      }
    });
  }
  return out;
}

namespace {

// Element-wise clamp to [0, upper]; derivative 1 strictly inside, 0 at and
// beyond the kinks.
template <typename T>
Tensor<T> clamp_activation(Tape<T>& tape, const Tensor<T>& input, T upper) {
  auto out = Tensor<T>::zeros(input.shape());
  const auto x = input.data();
  auto o = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = std::min(std::max(x[i], T{0}), upper);
  if (input.requires_grad()) {
    tape.record(out, {input}, [=]() mutable {
      const auto g = out.grad();
      const auto xv = input.data();
      auto gx = input.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xv[i] > T{0} && xv[i] < upper) gx[i] += g[i];
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& input) {
  return clamp_activation(tape, input, std::numeric_limits<T>::infinity());
}

template <typename T>
Tensor<T> relu6(Tape<T>& tape, const Tensor<T>& input) {
  return clamp_activation(tape, input, T{6});
}

template <typename T>
Tensor<T> max_pool2d(Tape<T>& tape, const Tensor<T>& input, std::size_t kernel,
                     std::size_t stride, std::size_t padding) {
  const auto d = image_dims(input, "max_pool2d");
  check_window("max_pool2d", d.h, d.w, kernel, stride, padding);
  const std::size_t oh = conv_out_size(d.h, kernel, stride, padding);
  const std::size_t ow = conv_out_size(d.w, kernel, stride, padding);
  auto out = Tensor<T>::zeros(image_shape(d, d.c, oh, ow));
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const auto x = input.data();
  auto o = out.data();
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = nc * d.plane();
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
            const std::size_t idx = nc * d.plane() + static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix);
            if (x[idx] > best) {
              best = x[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t oi = (nc * oh + oy) * ow + ox;
        o[oi] = best;
        (*argmax)[oi] = best_idx;
      }
    }
  }
  if (input.requires_grad()) {
    tape.record(out, {input}, [=]() mutable {
      const auto g = out.grad();
      auto gx = input.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[(*argmax)[i]] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) + " differ");
  }
  auto out = Tensor<T>::zeros(a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a.data()[i] + b.data()[i];
  if (any_requires_grad<T>({&a, &b})) {
    tape.record(out, {a, b}, [=]() mutable {
      const auto g = out.grad();
      for (auto* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto gt = t->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& input, T factor) {
  auto out = Tensor<T>::zeros(input.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = input.data()[i] * factor;
  if (input.requires_grad()) {
    tape.record(out, {input}, [=]() mutable {
      const auto g = out.grad();
      auto gx = input.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mse(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("mse: prediction " + to_string(pred.shape()) + " vs target " +
                     to_string(target.shape()));
  }
  const std::size_t n = pred.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = static_cast<double>(pred.data()[i]) - static_cast<double>(target.data()[i]);
    acc += diff * diff;
  }
  auto out = Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));
  if (any_requires_grad<T>({&pred, &target})) {
    tape.record(out, {pred, target}, [=]() mutable {
      const double g = out.grad()[0] * 2.0 / static_cast<double>(n);
      const auto p = pred.data();
      const auto t = target.data();
      if (pred.requires_grad()) {
        auto gp = pred.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) gp[i] += static_cast<T>(g * (p[i] - t[i]));
      }
      if (target.requires_grad()) {
        auto gt = target.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) gt[i] -= static_cast<T>(g * (p[i] - t[i]));
      }
    });
  }
  return out;
}

#define LMKD_INSTANTIATE_OPS(T)                                                                        \
  template Tensor<T> conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                            std::size_t, std::size_t);                                                 \
  template Tensor<T> depthwise_conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,       \
                                      std::size_t);                                                    \
  template Tensor<T> transposed_conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,      \
                                       std::size_t);                                                   \
  template struct RunningStats<T>;                                                                     \
  template Tensor<T> batchnorm2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                 RunningStats<T>&, Mode);                                              \
  template Tensor<T> relu(Tape<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> relu6(Tape<T>&, const Tensor<T>&);                                                \
  template Tensor<T> max_pool2d(Tape<T>&, const Tensor<T>&, std::size_t, std::size_t, std::size_t);    \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                             \
  template Tensor<T> mse(Tape<T>&, const Tensor<T>&, const Tensor<T>&);

LMKD_INSTANTIATE_OPS(float)
LMKD_INSTANTIATE_OPS(double)

#undef LMKD_INSTANTIATE_OPS

}  // namespace lmkd
