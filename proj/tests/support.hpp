#pragma once

// Brute-force loop oracles and small helpers shared by the unit tests. The
// oracles are written from the textbook definitions and share no code with
// the library kernels.

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <random>
#include <span>
#include <vector>

#include "lmkd/tensor.hpp"

namespace testing {

using lmkd::Shape;
using TD = lmkd::Tensor<double>;

inline TD random_tensor(const Shape& shape, std::mt19937_64& rng, bool requires_grad = false, double lo = -1.0,
                        double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(lmkd::numel(shape));
  for (auto& x : v) x = u(rng);
  return TD::from(shape, std::move(v), requires_grad);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Dims {
  std::size_t n, c, h, w;
};

inline Dims dims4(const TD& t) {
  if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2)};
  return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
}

inline double at4(const TD& t, const Dims& d, std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
  return t.data()[((n * d.c + c) * d.h + y) * d.w + x];
}

// out[n,o,y,x] = b[o] + Σ_c Σ_ky Σ_kx in[n,c,y·s+ky−p, x·s+kx−p] · w[o,c,ky,kx]
inline std::vector<double> conv_ref(const TD& in, const TD& w, const TD* bias, std::size_t s, std::size_t p,
                                    std::size_t& oh, std::size_t& ow) {
  const Dims d = dims4(in);
  const std::size_t co = w.dim(0), k = w.dim(2);
  oh = (d.h + 2 * p - k) / s + 1;
  ow = (d.w + 2 * p - k) / s + 1;
  std::vector<double> out(d.n * co * oh * ow, 0.0);
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = bias ? bias->data()[o] : 0.0;
          for (std::size_t c = 0; c < d.c; ++c)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(y * s + ky) - static_cast<long>(p);
                const long ix = static_cast<long>(x * s + kx) - static_cast<long>(p);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(d.h) || ix >= static_cast<long>(d.w)) continue;
                acc += at4(in, d, n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                       w.data()[((o * d.c + c) * k + ky) * k + kx];
              }
          out[((n * co + o) * oh + y) * ow + x] = acc;
        }
  return out;
}

// Grouped direct convolution with one group per channel.
inline std::vector<double> depthwise_ref(const TD& in, const TD& w, std::size_t s, std::size_t p, std::size_t& oh,
                                         std::size_t& ow) {
  const Dims d = dims4(in);
  const std::size_t k = w.dim(2);
  oh = (d.h + 2 * p - k) / s + 1;
  ow = (d.w + 2 * p - k) / s + 1;
  std::vector<double> out(d.n * d.c * oh * ow, 0.0);
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = 0;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = static_cast<long>(y * s + ky) - static_cast<long>(p);
              const long ix = static_cast<long>(x * s + kx) - static_cast<long>(p);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(d.h) || ix >= static_cast<long>(d.w)) continue;
              acc += at4(in, d, n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                     w.data()[(c * k + ky) * k + kx];
            }
          out[((n * d.c + c) * oh + y) * ow + x] = acc;
        }
  return out;
}

// Scatter-accumulate: every input pixel adds in·w[ci,co] into the k×k window
// at (y·s − p, x·s − p) of the output.
inline std::vector<double> deconv_ref(const TD& in, const TD& w, std::size_t s, std::size_t p, std::size_t& oh,
                                      std::size_t& ow) {
  const Dims d = dims4(in);
  const std::size_t co = w.dim(1), k = w.dim(2);
  oh = (d.h - 1) * s + k - 2 * p;
  ow = (d.w - 1) * s + k - 2 * p;
  std::vector<double> out(d.n * co * oh * ow, 0.0);
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t y = 0; y < d.h; ++y)
        for (std::size_t x = 0; x < d.w; ++x)
          for (std::size_t o = 0; o < co; ++o)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long oy = static_cast<long>(y * s + ky) - static_cast<long>(p);
                const long ox = static_cast<long>(x * s + kx) - static_cast<long>(p);
                if (oy < 0 || ox < 0 || oy >= static_cast<long>(oh) || ox >= static_cast<long>(ow)) continue;
                out[((n * co + o) * oh + static_cast<std::size_t>(oy)) * ow + static_cast<std::size_t>(ox)] +=
                    at4(in, d, n, c, y, x) * w.data()[((c * co + o) * k + ky) * k + kx];
              }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
