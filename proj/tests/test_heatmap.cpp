#include <doctest.h>

#include <cmath>
#include <random>

#include "lmkd/heatmap.hpp"

using namespace lmkd;

TEST_CASE("encode evaluates the Gaussian at continuous centres") {
  LandmarkSet lm{{{32, 32}}, {}};
  const auto h = encode(lm, GaussianSpec{2.0}, 64, 4);
  CHECK(h.at(0, 8, 8) == 1.0);
  CHECK(h.at(0, 8, 10) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(h.at(0, 8, 10) == doctest::Approx(0.60653).epsilon(1e-5));

  const auto off = encode(LandmarkSet{{{100, 60}}, {}}, GaussianSpec{2.0}, 64, 4);
  CHECK(off.at(0, 15, 25) == 1.0);
  CHECK(off.at(0, 15, 26) == off.at(0, 15, 24));

  // Sub-pixel centre: no grid value reaches 1, values stay in (0, 1).
  const auto sub = encode(LandmarkSet{{{101, 61.5}}, {}}, GaussianSpec{2.0}, 64, 4);
  for (double v : sub.values) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  const auto outside = encode(LandmarkSet{{{-400, 900}}, {}}, GaussianSpec{2.0}, 64, 4);
  for (double v : outside.values) CHECK(v < 1e-100);
}

TEST_CASE("decode uses arg-max with row-major tie breaking") {
  HeatmapStack h;
  h.landmarks = 2;
  h.values.assign(2 * 64 * 64, 0.0);
  h.values[30 * 64 + 12] = 1.0;
  const auto p = decode(h);
  CHECK(p.points[0].x == 48);
  CHECK(p.points[0].y == 120);
  // Second plane is all equal: the first cell wins.
  CHECK(p.points[1].x == 0);
  CHECK(p.points[1].y == 0);
}

TEST_CASE("round trip is exact on the grid") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cell(0, 63);
  for (int i = 0; i < 200; ++i) {
    LandmarkSet lm{{{4.0 * cell(rng), 4.0 * cell(rng)}}, {}};
    const auto back = decode(encode(lm, GaussianSpec{2.0}));
    CHECK(back.points[0].x == lm.points[0].x);
    CHECK(back.points[0].y == lm.points[0].y);
  }
}

TEST_CASE("round trip error on sub-pixel points is bounded by 4 pixels") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 252.0);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    LandmarkSet lm{{{u(rng), u(rng)}}, {}};
    const auto back = decode(encode(lm, GaussianSpec{2.0}));
    worst = std::max({worst, std::abs(back.points[0].x - lm.points[0].x), std::abs(back.points[0].y - lm.points[0].y)});
  }
  CHECK(worst <= 4.0);
  CHECK(worst <= 2.0 + 1e-9);  // nearest-cell rounding is the actual floor
}

TEST_CASE("encode is equivariant to grid translations") {
  LandmarkSet a{{{70.3, 90.8}}, {}}, b{{{70.3 + 4 * 5, 90.8 - 4 * 3}}, {}};
  const auto pa = decode(encode(a, GaussianSpec{2.0})), pb = decode(encode(b, GaussianSpec{2.0}));
  CHECK(pb.points[0].x - pa.points[0].x == 20);
  CHECK(pb.points[0].y - pa.points[0].y == -12);
}

TEST_CASE("quarter refinement moves toward the larger neighbour") {
  LandmarkSet lm{{{41.0, 40.0}}, {}};  // heatmap x = 10.25
  const auto h = encode(lm, GaussianSpec{2.0});
  const auto plain = decode(h), refined = decode(h, DecodeOptions{true});
  CHECK(plain.points[0].x == 40);
  CHECK(refined.points[0].x == 41);
  CHECK(refined.points[0].y == 40);
}
