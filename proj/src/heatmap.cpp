#include "lmkd/heatmap.hpp"

#include <cmath>
#include <string>

namespace lmkd {

template <typename T>
void encode_into(const LandmarkSet& landmarks, GaussianSpec spec, std::size_t side,
                 std::size_t downscale, std::span<T> out) {
  if (side == 0 || downscale == 0) throw std::invalid_argument("encode: side and downscale must be >= 1");
  if (!(spec.sigma > 0)) throw std::invalid_argument("encode: sigma must be positive");
  if (out.size() != landmarks.size() * side * side) {
    throw std::invalid_argument("encode: output buffer has " + std::to_string(out.size()) +
                                " values, expected " + std::to_string(landmarks.size() * side * side));
  }
  const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
  std::vector<double> gx(side), gy(side);
  for (std::size_t l = 0; l < landmarks.size(); ++l) {
    const double cx = landmarks.points[l].x / static_cast<double>(downscale);
    const double cy = landmarks.points[l].y / static_cast<double>(downscale);
    // exp(-(dx²+dy²)k) factors into a row and a column profile.
    for (std::size_t i = 0; i < side; ++i) {
      const double dx = static_cast<double>(i) - cx, dy = static_cast<double>(i) - cy;
      gx[i] = std::exp(-dx * dx * inv);
      gy[i] = std::exp(-dy * dy * inv);
    }
    T* plane = out.data() + l * side * side;
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) plane[r * side + c] = static_cast<T>(gy[r] * gx[c]);
    }
  }
}

HeatmapStack encode(const LandmarkSet& landmarks, GaussianSpec spec, std::size_t side,
                    std::size_t downscale) {
  HeatmapStack h;
  h.landmarks = landmarks.size();
  h.side = side;
  h.downscale = downscale;
  h.values.resize(landmarks.size() * side * side);
  encode_into<double>(landmarks, spec, side, downscale, h.values);
  return h;
}

template <typename T>
LandmarkSet decode_planes(std::span<const T> values, std::size_t landmarks, std::size_t side,
                          std::size_t downscale, DecodeOptions options) {
  if (landmarks == 0 || side == 0) throw std::invalid_argument("decode: empty heatmap stack");
  if (values.size() != landmarks * side * side) {
    throw std::invalid_argument("decode: expected " + std::to_string(landmarks * side * side) +
                                " values, got " + std::to_string(values.size()));
  }
  LandmarkSet out;
  out.points.reserve(landmarks);
  for (std::size_t l = 0; l < landmarks; ++l) {
    const T* plane = values.data() + l * side * side;
    std::size_t best = 0;
    for (std::size_t i = 1; i < side * side; ++i) {
      if (plane[i] > plane[best]) best = i;
    }
    const std::size_t row = best / side, col = best % side;
    double x = static_cast<double>(col), y = static_cast<double>(row);
    if (options.quarter_refine) {
      if (col > 0 && col + 1 < side) {
        const double d = plane[best + 1] - plane[best - 1];
        x += d > 0 ? 0.25 : (d < 0 ? -0.25 : 0.0);
      }
      if (row > 0 && row + 1 < side) {
        const double d = plane[best + side] - plane[best - side];
        y += d > 0 ? 0.25 : (d < 0 ? -0.25 : 0.0);
      }
    }
    const auto s = static_cast<double>(downscale);
    out.points.push_back({x * s, y * s});
  }
  return out;
}

LandmarkSet decode(const HeatmapStack& heatmaps, DecodeOptions options) {
  return decode_planes<double>(heatmaps.values, heatmaps.landmarks, heatmaps.side, heatmaps.downscale,
                               options);
}

template void encode_into<float>(const LandmarkSet&, GaussianSpec, std::size_t, std::size_t, std::span<float>);
template void encode_into<double>(const LandmarkSet&, GaussianSpec, std::size_t, std::size_t, std::span<double>);
template LandmarkSet decode_planes<float>(std::span<const float>, std::size_t, std::size_t, std::size_t,
                                          DecodeOptions);
template LandmarkSet decode_planes<double>(std::span<const double>, std::size_t, std::size_t, std::size_t,
                                           DecodeOptions);

}  // namespace lmkd
