#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

// Coordinates everywhere are (x = column, y = row) with the origin at the
// top-left and pixel centers on integers.

namespace lmkd {

struct Point {
  double x = 0;
  double y = 0;
};

struct LandmarkSet {
  std::vector<Point> points;
  /// Empty, or one flag per point.
  std::vector<bool> visible;

  std::size_t size() const { return points.size(); }
};

struct GaussianSpec {
  double sigma = 2.0;
};

/// L score planes of side×side, stored plane-major then row-major.
struct HeatmapStack {
  std::size_t landmarks = 0;
  std::size_t side = 64;
  std::size_t downscale = 4;
  std::vector<double> values;

  double at(std::size_t l, std::size_t row, std::size_t col) const {
    return values[(l * side + row) * side + col];
  }
  std::span<const double> plane(std::size_t l) const {
    return std::span<const double>(values).subspan(l * side * side, side * side);
  }
};

/// One Gaussian per landmark centred at point / downscale (not snapped to
/// the grid), evaluated on the whole plane.
HeatmapStack encode(const LandmarkSet& landmarks, GaussianSpec spec, std::size_t side = 64,
                    std::size_t downscale = 4);

/// Writes the encoded planes into `out` (length L·side·side) without
/// allocating a HeatmapStack.
template <typename T>
void encode_into(const LandmarkSet& landmarks, GaussianSpec spec, std::size_t side,
                 std::size_t downscale, std::span<T> out);

struct DecodeOptions {
  /// Shift a quarter pixel toward the larger neighbour along each axis.
  bool quarter_refine = false;
};

/// Per plane arg-max (first in row-major order on ties), scaled back by
/// downscale.
LandmarkSet decode(const HeatmapStack& heatmaps, DecodeOptions options = {});

/// Decodes raw network output laid out as L planes of side×side.
template <typename T>
LandmarkSet decode_planes(std::span<const T> values, std::size_t landmarks, std::size_t side,
                          std::size_t downscale, DecodeOptions options = {});

}  // namespace lmkd
