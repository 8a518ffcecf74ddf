#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lmkd/heatmap.hpp"

namespace lmkd {

/// Planar 3-channel image with values in [0,1].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;  // 3 × height × width

  static Image blank(std::size_t width, std::size_t height, float value = 0.0f);
  float& at(std::size_t c, std::size_t y, std::size_t x) { return pixels[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return pixels[(c * height + y) * width + x]; }
};

/// x' = a·x + b·y + tx, y' = c·x + d·y + ty.
struct Affine {
  double a = 1, b = 0, tx = 0;
  double c = 0, d = 1, ty = 0;

  Point apply(Point p) const { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }
  Affine inverse() const;
  /// The map that applies *this first and then `next`.
  Affine then(const Affine& next) const;

  static Affine translate(double dx, double dy);
  /// Uniform scale by s and counter-clockwise (in image coordinates, y
  /// down) rotation by `radians`, both about `center`.
  static Affine scale_rotate_about(Point center, double s, double radians);
  /// Mirror x about the vertical line through center.x.
  static Affine hflip_about(Point center);
};

/// Resamples `src` into a width×height image so that every output pixel p
/// takes the bilinear value of src at src_to_dst⁻¹(p). Samples outside the
/// source read as 0.
Image warp(const Image& src, const Affine& src_to_dst, std::size_t width, std::size_t height);

/// Bilinear sample of one channel; neighbours outside the image count as 0.
float sample_bilinear(const Image& img, std::size_t channel, double x, double y);

/// 8-bit PNG; grayscale and RGBA inputs are converted to RGB.
Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);

}  // namespace lmkd
