#include "lmkd/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace lmkd {

Image Image::blank(std::size_t width, std::size_t height, float value) {
  return {width, height, std::vector<float>(3 * width * height, value)};
}

Affine Affine::inverse() const {
  const double det = a * d - b * c;
  if (std::abs(det) < 1e-300) throw std::invalid_argument("affine map is singular");
  Affine inv;
  inv.a = d / det;
  inv.b = -b / det;
  inv.c = -c / det;
  inv.d = a / det;
  inv.tx = -(inv.a * tx + inv.b * ty);
  inv.ty = -(inv.c * tx + inv.d * ty);
  return inv;
}

Affine Affine::then(const Affine& n) const {
  Affine r;
  r.a = n.a * a + n.b * c;
  r.b = n.a * b + n.b * d;
  r.c = n.c * a + n.d * c;
  r.d = n.c * b + n.d * d;
  r.tx = n.a * tx + n.b * ty + n.tx;
  r.ty = n.c * tx + n.d * ty + n.ty;
  return r;
}

Affine Affine::translate(double dx, double dy) {
  Affine t;
  t.tx = dx;
  t.ty = dy;
  return t;
}

Affine Affine::scale_rotate_about(Point center, double s, double radians) {
  const double cs = std::cos(radians) * s, sn = std::sin(radians) * s;
  Affine m;
  m.a = cs;
  m.b = -sn;
  m.c = sn;
  m.d = cs;
  return translate(-center.x, -center.y).then(m).then(translate(center.x, center.y));
}

Affine Affine::hflip_about(Point center) {
  Affine m;
  m.a = -1;
  m.tx = 2 * center.x;
  return m;
}

float sample_bilinear(const Image& img, std::size_t channel, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto x0 = static_cast<long long>(fx), y0 = static_cast<long long>(fy);
  const double wx = x - fx, wy = y - fy;
  auto px = [&](long long xx, long long yy) -> double {
    if (xx < 0 || yy < 0 || xx >= static_cast<long long>(img.width) || yy >= static_cast<long long>(img.height)) {
      return 0.0;
    }
    return img.at(channel, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
  };
  const double top = px(x0, y0) * (1 - wx) + px(x0 + 1, y0) * wx;
  const double bottom = px(x0, y0 + 1) * (1 - wx) + px(x0 + 1, y0 + 1) * wx;
  return static_cast<float>(top * (1 - wy) + bottom * wy);
}

Image warp(const Image& src, const Affine& src_to_dst, std::size_t width, std::size_t height) {
  const Affine inv = src_to_dst.inverse();
  Image out = Image::blank(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const Point s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = sample_bilinear(src, c, s.x, s.y);
    }
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw std::runtime_error("cannot read PNG '" + path + "': " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw std::runtime_error("cannot decode PNG '" + path + "': " + msg);
  }
  Image img = Image::blank(png.width, png.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = buf[(y * img.width + x) * 3 + c] / 255.0f;
    }
  }
  return img;
}

void write_png(const Image& img, const std::string& path) {
  std::vector<unsigned char> buf(img.width * img.height * 3);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
        buf[(y * img.width + x) * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (!png_image_write_to_stdio(&png, f.get(), 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error("cannot encode PNG '" + path + "': " + png.message);
  }
}

}  // namespace lmkd
