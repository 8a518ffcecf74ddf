#include "lmkd/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lmkd {

namespace fs = std::filesystem;
using json = nlohmann::json;

Affine crop_transform(const BBox& box, std::size_t side) {
  if (!(box.width > 0) || !(box.height > 0)) {
    throw std::invalid_argument("crop: bounding box has zero area");
  }
  const double extent = std::max(box.width, box.height);
  const double x0 = box.x + box.width / 2 - extent / 2;
  const double y0 = box.y + box.height / 2 - extent / 2;
  const double s = static_cast<double>(side) / extent;
  Affine m;
  m.a = s;
  m.d = s;
  m.tx = -x0 * s;
  m.ty = -y0 * s;
  return m;
}

namespace {

LandmarkSet map_points(const LandmarkSet& in, const Affine& m) {
  LandmarkSet out = in;
  for (auto& p : out.points) p = m.apply(p);
  return out;
}

}  // namespace

Sample crop_and_scale(const Sample& sample, std::size_t side) {
  const Affine m = crop_transform(sample.bbox, side);
  Sample out;
  out.image = warp(sample.image, m, side, side);
  out.landmarks = map_points(sample.landmarks, m);
  out.bbox = {0, 0, static_cast<double>(side), static_cast<double>(side)};
  return out;
}

void AugmentConfig::validate(std::size_t landmarks) const {
  if (!(scale_min > 0) || !(scale_max >= scale_min)) {
    throw std::invalid_argument("augment: scale range must be positive and ordered");
  }
  if (hflip_prob < 0 || hflip_prob > 1) throw std::invalid_argument("augment: flip probability outside [0,1]");
  if (flip_map.empty()) return;
  if (flip_map.size() != landmarks) {
    throw std::invalid_argument("augment: flip map has " + std::to_string(flip_map.size()) + " entries for " +
                                std::to_string(landmarks) + " landmarks");
  }
  for (std::size_t i = 0; i < flip_map.size(); ++i) {
    if (flip_map[i] >= landmarks || flip_map[flip_map[i]] != i) {
      throw std::invalid_argument("augment: flip map is not an involution at index " + std::to_string(i));
    }
  }
}

AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentDraw d;
  d.rotation_degrees = (2 * unit(rng) - 1) * cfg.rotation_degrees;
  d.scale = cfg.scale_min + unit(rng) * (cfg.scale_max - cfg.scale_min);
  d.flip = !cfg.flip_map.empty() && unit(rng) < cfg.hflip_prob;
  return d;
}

Affine augment_transform(const AugmentDraw& draw, std::size_t side) {
  const double c = (static_cast<double>(side) - 1) / 2;
  Affine m = Affine::scale_rotate_about({c, c}, draw.scale, draw.rotation_degrees * std::numbers::pi / 180.0);
  if (draw.flip) m = m.then(Affine::hflip_about({c, c}));
  return m;
}

Sample apply_augment(const Sample& sample, const AugmentDraw& draw, const std::vector<std::size_t>& flip_map) {
  if (sample.image.width != sample.image.height) throw std::invalid_argument("augment: sample must be square");
  const std::size_t side = sample.image.width;
  const Affine m = augment_transform(draw, side);
  Sample out;
  out.image = warp(sample.image, m, side, side);
  out.bbox = sample.bbox;
  const LandmarkSet moved = map_points(sample.landmarks, m);
  if (!draw.flip) {
    out.landmarks = moved;
    return out;
  }
  if (flip_map.size() != moved.size()) throw std::invalid_argument("augment: flip requires a full flip map");
  out.landmarks.points.resize(moved.size());
  if (!moved.visible.empty()) out.landmarks.visible.resize(moved.size());
  for (std::size_t i = 0; i < moved.size(); ++i) {
    out.landmarks.points[i] = moved.points[flip_map[i]];
    if (!moved.visible.empty()) out.landmarks.visible[i] = moved.visible[flip_map[i]];
  }
  return out;
}

Sample augment(const Sample& sample, const AugmentConfig& cfg, std::mt19937_64& rng) {
  cfg.validate(sample.landmarks.size());
  return apply_augment(sample, draw_augment(cfg, rng), cfg.flip_map);
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the three words.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return std::mt19937_64(mix(mix(mix(seed) ^ a) ^ b));
}

void DatasetManifest::validate() const {
  if (meta.landmarks == 0) throw std::invalid_argument("manifest: metadata landmark count is zero");
  if (meta.norm_pair.first >= meta.landmarks || meta.norm_pair.second >= meta.landmarks) {
    throw std::invalid_argument("manifest: norm_pair out of range");
  }
  AugmentConfig probe;
  probe.flip_map = meta.flip_map;
  probe.validate(meta.landmarks);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.points.size() != 2 * meta.landmarks) {
      throw std::invalid_argument("manifest record " + std::to_string(i) + " ('" + r.image_path + "') has " +
                                  std::to_string(r.points.size() / 2) + " landmarks, expected " +
                                  std::to_string(meta.landmarks));
    }
  }
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open manifest '" + path + "'");
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest '" + path + "' is not valid JSON: " + e.what());
  }
  DatasetManifest m;
  try {
    const auto& meta = doc.at("metadata");
    m.meta.landmarks = meta.at("landmarks").get<std::size_t>();
    const auto pair = meta.at("norm_pair").get<std::vector<std::size_t>>();
    if (pair.size() != 2) throw std::invalid_argument("manifest: norm_pair must have two entries");
    m.meta.norm_pair = {pair[0], pair[1]};
    m.meta.flip_map = meta.value("flip_map", std::vector<std::size_t>{});
    m.meta.source = meta.value("source", std::string{});
    for (const auto& r : doc.at("records")) {
      ManifestRecord rec;
      rec.image_path = r.at("image_path").get<std::string>();
      rec.points = r.at("points").get<std::vector<double>>();
      const auto box = r.at("bbox").get<std::vector<double>>();
      if (box.size() != 4) throw std::invalid_argument("manifest: bbox of '" + rec.image_path + "' needs 4 values");
      rec.bbox = {box[0], box[1], box[2], box[3]};
      m.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest '" + path + "': " + e.what());
  }
  m.base_dir = fs::path(path).parent_path().string();
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  manifest.validate();
  json doc;
  doc["metadata"] = {{"landmarks", manifest.meta.landmarks},
                     {"norm_pair", {manifest.meta.norm_pair.first, manifest.meta.norm_pair.second}},
                     {"flip_map", manifest.meta.flip_map},
                     {"source", manifest.meta.source}};
  doc["records"] = json::array();
  for (const auto& r : manifest.records) {
    doc["records"].push_back({{"image_path", r.image_path},
                              {"points", r.points},
                              {"bbox", {r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height}}});
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write manifest '" + path + "'");
  f << doc.dump(1) << '\n';
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
  std::vector<Sample> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    fs::path p(r.image_path);
    if (p.is_relative() && !manifest.base_dir.empty()) p = fs::path(manifest.base_dir) / p;
    Sample s;
    s.image = read_png(p.string());
    for (std::size_t i = 0; i + 1 < r.points.size(); i += 2) s.landmarks.points.push_back({r.points[i], r.points[i + 1]});
    s.bbox = r.bbox;
    out.push_back(std::move(s));
  }
  return out;
}

AnnotationFormat parse_annotation_format(const std::string& name) {
  if (name == "cofw") return AnnotationFormat::COFW;
  if (name == "300w") return AnnotationFormat::W300;
  if (name == "wflw") return AnnotationFormat::WFLW;
  throw std::invalid_argument("unknown annotation format '" + name + "' (expected cofw, 300w or wflw)");
}

namespace {

std::vector<std::size_t> mirror_from_pairs(std::size_t n, std::initializer_list<std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<std::size_t> map(n);
  for (std::size_t i = 0; i < n; ++i) map[i] = i;
  for (const auto& [a, b] : pairs) {
    map[a] = b;
    map[b] = a;
  }
  return map;
}

BBox extent_box(const std::vector<double>& pts) {
  double x0 = pts[0], x1 = pts[0], y0 = pts[1], y1 = pts[1];
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
    x0 = std::min(x0, pts[i]);
    x1 = std::max(x1, pts[i]);
    y0 = std::min(y0, pts[i + 1]);
    y1 = std::max(y1, pts[i + 1]);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

double to_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": '" + s + "' is not a number");
  }
}

}  // namespace

DatasetMeta annotation_template(AnnotationFormat format) {
  DatasetMeta m;
  switch (format) {
    case AnnotationFormat::COFW:
      // 29-point scheme. Outer eye corners taken as 8 and 9, the pair used by
      // common COFW evaluation scripts; edit here if your export differs.
      m.landmarks = 29;
      m.norm_pair = {8, 9};
      m.flip_map = mirror_from_pairs(29, {{0, 1}, {4, 6}, {2, 3}, {5, 7}, {8, 9}, {10, 11}, {12, 14}, {16, 17},
                                          {13, 15}, {18, 19}, {22, 23}});
      m.source = "cofw";
      break;
    case AnnotationFormat::W300:
      // iBUG 68-point markup.
      m.landmarks = 68;
      m.norm_pair = {36, 45};
      m.flip_map = mirror_from_pairs(
          68, {{0, 16}, {1, 15}, {2, 14}, {3, 13}, {4, 12}, {5, 11}, {6, 10}, {7, 9},          // jaw
               {17, 26}, {18, 25}, {19, 24}, {20, 23}, {21, 22},                             // brows
               {31, 35}, {32, 34},                                                           // nostrils
               {36, 45}, {37, 44}, {38, 43}, {39, 42}, {40, 47}, {41, 46},                   // eyes
               {48, 54}, {49, 53}, {50, 52}, {55, 59}, {56, 58}, {60, 64}, {61, 63}, {65, 67}});  // mouth
      m.source = "300w";
      break;
    case AnnotationFormat::WFLW: {
      // 98-point markup: 33 contour points, brows 33-50, nose 51-59, eyes
      // 60-75, mouth 76-95, pupils 96-97.
      m.landmarks = 98;
      m.norm_pair = {60, 72};
      m.flip_map = mirror_from_pairs(98, {{33, 46}, {34, 45}, {35, 44}, {36, 43}, {37, 42}, {38, 50}, {39, 49},
                                          {40, 48}, {41, 47}, {55, 59}, {56, 58}, {60, 72}, {61, 71}, {62, 70},
                                          {63, 69}, {64, 68}, {65, 75}, {66, 74}, {67, 73}, {76, 82}, {77, 81},
                                          {78, 80}, {83, 87}, {84, 86}, {88, 92}, {89, 91}, {93, 95}, {96, 97}});
      for (std::size_t i = 0; i < 16; ++i) {
        m.flip_map[i] = 32 - i;
        m.flip_map[32 - i] = i;
      }
      m.source = "wflw";
      break;
    }
  }
  return m;
}

DatasetManifest convert_annotations(AnnotationFormat format, const std::string& src) {
  std::ifstream f(src);
  if (!f) throw std::runtime_error("cannot open annotation source '" + src + "'");
  DatasetManifest m;
  m.meta = annotation_template(format);
  m.base_dir = fs::path(src).parent_path().string();
  const std::size_t L = m.meta.landmarks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    const std::string where = src + ":" + std::to_string(lineno);
    ManifestRecord rec;
    switch (format) {
      case AnnotationFormat::WFLW: {
        if (tok.size() != 2 * L + 4 + 6 + 1) {
          throw std::invalid_argument(where + ": expected " + std::to_string(2 * L + 11) + " fields, got " +
                                      std::to_string(tok.size()));
        }
        for (std::size_t i = 0; i < 2 * L; ++i) rec.points.push_back(to_number(tok[i], where));
        const double x0 = to_number(tok[2 * L], where), y0 = to_number(tok[2 * L + 1], where);
        const double x1 = to_number(tok[2 * L + 2], where), y1 = to_number(tok[2 * L + 3], where);
        rec.bbox = {x0, y0, x1 - x0, y1 - y0};
        rec.image_path = tok.back();
        break;
      }
      case AnnotationFormat::W300: {
        const fs::path pts_path = fs::path(m.base_dir) / tok[0];
        std::ifstream pf(fs::path(tok[0]).is_absolute() ? fs::path(tok[0]) : pts_path);
        if (!pf) throw std::runtime_error(where + ": cannot open '" + tok[0] + "'");
        std::string body((std::istreambuf_iterator<char>(pf)), std::istreambuf_iterator<char>());
        const auto open = body.find('{'), close = body.find('}');
        if (open == std::string::npos || close == std::string::npos) {
          throw std::invalid_argument(where + ": '" + tok[0] + "' is not a .pts file");
        }
        for (const auto& t : tokens(body.substr(open + 1, close - open - 1))) rec.points.push_back(to_number(t, tok[0]));
        rec.bbox = extent_box(rec.points);
        rec.image_path = fs::path(tok[0]).replace_extension(".png").string();
        break;
      }
      case AnnotationFormat::COFW: {
        const std::size_t n = tok.size() - 1;
        if (n != 2 * L && n != 2 * L + 4 && n != 3 * L && n != 3 * L + 4) {
          throw std::invalid_argument(where + ": unexpected field count " + std::to_string(n));
        }
        rec.image_path = tok[0];
        for (std::size_t i = 0; i < L; ++i) {
          rec.points.push_back(to_number(tok[1 + i], where));
          rec.points.push_back(to_number(tok[1 + L + i], where));
        }
        if (n % L == 4) {
          const std::size_t b = n - 3;
          rec.bbox = {to_number(tok[b], where), to_number(tok[b + 1], where), to_number(tok[b + 2], where),
                      to_number(tok[b + 3], where)};
        } else {
          rec.bbox = extent_box(rec.points);
        }
        break;
      }
    }
    m.records.push_back(std::move(rec));
  }
  m.validate();
  return m;
}

DatasetMeta synthetic_meta(std::size_t landmarks) {
  if (landmarks < 12) throw std::invalid_argument("synthetic faces need at least 12 landmarks");
  const std::size_t nc = landmarks - 11;
  DatasetMeta m;
  m.landmarks = landmarks;
  m.norm_pair = {nc, nc + 5};
  m.flip_map.resize(landmarks);
  for (std::size_t k = 0; k < nc; ++k) m.flip_map[k] = nc - 1 - k;
  const std::size_t mirror[11] = {5, 4, 3, 2, 1, 0, 6, 7, 10, 9, 8};
  for (std::size_t k = 0; k < 11; ++k) m.flip_map[nc + k] = nc + mirror[k];
  m.source = "synthetic";
  return m;
}

namespace {

struct Segment {
  Point a, b;
};

double segment_distance(const Segment& s, double x, double y) {
  const double vx = s.b.x - s.a.x, vy = s.b.y - s.a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((x - s.a.x) * vx + (y - s.a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(x - (s.a.x + t * vx), y - (s.a.y + t * vy));
}

void polyline(std::vector<Segment>& out, const std::vector<Point>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i) out.push_back({pts[i - 1], pts[i]});
}

// Parabola through (-half, base), (0, base + rise), (half, base), sampled
// with an even number of pieces so the apex is a vertex.
std::vector<Point> parabola(double cx, double half, double base, double rise, int pieces) {
  std::vector<Point> pts;
  for (int i = 0; i <= pieces; ++i) {
    const double u = -half + 2 * half * i / pieces;
    const double q = u / half;
    pts.push_back({cx + u, base + rise * (1 - q * q)});
  }
  return pts;
}

}  // namespace

SynthDataset generate_synthetic(const SynthParams& params, std::size_t count) {
  if (count == 0) throw std::invalid_argument("generate_synthetic: count must be positive");
  SynthDataset ds;
  ds.meta = synthetic_meta(params.landmarks);
  const std::size_t nc = params.landmarks - 11;
  const double S = static_cast<double>(params.canvas);
  const double v = params.shape_variation;

  for (std::size_t n = 0; n < count; ++n) {
    auto rng = derive_rng(params.seed, n, 0x5157);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const double cx = S / 2 + uni(-0.05, 0.05) * S * v, cy = S / 2 + uni(-0.05, 0.05) * S * v;
    const double ry = S * uni(0.28, 0.34), rx = ry * uni(0.70, 0.88);
    const double roll = uni(-15.0, 15.0) * v * std::numbers::pi / 180.0;
    const double eye_y = -0.22 * ry + uni(-0.04, 0.04) * ry * v;
    const double eye_dx = 0.42 * rx * uni(0.9, 1.1);
    const double eye_w = 0.2 * rx;
    const double eye_l_open = uni(0.04, 0.14) * ry, eye_r_open = uni(0.04, 0.14) * ry;
    const Point nose_top{0, eye_y + 0.1 * ry};
    const Point nose_tip{uni(-0.1, 0.1) * rx * v, 0.24 * ry + uni(-0.04, 0.04) * ry * v};
    const double mouth_y = 0.52 * ry + uni(-0.05, 0.05) * ry * v;
    const double mouth_w = 0.35 * rx * uni(0.8, 1.2);
    const double mouth_bend = uni(-0.06, 0.16) * ry * v;

    // Local face frame (origin at the face centre) to canvas.
    const Affine to_canvas = Affine::scale_rotate_about({0, 0}, 1.0, roll).then(Affine::translate(cx, cy));

    std::vector<Point> local;
    for (std::size_t k = 0; k < nc; ++k) {
      const double deg = nc == 1 ? 90.0 : 195.0 - 210.0 * static_cast<double>(k) / static_cast<double>(nc - 1);
      const double phi = deg * std::numbers::pi / 180.0;
      local.push_back({rx * std::cos(phi), ry * std::sin(phi)});
    }
    local.push_back({-eye_dx - eye_w, eye_y});
    local.push_back({-eye_dx, eye_y - eye_l_open});
    local.push_back({-eye_dx + eye_w, eye_y});
    local.push_back({eye_dx - eye_w, eye_y});
    local.push_back({eye_dx, eye_y - eye_r_open});
    local.push_back({eye_dx + eye_w, eye_y});
    local.push_back(nose_top);
    local.push_back(nose_tip);
    local.push_back({-mouth_w, mouth_y});
    local.push_back({0, mouth_y + mouth_bend});
    local.push_back({mouth_w, mouth_y});

    std::vector<Segment> strokes;
    auto add_curve = [&](std::vector<Point> pts) {
      for (auto& p : pts) p = to_canvas.apply(p);
      polyline(strokes, pts);
    };
    {
      std::vector<Point> ellipse;
      for (int i = 0; i <= 120; ++i) {
        const double phi = 2 * std::numbers::pi * i / 120.0;
        ellipse.push_back({rx * std::cos(phi), ry * std::sin(phi)});
      }
      add_curve(ellipse);
    }
    add_curve(parabola(-eye_dx, eye_w, eye_y, -eye_l_open, 16));
    add_curve(parabola(eye_dx, eye_w, eye_y, -eye_r_open, 16));
    add_curve({nose_top, nose_tip});
    add_curve(parabola(0, mouth_w, mouth_y, mouth_bend, 20));

    Sample s;
    const std::size_t side = params.canvas;
    const float bg = static_cast<float>(uni(0.1, 0.3));
    std::vector<float> coverage(side * side, 0.0f);
    const double half = params.stroke_width / 2;
    for (const auto& seg : strokes) {
      const double reach = half + 1.0;
      const auto lo_x = static_cast<long>(std::floor(std::min(seg.a.x, seg.b.x) - reach));
      const auto hi_x = static_cast<long>(std::ceil(std::max(seg.a.x, seg.b.x) + reach));
      const auto lo_y = static_cast<long>(std::floor(std::min(seg.a.y, seg.b.y) - reach));
      const auto hi_y = static_cast<long>(std::ceil(std::max(seg.a.y, seg.b.y) + reach));
      for (long y = std::max(0L, lo_y); y <= std::min<long>(static_cast<long>(side) - 1, hi_y); ++y) {
        for (long x = std::max(0L, lo_x); x <= std::min<long>(static_cast<long>(side) - 1, hi_x); ++x) {
          const double d = segment_distance(seg, static_cast<double>(x), static_cast<double>(y));
          const auto cov = static_cast<float>(std::clamp(1.0 - std::max(0.0, d - half), 0.0, 1.0));
          auto& cell = coverage[static_cast<std::size_t>(y) * side + static_cast<std::size_t>(x)];
          cell = std::max(cell, cov);
        }
      }
    }
    std::normal_distribution<double> noise(0.0, params.noise);
    s.image = Image::blank(side, side);
    for (std::size_t i = 0; i < side * side; ++i) {
      const double val = bg + params.contrast * coverage[i] + (params.noise > 0 ? noise(rng) : 0.0);
      const auto px = static_cast<float>(std::clamp(val, 0.0, 1.0));
      for (std::size_t c = 0; c < 3; ++c) s.image.pixels[c * side * side + i] = px;
    }
    for (const auto& p : local) s.landmarks.points.push_back(to_canvas.apply(p));

    // Detector-style box: contour extent plus a 10% margin on every side.
    std::vector<double> flat;
    for (std::size_t i = 0; i <= 120; i += 3) {
      const double phi = 2 * std::numbers::pi * static_cast<double>(i) / 120.0;
      const Point q = to_canvas.apply({rx * std::cos(phi), ry * std::sin(phi)});
      flat.push_back(q.x);
      flat.push_back(q.y);
    }
    BBox box = extent_box(flat);
    s.bbox = {box.x - 0.1 * box.width, box.y - 0.1 * box.height, 1.2 * box.width, 1.2 * box.height};
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

DatasetManifest write_dataset(const SynthDataset& data, const std::string& dir) {
  fs::create_directories(dir);
  DatasetManifest m;
  m.meta = data.meta;
  m.base_dir = dir;
  char name[32];
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    std::snprintf(name, sizeof name, "%06zu.png", i);
    write_png(s.image, (fs::path(dir) / name).string());
    ManifestRecord r;
    r.image_path = name;
    for (const auto& p : s.landmarks.points) {
      r.points.push_back(p.x);
      r.points.push_back(p.y);
    }
    r.bbox = s.bbox;
    m.records.push_back(std::move(r));
  }
  save_manifest(m, (fs::path(dir) / "manifest.json").string());
  return m;
}

}  // namespace lmkd
