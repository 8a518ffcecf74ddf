#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "lmkd/data.hpp"

using namespace lmkd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lmkd_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Sample blank_sample(std::size_t w, std::size_t h, std::vector<Point> pts) {
  Sample s;
  s.image = Image::blank(w, h, 0.5f);
  s.landmarks.points = std::move(pts);
  s.bbox = {0, 0, static_cast<double>(w), static_cast<double>(h)};
  return s;
}

}  // namespace

TEST_CASE("crop geometry") {
  auto full = blank_sample(512, 512, {{256, 256}});
  const auto c = crop_and_scale(full, 256);
  CHECK(c.landmarks.points[0].x == 128);
  CHECK(c.landmarks.points[0].y == 128);
  CHECK(c.image.width == 256);

  auto big = blank_sample(600, 600, {{200, 200}});
  big.bbox = {136, 136, 128, 128};
  const auto cb = crop_and_scale(big, 256);
  CHECK(cb.landmarks.points[0].x == doctest::Approx(128).epsilon(1e-12));
  CHECK(cb.landmarks.points[0].y == doctest::Approx(128).epsilon(1e-12));

  // Non-square boxes grow to a square about their centre.
  const Affine m = crop_transform({10, 20, 40, 80}, 100);
  const Point centre = m.apply({30, 60});
  CHECK(centre.x == doctest::Approx(50));
  CHECK(centre.y == doctest::Approx(50));

  CHECK_THROWS_AS(crop_transform({0, 0, 0, 10}, 256), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 50; ++i) {
    const Affine a = Affine::scale_rotate_about({u(rng), u(rng)}, 0.5 + std::abs(u(rng)) / 50, u(rng))
                         .then(Affine::translate(u(rng), u(rng)));
    const Point p{u(rng), u(rng)};
    const Point back = a.inverse().apply(a.apply(p));
    CHECK(std::abs(back.x - p.x) < 1e-9);
    CHECK(std::abs(back.y - p.y) < 1e-9);
  }
}

TEST_CASE("augmentation examples") {
  auto s = blank_sample(256, 256, {{40, 70}, {200, 90}, {127.5 + 50, 127.5}});
  const std::vector<std::size_t> flip{1, 0, 2};

  const auto same = apply_augment(s, AugmentDraw{0, 1, false}, flip);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(same.landmarks.points[i].x - s.landmarks.points[i].x) < 1e-9);
    CHECK(std::abs(same.landmarks.points[i].y - s.landmarks.points[i].y) < 1e-9);
  }

  const auto flipped = apply_augment(s, AugmentDraw{0, 1, true}, flip);
  CHECK(flipped.landmarks.points[0].x == doctest::Approx(255 - 200));
  CHECK(flipped.landmarks.points[1].x == doctest::Approx(255 - 40));
  CHECK(flipped.landmarks.points[0].y == 90);
  const auto twice = apply_augment(flipped, AugmentDraw{0, 1, true}, flip);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(twice.landmarks.points[i].x == doctest::Approx(s.landmarks.points[i].x).epsilon(1e-12));
  }

  const auto rot = apply_augment(s, AugmentDraw{30, 1, false}, flip);
  const double c = std::cos(std::numbers::pi / 6), sn = std::sin(std::numbers::pi / 6);
  CHECK(std::abs(rot.landmarks.points[2].x - (127.5 + 50 * c)) < 1e-6);
  CHECK(std::abs(rot.landmarks.points[2].y - (127.5 + 50 * sn)) < 1e-6);

  AugmentConfig bad;
  bad.flip_map = {1, 1, 2};
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
  bad.flip_map = {0, 1};
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);

  AugmentConfig cfg;
  cfg.flip_map = flip;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const auto d = draw_augment(cfg, rng);
    CHECK(std::abs(d.rotation_degrees) <= 30);
    CHECK(d.scale >= 0.75);
    CHECK(d.scale <= 1.25);
    CHECK(augment(s, cfg, rng).landmarks.size() == 3);
  }
}

TEST_CASE("image pixels follow the landmark transform") {
  Sample s = blank_sample(64, 64, {{20, 30}});
  s.image = Image::blank(64, 64);
  for (std::size_t c = 0; c < 3; ++c) s.image.at(c, 30, 20) = 1.0f;
  const auto out = apply_augment(s, AugmentDraw{90, 1, false}, {});
  const Point p = out.landmarks.points[0];
  CHECK(out.image.at(0, static_cast<std::size_t>(std::lround(p.y)), static_cast<std::size_t>(std::lround(p.x))) ==
        doctest::Approx(1.0f));
}

TEST_CASE("derived random streams are reproducible and distinct") {
  auto a = derive_rng(1, 2, 3), b = derive_rng(1, 2, 3), c = derive_rng(1, 3, 2);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
}

TEST_CASE("synthetic faces") {
  const auto meta = synthetic_meta(16);
  CHECK(meta.landmarks == 16);
  CHECK(meta.norm_pair == NormPair{5, 10});
  for (std::size_t i = 0; i < 16; ++i) CHECK(meta.flip_map[meta.flip_map[i]] == i);
  CHECK_THROWS_AS(synthetic_meta(11), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic(SynthParams{}, 0), std::invalid_argument);

  SynthParams params;
  params.seed = 5;
  const auto a = generate_synthetic(params, 4), b = generate_synthetic(params, 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.samples[i].image.pixels == b.samples[i].image.pixels);

  // Mirroring an image and permuting by flip_map gives a plausible face: the
  // outer eye corners swap sides.
  const auto& lm = a.samples[0].landmarks.points;
  CHECK(lm[meta.norm_pair.first].x < lm[meta.norm_pair.second].x);

  // Noise-free renders: the brightest pixel within 2 px of every landmark is
  // background + full stroke contrast.
  params.noise = 0;
  const auto clean = generate_synthetic(params, 100);
  for (const auto& s : clean.samples) {
    const float bg = s.image.at(0, 0, 0);
    for (const auto& p : s.landmarks.points) {
      float best = 0;
      for (long dy = -2; dy <= 2; ++dy)
        for (long dx = -2; dx <= 2; ++dx) {
          if (dx * dx + dy * dy > 4) continue;
          const long y = std::lround(p.y) + dy, x = std::lround(p.x) + dx;
          if (x < 0 || y < 0 || x >= 96 || y >= 96) continue;
          best = std::max(best, s.image.at(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
        }
      CHECK(best - bg >= static_cast<float>(params.contrast) - 1e-5f);
    }
  }
}

TEST_CASE("manifest round trip through disk") {
  const auto dir = scratch_dir("manifest");
  SynthParams params;
  params.landmarks = 13;
  const auto data = generate_synthetic(params, 3);
  const auto written = write_dataset(data, dir.string());
  const auto loaded = load_manifest((dir / "manifest.json").string());
  CHECK(loaded.meta.landmarks == 13);
  CHECK(loaded.meta.norm_pair == data.meta.norm_pair);
  CHECK(loaded.meta.flip_map == data.meta.flip_map);
  REQUIRE(loaded.records.size() == 3);
  CHECK(loaded.records[1].points == written.records[1].points);
  const auto samples = load_samples(loaded);
  CHECK(samples[2].image.width == 96);
  // 8-bit storage: within half a quantization step.
  for (std::size_t i = 0; i < samples[2].image.pixels.size(); ++i) {
    CHECK(std::abs(samples[2].image.pixels[i] - data.samples[2].image.pixels[i]) <= 0.5f / 255 + 1e-6f);
  }

  std::ofstream(dir / "bad.json") << R"({"metadata":{"landmarks":2,"norm_pair":[0,1]},
    "records":[{"image_path":"x.png","points":[1,2,3,4,5,6],"bbox":[0,0,1,1]}]})";
  try {
    load_manifest((dir / "bad.json").string());
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("x.png") != std::string::npos);
  }
}

TEST_CASE("annotation converters") {
  const auto dir = scratch_dir("convert");
  for (auto f : {AnnotationFormat::COFW, AnnotationFormat::W300, AnnotationFormat::WFLW}) {
    const auto m = annotation_template(f);
    for (std::size_t i = 0; i < m.landmarks; ++i) CHECK(m.flip_map[m.flip_map[i]] == i);
  }
  CHECK(annotation_template(AnnotationFormat::W300).norm_pair == NormPair{36, 45});
  CHECK(annotation_template(AnnotationFormat::WFLW).norm_pair == NormPair{60, 72});
  CHECK(annotation_template(AnnotationFormat::COFW).landmarks == 29);
  CHECK_THROWS(parse_annotation_format("afw"));

  {
    std::ofstream w(dir / "wflw.txt");
    for (int i = 0; i < 196; ++i) w << i << ' ';
    w << "10 20 110 140 0 0 0 0 0 0 a/face.jpg\n";
  }
  const auto wflw = convert_annotations(AnnotationFormat::WFLW, (dir / "wflw.txt").string());
  REQUIRE(wflw.records.size() == 1);
  CHECK(wflw.records[0].image_path == "a/face.jpg");
  CHECK(wflw.records[0].bbox.width == 100);
  CHECK(wflw.records[0].points[195] == 195);

  {
    std::ofstream p(dir / "img1.pts");
    p << "version: 1\nn_points: 68\n{\n";
    for (int i = 0; i < 68; ++i) p << i << ' ' << 2 * i << '\n';
    p << "}\n";
    std::ofstream l(dir / "list.txt");
    l << "img1.pts\n";
  }
  const auto w300 = convert_annotations(AnnotationFormat::W300, (dir / "list.txt").string());
  CHECK(w300.records[0].image_path == "img1.png");
  CHECK(w300.records[0].points[3] == 2);

  {
    std::ofstream c(dir / "cofw.txt");
    c << "face.png";
    for (int i = 0; i < 29; ++i) c << ' ' << i;
    for (int i = 0; i < 29; ++i) c << ' ' << 100 + i;
    c << '\n';
    std::ofstream bad(dir / "cofw_bad.txt");
    bad << "face.png 1 2 3\n";
  }
  const auto cofw = convert_annotations(AnnotationFormat::COFW, (dir / "cofw.txt").string());
  CHECK(cofw.records[0].points[2] == 1);
  CHECK(cofw.records[0].points[3] == 101);
  CHECK_THROWS_AS(convert_annotations(AnnotationFormat::COFW, (dir / "cofw_bad.txt").string()), std::invalid_argument);
}
