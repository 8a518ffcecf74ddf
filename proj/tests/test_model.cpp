#include <doctest.h>

#include <cmath>

#include "lmkd/model.hpp"
#include "support.hpp"

using namespace lmkd;
using testing::TD;

namespace {

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * target; }

// Closed-form counts written out layer by layer, independent of the spec
// builder. ResNet-50 trunk: torchvision's 25,557,032 minus the 2048→1000
// classifier.
constexpr std::uint64_t kResNet50Trunk = 25'557'032 - (2048 * 1000 + 1000);
// MobileNetV2 through the 320-channel block: 3,504,872 minus the classifier
// and the 1×1 320→1280 conv with its norm.
constexpr std::uint64_t kMobileNetTrunk = 3'504'872 - (1280 * 1000 + 1000) - (320 * 1280 + 2 * 1280);

std::uint64_t decoder_params(std::uint64_t in, std::uint64_t ch, std::uint64_t k, std::uint64_t landmarks) {
  return in * ch * k * k + 2 * ch + 2 * (ch * ch * k * k + 2 * ch) + ch * landmarks + landmarks;
}

}  // namespace

TEST_CASE("1x1 conv with bias parameter count") {
  NetworkSpec s;
  s.name = "head-only";
  s.landmarks = 98;
  BlockSpec head;
  head.kind = BlockKind::Head;
  head.in = 128;
  head.out = 98;
  s.blocks = {head};
  CHECK(count_params(s) == 12642);
}

TEST_CASE("student and teacher sizes") {
  const auto s1 = build_student(1.0, 98), s05 = build_student(0.5, 98), t = build_teacher(98);
  CHECK(count_params(s1) == kMobileNetTrunk + decoder_params(320, 128, 2, 98));
  CHECK(count_params(s05) == kMobileNetTrunk + decoder_params(320, 64, 2, 98));
  CHECK(count_params(t) == kResNet50Trunk + decoder_params(2048, 256, 4, 98));
  CHECK(within(static_cast<double>(count_params(t)), 34e6, 0.10));
  CHECK(within(static_cast<double>(count_params(s1)), 2.02e6, 0.05));
  CHECK(within(static_cast<double>(count_flops(s1, 256)), 0.72e9, 0.15));
  CHECK(within(static_cast<double>(count_flops(s05, 256)), 0.45e9, 0.15));
  CHECK_THROWS_AS(build_student(0.75, 98), std::invalid_argument);
}

TEST_CASE("decoder geometry doubles at every tap") {
  for (const auto& spec : {build_student(1.0, 98), build_student(0.5, 98), build_teacher(98)}) {
    CHECK(tap_sides(spec, 256) == std::array<std::size_t, 3>{16, 32, 64});
  }
  CHECK(tap_channels(build_student(1.0, 98)) == std::array<std::size_t, 3>{128, 128, 128});
  CHECK(tap_channels(build_student(0.5, 98)) == std::array<std::size_t, 3>{64, 64, 64});
  CHECK(tap_channels(build_teacher(98)) == std::array<std::size_t, 3>{256, 256, 256});
  for (Role r : {Role::Student, Role::Teacher}) {
    const auto toy = build_toy(r, 1.0, 16);
    CHECK(tap_sides(toy, 64) == std::array<std::size_t, 3>{4, 8, 16});
  }
}

TEST_CASE("spec text round trip and validation") {
  for (const auto& spec : {build_student(0.5, 29), build_teacher(68), build_toy(Role::Teacher, 1.0, 16)}) {
    CHECK(NetworkSpec::parse(spec.to_text()) == spec);
  }
  auto broken = build_toy(Role::Student, 1.0, 16);
  broken.blocks[2].in += 1;
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  auto no_tap = build_toy(Role::Student, 1.0, 16);
  for (auto& b : no_tap.blocks) b.tap = 0;
  CHECK_THROWS_AS(no_tap.validate(), std::invalid_argument);
  CHECK_THROWS(NetworkSpec::parse("network x input=64 landmarks=2\nwidget in=3 out=4\n"));
}

TEST_CASE("toy forward shapes and eval determinism") {
  for (Role r : {Role::Student, Role::Teacher}) {
    const auto spec = build_toy(r, 1.0, 16);
    auto net = Network<double>::init(spec, 7);
    std::mt19937_64 rng(1);
    auto x = testing::random_tensor({2, 3, 64, 64}, rng);
    Tape<double> tape;
    auto out = net.forward(tape, x, Mode::Eval);
    CHECK(out.heatmaps.shape() == Shape{2, 16, 16, 16});
    const auto ch = tap_channels(spec);
    CHECK(out.features[0].shape() == Shape{2, ch[0], 4, 4});
    CHECK(out.features[2].shape() == Shape{2, ch[2], 16, 16});
    auto again = net.forward(tape, x, Mode::Eval);
    CHECK(testing::max_abs_diff(out.heatmaps.data(), again.heatmaps.data()) == 0.0);

    auto single = net.forward(tape, TD::zeros({3, 64, 64}), Mode::Eval);
    CHECK(single.heatmaps.shape() == Shape{16, 16, 16});
    CHECK_THROWS_AS(net.forward(tape, TD::zeros({1, 3, 48, 48}), Mode::Eval), ShapeError);
    CHECK_THROWS_AS(net.forward(tape, TD::zeros({1, 1, 64, 64}), Mode::Eval), ShapeError);
  }
}

TEST_CASE("full-scale student forward") {
  const auto spec = build_student(0.5, 98);
  auto net = Network<float>::init(spec, 1);
  Tape<float> tape;
  auto out = net.forward(tape, Tensor<float>::zeros({3, 256, 256}), Mode::Eval);
  CHECK(out.heatmaps.shape() == Shape{98, 64, 64});
  CHECK(out.features[0].shape() == Shape{64, 16, 16});
  CHECK(out.features[1].shape() == Shape{64, 32, 32});
  CHECK(out.features[2].shape() == Shape{64, 64, 64});
}

TEST_CASE("parameters follow the spec and from_tensors checks shapes") {
  const auto spec = build_toy(Role::Student, 0.5, 12);
  auto net = Network<double>::init(spec, 3);
  std::uint64_t n = 0;
  for (const auto& p : net.parameters()) n += p.size();
  CHECK(n == count_params(spec));
  auto params = net.parameters();
  auto buffers = net.buffers();
  CHECK_NOTHROW(Network<double>::from_tensors(spec, params, buffers));
  params[0] = TD::zeros({1});
  CHECK_THROWS(Network<double>::from_tensors(spec, params, buffers));

  // Initialization: unit scale, zero shift, fan-out variance.
  const auto ps = net.parameters();
  CHECK(ps[1].data()[0] == 1.0);
  CHECK(ps[2].data()[0] == 0.0);

  auto copy = net.clone();
  copy.parameters()[0].data()[0] += 1.0;
  CHECK(copy.parameters()[0].data()[0] != net.parameters()[0].data()[0]);
}
