#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmkd/cli.hpp"
#include "lmkd/trainer.hpp"

using namespace lmkd;
namespace fs = std::filesystem;

namespace {

PreparedSet tiny_set(std::uint64_t seed, std::size_t count) {
  SynthParams p;
  p.seed = seed;
  const auto data = generate_synthetic(p, count);
  return prepare(data.meta, data.samples, 64);
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.toy = true;
  cfg.epochs = 2;
  cfg.lr = LrSchedule::scaled(2);
  cfg.batch_size = 4;
  cfg.seed = 3;
  return cfg;
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  std::vector<const char*> argv{"lmkd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  LrSchedule s;
  CHECK(s.at(0) == 1e-3);
  CHECK(s.at(29) == 1e-3);
  CHECK(s.at(30) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.at(50) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK_NOTHROW(s.validate(80));
  CHECK_THROWS_AS(s.validate(50), std::invalid_argument);
  LrSchedule unordered;
  unordered.drops = {10, 5};
  CHECK_THROWS_AS(unordered.validate(20), std::invalid_argument);
  CHECK(LrSchedule::scaled(80).drops == std::vector<std::size_t>{30, 50});
  CHECK(LrSchedule::scaled(20).drops == std::vector<std::size_t>{8, 13});
  CHECK(LrSchedule::scaled(1).drops.empty());
}

TEST_CASE("config validation reports the offending value") {
  TrainConfig cfg;
  cfg.width = 0.3;
  try {
    cfg.validate();
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("0.3") != std::string::npos);
  }
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("tap geometry mismatch is rejected before training") {
  const auto train = tiny_set(1, 4);
  auto cfg = tiny_config();
  auto teacher_spec = build_toy(Role::Teacher, 1.0, 16, ToyScale{128, 64, 128});
  const auto teacher = make_checkpoint(Network<float>::init(teacher_spec, 1));
  CHECK_THROWS_AS(distill(train, nullptr, teacher, cfg), std::invalid_argument);
  CHECK_THROWS_AS(check_tap_geometry(build_toy(Role::Student, 1.0, 16), build_toy(Role::Teacher, 1.0, 12)),
                  std::invalid_argument);
}

TEST_CASE("training is deterministic and logs one record per epoch") {
  const auto train = tiny_set(1, 6), val = tiny_set(2, 3);
  const auto cfg = tiny_config();
  const auto log = (fs::temp_directory_path() / "lmkd_runlog.jsonl").string();
  const auto a = train_student(train, &val, cfg, log);
  const auto b = train_student(train, &val, cfg);
  CHECK(serialize(a.final_ckpt) == serialize(b.final_ckpt));
  REQUIRE(a.log.records().size() == 2);
  CHECK(a.log.records()[0].loss == b.log.records()[0].loss);
  CHECK(a.log.records()[0].lr == 1e-3);
  CHECK(a.log.records()[1].lr == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(a.log.step_losses.size() == 4);  // 6 samples, batch 4, last partial batch kept
  CHECK(a.best_ckpt.has_value());
  std::ifstream f(log);
  std::string line;
  int lines = 0;
  while (std::getline(f, line)) ++lines;
  CHECK(lines == 2);

  const auto report = evaluate(a.final_ckpt, val);
  CHECK(report.images == 3);
  CHECK(report.mean_error == doctest::Approx(*a.log.records().back().val_nme).epsilon(1e-12));
}

TEST_CASE("distillation updates student only and lambda zero matches the baseline") {
  const auto train = tiny_set(1, 5);
  auto cfg = tiny_config();
  auto tcfg = cfg;
  tcfg.epochs = 1;
  tcfg.lr = LrSchedule::scaled(1);
  const auto teacher = train_teacher(train, nullptr, tcfg).final_ckpt;
  const std::string before = serialize(teacher);

  cfg.distill = DistillConfig::all_layers(1e-2);
  const auto kd = distill(train, nullptr, teacher, cfg);
  CHECK(serialize(teacher) == before);
  CHECK(kd.log.records()[0].fa[2] > 0);
  CHECK(kd.log.records()[0].fs[0] > 0);

  cfg.distill.lambda = 0;
  const auto zero = distill(train, nullptr, teacher, cfg);
  const auto base = train_student(train, nullptr, cfg);
  CHECK(zero.final_ckpt.buffers == base.final_ckpt.buffers);
  CHECK(zero.final_ckpt.params == base.final_ckpt.params);
  CHECK(kd.final_ckpt.params != base.final_ckpt.params);
}

TEST_CASE("command line") {
  std::string out, err;
  CHECK(cli({"stats", "--width", "0.5", "--landmarks", "98"}, &out) == 0);
  CHECK(out.find("params=1933154\n") != std::string::npos);
  CHECK(out.find("flops=") != std::string::npos);
  CHECK(cli({"stats", "--model", "teacher", "--side", "128"}, &out) == 0);
  CHECK(out.find("input_side=128\n") != std::string::npos);

  CHECK(cli({"stats", "--bogus"}, nullptr, &err) != 0);
  CHECK(err.find("Usage") != std::string::npos);
  CHECK(cli({"launch"}, nullptr, &err) != 0);
  CHECK(cli({"stats", "--width", "0.7"}, nullptr, &err) != 0);
  CHECK(err.find("0.7") != std::string::npos);
  CHECK(cli({"train-student", "--manifest", "/nonexistent.json", "--out", "/tmp/x", "--epochs", "0"}, nullptr, &err) !=
        0);
  CHECK(err.find("epochs") != std::string::npos);

  const auto dir = fs::temp_directory_path() / "lmkd_cli_test";
  fs::remove_all(dir);
  CHECK(cli({"synth-gen", "--out", (dir / "data").string(), "--count", "6", "--seed", "4"}) == 0);
  const auto manifest = (dir / "data" / "manifest.json").string();
  CHECK(cli({"train-teacher", "--toy", "--manifest", manifest, "--out", (dir / "t").string(), "--epochs", "1",
             "--batch", "3"}) == 0);
  CHECK(cli({"distill", "--toy", "--manifest", manifest, "--out", (dir / "d").string(), "--epochs", "1", "--teacher",
             (dir / "t" / "final.ckpt").string(), "--fa-layers", "3", "--fs-layers", "2,3", "--lambda", "0.01"}) == 0);
  CHECK(fs::exists(dir / "d" / "runlog.jsonl"));
  CHECK(cli({"evaluate", "--ckpt", (dir / "d" / "final.ckpt").string(), "--manifest", manifest}, &out) == 0);
  CHECK(out.find("nme=") != std::string::npos);
  CHECK(cli({"emit-ced", "--ckpt", (dir / "d" / "final.ckpt").string(), "--manifest", manifest, "--out",
             (dir / "ced.csv").string()}) == 0);
  std::ifstream ced(dir / "ced.csv");
  std::string header;
  std::getline(ced, header);
  CHECK(header == "threshold,fraction");
  CHECK(cli({"distill", "--toy", "--manifest", manifest, "--out", (dir / "e").string(), "--teacher",
             (dir / "t" / "final.ckpt").string(), "--fa-layers", "5"}, nullptr, &err) != 0);
}
