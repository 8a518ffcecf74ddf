#include "lmkd/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "lmkd/checkpoint.hpp"
#include "lmkd/data.hpp"
#include "lmkd/metrics.hpp"
#include "lmkd/model.hpp"
#include "lmkd/trainer.hpp"

namespace lmkd {

namespace fs = std::filesystem;

namespace {

struct TrainFlags {
  std::string manifest;
  std::string val_manifest;
  std::string out;
  std::string teacher;
  std::string lr_drops;
  std::string fa_layers = "1,2,3";
  std::string fs_layers = "1,2,3";
  int precision = 32;
  bool no_augment = false;
  TrainConfig cfg;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool distill) {
  cmd->add_option("--manifest", f.manifest, "training manifest (JSON)")->required();
  cmd->add_option("--val-manifest", f.val_manifest, "validation manifest; enables best-val checkpoint");
  cmd->add_option("--out", f.out, "output directory")->required();
  cmd->add_option("--epochs", f.cfg.epochs, "passes over the training set")->capture_default_str();
  cmd->add_option("--batch", f.cfg.batch_size, "mini-batch size")->capture_default_str();
  cmd->add_option("--seed", f.cfg.seed, "seed for init, shuffling and augmentation")->capture_default_str();
  cmd->add_option("--sigma", f.cfg.sigma, "heatmap Gaussian sigma (heatmap pixels)")->capture_default_str();
  cmd->add_option("--width", f.cfg.width, "student decoder width multiplier, 1.0 or 0.5")->capture_default_str();
  cmd->add_option("--precision", f.precision, "32 or 64")->capture_default_str();
  cmd->add_option("--lr-drops", f.lr_drops, "epochs at which lr drops 10x (default 30,50 scaled to --epochs)");
  cmd->add_flag("--toy", f.cfg.toy, "64x64 desk-scale networks");
  cmd->add_flag("--no-augment", f.no_augment, "disable rotation/scale/flip augmentation");
  if (distill) {
    cmd->add_option("--teacher", f.teacher, "teacher checkpoint")->required();
    cmd->add_option("--lambda", f.cfg.distill.lambda, "weight of the distillation terms")->capture_default_str();
    cmd->add_option("--fa-layers", f.fa_layers, "decoder layers with feature-aligned terms")->capture_default_str();
    cmd->add_option("--fs-layers", f.fs_layers, "decoder layers with feature-similarity terms")->capture_default_str();
  }
}

std::vector<std::size_t> parse_drops(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
    }
    if (v < 0 || used != item.size()) throw std::invalid_argument("--lr-drops: '" + item + "' is not an epoch");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

TrainConfig finish(TrainFlags& f, bool distill) {
  TrainConfig cfg = f.cfg;
  cfg.precision = parse_precision(f.precision);
  cfg.augment = !f.no_augment;
  cfg.lr = f.lr_drops.empty() ? LrSchedule::scaled(cfg.epochs) : LrSchedule{};
  if (!f.lr_drops.empty()) cfg.lr.drops = parse_drops(f.lr_drops);
  if (distill) {
    cfg.distill.fa = parse_layer_list(f.fa_layers);
    cfg.distill.fs = parse_layer_list(f.fs_layers);
  } else {
    cfg.distill = DistillConfig{0.0, {}, {}};
  }
  cfg.validate();
  return cfg;
}

void report_training(const TrainResult& r, const std::string& out_dir, std::ostream& out) {
  save_checkpoint(r.final_ckpt, (fs::path(out_dir) / "final.ckpt").string());
  out << "final_checkpoint=" << (fs::path(out_dir) / "final.ckpt").string() << '\n';
  if (r.best_ckpt) {
    save_checkpoint(*r.best_ckpt, (fs::path(out_dir) / "best.ckpt").string());
    out << "best_checkpoint=" << (fs::path(out_dir) / "best.ckpt").string() << '\n';
  }
  if (!r.log.records().empty()) {
    const auto& last = r.log.records().back();
    out << "epochs=" << last.epoch << '\n' << "final_loss=" << last.loss << '\n';
    if (last.val_nme) out << "final_val_nme=" << *last.val_nme << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heatmap landmark detection with teacher-student feature distillation", "lmkd"};
  app.require_subcommand(1);

  TrainFlags teacher_flags, student_flags, distill_flags;
  auto* c_teacher = app.add_subcommand("train-teacher", "train the large network on heatmap MSE");
  add_train_flags(c_teacher, teacher_flags, false);
  auto* c_student = app.add_subcommand("train-student", "train the compact network on heatmap MSE only");
  add_train_flags(c_student, student_flags, false);
  auto* c_distill = app.add_subcommand("distill", "train the compact network under a frozen teacher");
  add_train_flags(c_distill, distill_flags, true);

  std::string ckpt_path, manifest_path, out_path;
  std::size_t eval_batch = 8;
  auto* c_eval = app.add_subcommand("evaluate", "NME, failure rate and AUC of a checkpoint");
  c_eval->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  c_eval->add_option("--manifest", manifest_path, "evaluation manifest")->required();
  c_eval->add_option("--out", out_path, "optional CED CSV path");
  c_eval->add_option("--batch", eval_batch, "evaluation batch size")->capture_default_str();

  auto* c_ced = app.add_subcommand("emit-ced", "write the CED curve of a checkpoint as CSV");
  c_ced->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  c_ced->add_option("--manifest", manifest_path, "evaluation manifest")->required();
  c_ced->add_option("--out", out_path, "CSV path")->required();

  SynthParams synth;
  std::size_t count = 500;
  auto* c_synth = app.add_subcommand("synth-gen", "generate a synthetic face dataset");
  c_synth->add_option("--out", out_path, "output directory")->required();
  c_synth->add_option("--count", count, "number of images")->capture_default_str();
  c_synth->add_option("--landmarks", synth.landmarks, "landmarks per face (>= 12)")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  c_synth->add_option("--canvas", synth.canvas, "image side in pixels")->capture_default_str();

  std::string model = "student";
  double width = 1.0;
  std::size_t landmarks = 98, side = 0;
  bool toy = false;
  auto* c_stats = app.add_subcommand("stats", "parameter and FLOP (MAC) counts of a network");
  c_stats->add_option("--model", model, "student or teacher")->check(CLI::IsMember({"student", "teacher"}))
      ->capture_default_str();
  c_stats->add_option("--width", width, "student decoder width, 1.0 or 0.5")->capture_default_str();
  c_stats->add_option("--landmarks", landmarks, "landmark count")->capture_default_str();
  c_stats->add_option("--side", side, "input side (default: the network's own)");
  c_stats->add_flag("--toy", toy, "desk-scale network");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (c_teacher->parsed() || c_student->parsed() || c_distill->parsed()) {
      const bool is_distill = c_distill->parsed();
      TrainFlags& f = c_teacher->parsed() ? teacher_flags : c_student->parsed() ? student_flags : distill_flags;
      const TrainConfig cfg = finish(f, is_distill);
      const auto manifest = load_manifest(f.manifest);
      std::optional<Checkpoint> teacher;
      NetworkSpec spec = c_teacher->parsed() ? teacher_spec(cfg, manifest.meta.landmarks)
                                             : student_spec(cfg, manifest.meta.landmarks);
      if (is_distill) {
        teacher = load_checkpoint(f.teacher);
        check_tap_geometry(spec, teacher->spec);
      }
      const PreparedSet train = prepare(manifest, spec.input_side);
      std::optional<PreparedSet> val;
      if (!f.val_manifest.empty()) val = prepare(load_manifest(f.val_manifest), spec.input_side);
      fs::create_directories(f.out);
      const std::string log = (fs::path(f.out) / "runlog.jsonl").string();
      const PreparedSet* vp = val ? &*val : nullptr;
      TrainResult r = c_teacher->parsed()   ? train_teacher(train, vp, cfg, log)
                      : c_student->parsed() ? train_student(train, vp, cfg, log)
                                            : distill(train, vp, *teacher, cfg, log);
      report_training(r, f.out, out);
      return 0;
    }
    if (c_eval->parsed() || c_ced->parsed()) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const PreparedSet data = prepare(load_manifest(manifest_path), ckpt.spec.input_side);
      const EvalReport report = evaluate(ckpt, data, eval_batch);
      if (c_eval->parsed()) write_summary(report, out);
      if (!out_path.empty()) emit_ced(report, out_path);
      return 0;
    }
    if (c_synth->parsed()) {
      const auto m = write_dataset(generate_synthetic(synth, count), out_path);
      out << "images=" << m.records.size() << '\n'
          << "manifest=" << (fs::path(out_path) / "manifest.json").string() << '\n';
      return 0;
    }
    if (c_stats->parsed()) {
      NetworkSpec spec;
      if (model == "teacher") {
        spec = toy ? build_toy(Role::Teacher, 1.0, landmarks) : build_teacher(landmarks);
      } else {
        if (width != 1.0 && width != 0.5) throw std::invalid_argument("--width must be 1.0 or 0.5, got " + std::to_string(width));
        spec = toy ? build_toy(Role::Student, width, landmarks) : build_student(width, landmarks);
      }
      const std::size_t s = side ? side : spec.input_side;
      const ModelStats st = model_stats(spec, s);
      out << "network=" << spec.name << '\n'
          << "input_side=" << s << '\n'
          << "params=" << st.param_count << '\n'
          << "flops=" << st.flop_count << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace lmkd
