#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lmkd/checkpoint.hpp"
#include "lmkd/data.hpp"
#include "lmkd/distill.hpp"
#include "lmkd/metrics.hpp"
#include "lmkd/model.hpp"

namespace lmkd {

/// Step schedule: base rate, multiplied by `factor` at each drop epoch
/// (0-based epoch index at which the new rate takes effect).
struct LrSchedule {
  double base = 1e-3;
  double factor = 0.1;
  std::vector<std::size_t> drops{30, 50};

  double at(std::size_t epoch) const;
  void validate(std::size_t epochs) const;
  /// 30/80 and 50/80 of `epochs`, rounded, keeping only drops inside the run.
  static LrSchedule scaled(std::size_t epochs);
};

struct TrainConfig {
  std::size_t epochs = 80;
  std::size_t batch_size = 8;
  LrSchedule lr;
  DistillConfig distill;
  double sigma = 2.0;
  double width = 1.0;
  std::uint64_t seed = 0;
  Precision precision = Precision::F32;
  bool toy = false;
  bool augment = true;
  AugmentConfig augmentation;  // flip_map is taken from the dataset

  void validate() const;
  std::string to_json() const;
};

/// Cropped, fixed-side samples ready for batching.
struct PreparedSet {
  DatasetMeta meta;
  std::size_t side = 0;
  std::vector<Sample> samples;
};

PreparedSet prepare(const DatasetMeta& meta, const std::vector<Sample>& raw, std::size_t side);
PreparedSet prepare(const DatasetManifest& manifest, std::size_t side);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0;
  double loss = 0;
  double mse = 0;
  std::array<double, 3> fa{};
  std::array<double, 3> fs{};
  std::optional<double> val_nme;

  std::string to_json() const;
};

/// Per-epoch records, mirrored line by line into a JSONL file when a path
/// is set.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(std::string path);

  void append(const EpochRecord& rec);
  const std::vector<EpochRecord>& records() const { return records_; }
  /// Loss of the first optimizer step (the overfit check measures against it).
  double first_step_loss = 0;
  std::vector<double> step_losses;

 private:
  std::string path_;
  std::vector<EpochRecord> records_;
};

struct TrainResult {
  Checkpoint final_ckpt;
  std::optional<Checkpoint> best_ckpt;  // best validation NME, when a validation set is given
  RunLog log;
};

/// Network selection shared by the training entry points.
NetworkSpec student_spec(const TrainConfig& cfg, std::size_t landmarks);
NetworkSpec teacher_spec(const TrainConfig& cfg, std::size_t landmarks);

TrainResult train_teacher(const PreparedSet& train, const PreparedSet* val, const TrainConfig& cfg,
                          const std::string& log_path = {});
/// Baseline student: heatmap MSE only; distillation settings in cfg are
/// ignored.
TrainResult train_student(const PreparedSet& train, const PreparedSet* val, const TrainConfig& cfg,
                          const std::string& log_path = {});
/// Student under a frozen teacher. Throws before training when the decoder
/// taps of the two networks differ in spatial size.
TrainResult distill(const PreparedSet& train, const PreparedSet* val, const Checkpoint& teacher,
                    const TrainConfig& cfg, const std::string& log_path = {});

EvalReport evaluate(const Checkpoint& ckpt, const PreparedSet& data, std::size_t batch_size = 8);

/// Throws std::invalid_argument naming both geometries when they differ.
void check_tap_geometry(const NetworkSpec& student, const NetworkSpec& teacher);

}  // namespace lmkd
