#include "lmkd/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lmkd/heatmap.hpp"
#include "lmkd/optim.hpp"

namespace lmkd {

using json = nlohmann::json;

double LrSchedule::at(std::size_t epoch) const {
  double lr = base;
  for (auto d : drops) {
    if (epoch >= d) lr *= factor;
  }
  return lr;
}

void LrSchedule::validate(std::size_t epochs) const {
  if (!(base > 0) || !(factor > 0)) throw std::invalid_argument("learning rate and drop factor must be positive");
  for (std::size_t i = 0; i < drops.size(); ++i) {
    if (drops[i] == 0 || drops[i] >= epochs) {
      throw std::invalid_argument("lr drop at epoch " + std::to_string(drops[i]) + " is outside (0, " +
                                  std::to_string(epochs) + ")");
    }
    if (i && drops[i] <= drops[i - 1]) throw std::invalid_argument("lr drops must be strictly increasing");
  }
}

LrSchedule LrSchedule::scaled(std::size_t epochs) {
  LrSchedule s;
  s.drops.clear();
  for (double frac : {30.0 / 80.0, 50.0 / 80.0}) {
    const auto d = static_cast<std::size_t>(std::lround(frac * static_cast<double>(epochs)));
    if (d > 0 && d < epochs && (s.drops.empty() || d > s.drops.back())) s.drops.push_back(d);
  }
  return s;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive, got " + std::to_string(sigma));
  if (width != 1.0 && width != 0.5) throw std::invalid_argument("width must be 1.0 or 0.5, got " + std::to_string(width));
  lr.validate(epochs);
  distill.validate();
}

std::string TrainConfig::to_json() const {
  json j = {{"epochs", epochs},
            {"batch_size", batch_size},
            {"lr_base", lr.base},
            {"lr_factor", lr.factor},
            {"lr_drops", lr.drops},
            {"lambda", distill.lambda},
            {"fa_layers", format_layer_list(distill.fa)},
            {"fs_layers", format_layer_list(distill.fs)},
            {"sigma", sigma},
            {"width", width},
            {"seed", seed},
            {"precision", static_cast<int>(precision)},
            {"toy", toy},
            {"augment", augment},
            {"weight_decay", 0.0},
            {"grad_clip", nullptr}};
  return j.dump();
}

PreparedSet prepare(const DatasetMeta& meta, const std::vector<Sample>& raw, std::size_t side) {
  PreparedSet set;
  set.meta = meta;
  set.side = side;
  set.samples.reserve(raw.size());
  for (const auto& s : raw) {
    if (s.landmarks.size() != meta.landmarks) throw std::invalid_argument("sample landmark count differs from metadata");
    set.samples.push_back(crop_and_scale(s, side));
  }
  return set;
}

PreparedSet prepare(const DatasetManifest& manifest, std::size_t side) {
  return prepare(manifest.meta, load_samples(manifest), side);
}

std::string EpochRecord::to_json() const {
  json j = {{"epoch", epoch}, {"lr", lr}, {"loss", loss}, {"mse", mse}, {"fa", fa}, {"fs", fs}};
  j["val_nme"] = val_nme ? json(*val_nme) : json(nullptr);
  return j.dump();
}

RunLog::RunLog(std::string path) : path_(std::move(path)) {
  std::ofstream f(path_, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot create run log '" + path_ + "'");
}

void RunLog::append(const EpochRecord& rec) {
  records_.push_back(rec);
  if (path_.empty()) return;
  std::ofstream f(path_, std::ios::app);
  f << rec.to_json() << '\n';
}

NetworkSpec student_spec(const TrainConfig& cfg, std::size_t landmarks) {
  return cfg.toy ? build_toy(Role::Student, cfg.width, landmarks) : build_student(cfg.width, landmarks);
}

NetworkSpec teacher_spec(const TrainConfig& cfg, std::size_t landmarks) {
  return cfg.toy ? build_toy(Role::Teacher, 1.0, landmarks) : build_teacher(landmarks);
}

void check_tap_geometry(const NetworkSpec& student, const NetworkSpec& teacher) {
  const auto s = tap_sides(student, student.input_side);
  const auto t = tap_sides(teacher, teacher.input_side);
  if (s != t || student.input_side != teacher.input_side) {
    auto fmt = [](const std::array<std::size_t, 3>& a, std::size_t in) {
      return std::to_string(a[0]) + "/" + std::to_string(a[1]) + "/" + std::to_string(a[2]) + " at input " +
             std::to_string(in);
    };
    throw std::invalid_argument("decoder taps differ: student " + fmt(s, student.input_side) + ", teacher " +
                                fmt(t, teacher.input_side));
  }
  if (student.landmarks != teacher.landmarks) {
    throw std::invalid_argument("teacher predicts " + std::to_string(teacher.landmarks) + " landmarks, student " +
                                std::to_string(student.landmarks));
  }
}

namespace {

constexpr std::size_t kDownscale = 4;

template <typename T>
void fill_batch(const PreparedSet& set, std::span<const std::size_t> idx, std::size_t epoch, const TrainConfig& cfg,
                bool train, Tensor<T>& images, Tensor<T>& targets) {
  const std::size_t S = set.side, H = S / kDownscale, L = set.meta.landmarks;
  const std::size_t n = idx.size();
  images = Tensor<T>::zeros({n, 3, S, S});
  targets = Tensor<T>::zeros({n, L, H, H});
  AugmentConfig aug = cfg.augmentation;
  aug.flip_map = set.meta.flip_map;
  for (std::size_t b = 0; b < n; ++b) {
    const Sample* s = &set.samples[idx[b]];
    Sample moved;
    if (train && cfg.augment) {
      auto rng = derive_rng(cfg.seed, epoch + 1, idx[b]);
      moved = augment(*s, aug, rng);
      s = &moved;
    }
    auto img = images.data().subspan(b * 3 * S * S, 3 * S * S);
    std::copy(s->image.pixels.begin(), s->image.pixels.end(), img.begin());
    encode_into<T>(s->landmarks, GaussianSpec{cfg.sigma}, H, kDownscale, targets.data().subspan(b * L * H * H, L * H * H));
  }
}

template <typename T>
std::vector<double> image_errors(Network<T>& net, const PreparedSet& set, std::size_t batch) {
  const std::size_t S = set.side, H = S / kDownscale, L = set.meta.landmarks;
  std::vector<double> errors;
  TrainConfig plain;
  plain.augment = false;
  std::vector<std::size_t> order(set.samples.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const auto idx = std::span<const std::size_t>(order).subspan(start, std::min(batch, order.size() - start));
    Tensor<T> images, targets;
    fill_batch(set, idx, 0, plain, false, images, targets);
    Tape<T> tape;
    auto out = net.forward(tape, images, Mode::Eval);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      auto planes = std::span<const T>(out.heatmaps.data()).subspan(b * L * H * H, L * H * H);
      const auto pred = decode_planes<T>(planes, L, H, kDownscale);
      errors.push_back(image_nme(pred, set.samples[idx[b]].landmarks, set.meta.norm_pair));
    }
  }
  return errors;
}

template <typename T>
double mean_nme(Network<T>& net, const PreparedSet& set, std::size_t batch) {
  const auto e = image_errors(net, set, batch);
  return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
}

std::string metadata(const char* role, const TrainConfig& cfg, std::size_t epoch, const DatasetMeta& meta) {
  json j = {{"role", role},
            {"epoch", epoch},
            {"seed", cfg.seed},
            {"config", json::parse(cfg.to_json())},
            {"norm_pair", {meta.norm_pair.first, meta.norm_pair.second}},
            {"flip_map", meta.flip_map}};
  return j.dump();
}

template <typename T>
TrainResult fit(const char* role, Network<T> net, const PreparedSet& train, const PreparedSet* val,
                const TrainConfig& cfg, Network<T>* teacher, const std::string& log_path) {
  cfg.validate();
  if (train.samples.empty()) throw std::invalid_argument("training set is empty");
  if (train.side != net.spec().input_side) {
    throw std::invalid_argument("training samples are " + std::to_string(train.side) + " px, network expects " +
                                std::to_string(net.spec().input_side));
  }
  const DistillConfig& dc = cfg.distill;
  const bool distilling = teacher != nullptr && dc.active();

  // Adapters exist only for enabled FA layers so a lambda=0 run consumes no
  // extra parameters.
  std::array<Adapter<T>, 3> adapters;
  std::vector<Tensor<T>> params = net.parameters();
  if (distilling) {
    const auto sc = tap_channels(net.spec());
    const auto tc = tap_channels(teacher->spec());
    auto rng = derive_rng(cfg.seed, 0xada9, 0);
    for (std::size_t r = 0; r < 3; ++r) {
      if (!dc.fa_enabled(r)) continue;
      adapters[r] = Adapter<T>::create(sc[r], tc[r], rng);
      adapters[r].weight.set_requires_grad(true);
      adapters[r].bias.set_requires_grad(true);
      params.push_back(adapters[r].weight);
      params.push_back(adapters[r].bias);
    }
  }
  net.set_requires_grad(true);
  Adam<T> opt(params, AdamOptions{cfg.lr.base});

  TrainResult result{make_checkpoint(net), std::nullopt, log_path.empty() ? RunLog() : RunLog(log_path)};
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train.samples.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(cfg.lr.at(epoch));
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = derive_rng(cfg.seed, epoch + 1, ~std::uint64_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = opt.lr();
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto idx = std::span<const std::size_t>(order).subspan(start, std::min(cfg.batch_size, order.size() - start));
      Tensor<T> images, targets;
      fill_batch(train, idx, epoch, cfg, true, images, targets);

      Tape<T> tape;
      auto out = net.forward(tape, images, Mode::Train);
      auto mse_term = mse(tape, out.heatmaps, targets);
      std::array<Tensor<T>, 3> fa_terms, fs_terms;
      if (distilling) {
        Tape<T> frozen;  // teacher tensors never require grad, nothing is recorded
        const auto t_out = teacher->forward(frozen, images, Mode::Eval);
        for (std::size_t r = 0; r < 3; ++r) {
          if (dc.fa_enabled(r)) {
            fa_terms[r] = fa_loss(tape, align_features(tape, out.features[r], adapters[r]), t_out.features[r]);
            rec.fa[r] += fa_terms[r].item();
          }
          if (dc.fs_enabled(r)) {
            fs_terms[r] = fs_loss_features(tape, out.features[r], t_out.features[r]);
            rec.fs[r] += fs_terms[r].item();
          }
        }
      }
      auto loss = distilling ? kd_loss(tape, mse_term, fa_terms, fs_terms, dc) : mse_term;
      tape.backward(loss);
      opt.step();
      opt.zero_grad();

      const double lv = loss.item();
      if (result.log.step_losses.empty()) result.log.first_step_loss = lv;
      result.log.step_losses.push_back(lv);
      rec.loss += lv;
      rec.mse += mse_term.item();
      ++steps;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    rec.loss *= inv;
    rec.mse *= inv;
    for (std::size_t r = 0; r < 3; ++r) {
      rec.fa[r] *= inv;
      rec.fs[r] *= inv;
    }
    if (val != nullptr && !val->samples.empty()) {
      net.set_requires_grad(false);
      rec.val_nme = mean_nme(net, *val, cfg.batch_size);
      net.set_requires_grad(true);
      if (*rec.val_nme < best) {
        best = *rec.val_nme;
        result.best_ckpt = make_checkpoint(net, metadata(role, cfg, epoch + 1, train.meta));
      }
    }
    result.log.append(rec);
  }
  net.set_requires_grad(false);
  result.final_ckpt = make_checkpoint(net, metadata(role, cfg, cfg.epochs, train.meta));
  return result;
}

template <typename T>
TrainResult run(const char* role, const NetworkSpec& spec, const PreparedSet& train, const PreparedSet* val,
                const TrainConfig& cfg, const Checkpoint* teacher_ckpt, const std::string& log_path) {
  auto net = Network<T>::init(spec, cfg.seed);
  if (teacher_ckpt == nullptr) return fit<T>(role, net, train, val, cfg, nullptr, log_path);
  auto teacher = network_from<T>(*teacher_ckpt);
  teacher.set_requires_grad(false);
  return fit<T>(role, net, train, val, cfg, &teacher, log_path);
}

template <typename... Args>
TrainResult dispatch(Precision p, Args&&... args) {
  if (p == Precision::F64) return run<double>(std::forward<Args>(args)...);
  return run<float>(std::forward<Args>(args)...);
}

}  // namespace

TrainResult train_teacher(const PreparedSet& train, const PreparedSet* val, const TrainConfig& cfg,
                          const std::string& log_path) {
  return dispatch(cfg.precision, "teacher", teacher_spec(cfg, train.meta.landmarks), train, val, cfg,
                  static_cast<const Checkpoint*>(nullptr), log_path);
}

TrainResult train_student(const PreparedSet& train, const PreparedSet* val, const TrainConfig& cfg,
                          const std::string& log_path) {
  TrainConfig plain = cfg;
  plain.distill = DistillConfig{0.0, {}, {}};
  return dispatch(cfg.precision, "student", student_spec(cfg, train.meta.landmarks), train, val, plain,
                  static_cast<const Checkpoint*>(nullptr), log_path);
}

TrainResult distill(const PreparedSet& train, const PreparedSet* val, const Checkpoint& teacher,
                    const TrainConfig& cfg, const std::string& log_path) {
  const NetworkSpec spec = student_spec(cfg, train.meta.landmarks);
  check_tap_geometry(spec, teacher.spec);
  cfg.validate();
  // With nothing to distil the teacher is never consulted, which keeps a
  // lambda=0 run identical to train_student.
  const Checkpoint* t = cfg.distill.active() ? &teacher : nullptr;
  return dispatch(cfg.precision, "distilled-student", spec, train, val, cfg, t, log_path);
}

EvalReport evaluate(const Checkpoint& ckpt, const PreparedSet& data, std::size_t batch_size) {
  if (data.samples.empty()) throw std::invalid_argument("evaluation set is empty");
  if (data.meta.landmarks != ckpt.spec.landmarks) {
    throw std::invalid_argument("dataset has " + std::to_string(data.meta.landmarks) + " landmarks, model predicts " +
                                std::to_string(ckpt.spec.landmarks));
  }
  std::vector<double> errors;
  if (ckpt.precision == Precision::F64) {
    auto net = network_from<double>(ckpt);
    errors = image_errors(net, data, batch_size);
  } else {
    auto net = network_from<float>(ckpt);
    errors = image_errors(net, data, batch_size);
  }
  EvalReport r = dataset_report(errors);
  r.landmarks = data.meta.landmarks;
  return r;
}

}  // namespace lmkd
