#include "lmkd/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace lmkd {

double image_nme(const LandmarkSet& pred, const LandmarkSet& gt, NormPair norm_pair) {
  if (pred.size() != gt.size() || gt.size() == 0) {
    throw std::invalid_argument("image_nme: prediction has " + std::to_string(pred.size()) +
                                " points, ground truth " + std::to_string(gt.size()));
  }
  if (norm_pair.first >= gt.size() || norm_pair.second >= gt.size()) {
    throw std::invalid_argument("image_nme: normalization pair out of range");
  }
  const auto& a = gt.points[norm_pair.first];
  const auto& b = gt.points[norm_pair.second];
  const double d = std::hypot(a.x - b.x, a.y - b.y);
  if (d < 1e-9) throw std::invalid_argument("image_nme: degenerate normalization distance");
  double sum = 0;
  for (std::size_t j = 0; j < gt.size(); ++j) {
    sum += std::hypot(pred.points[j].x - gt.points[j].x, pred.points[j].y - gt.points[j].y);
  }
  return sum / static_cast<double>(gt.size()) / d;
}

double ced_fraction(const std::vector<double>& errors, double threshold) {
  std::size_t count = 0;
  for (double e : errors) {
    if (e <= threshold) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(errors.size());
}

EvalReport dataset_report(const std::vector<double>& errors, double failure_threshold, double auc_threshold,
                          std::size_t steps) {
  if (errors.empty()) throw std::invalid_argument("dataset_report: no per-image errors");
  if (steps == 0 || !(auc_threshold > 0)) {
    throw std::invalid_argument("dataset_report: need steps >= 1 and a positive AUC threshold");
  }
  EvalReport r;
  r.errors = errors;
  r.images = errors.size();
  r.failure_threshold = failure_threshold;
  r.auc_threshold = auc_threshold;

  double sum = 0;
  std::size_t failures = 0;
  for (double e : errors) {
    if (!(e >= 0)) throw std::invalid_argument("dataset_report: errors must be non-negative");
    sum += e;
    if (e > failure_threshold) ++failures;
  }
  r.mean_error = sum / static_cast<double>(errors.size());
  r.failure_rate = static_cast<double>(failures) / static_cast<double>(errors.size());

  r.ced.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = auc_threshold * static_cast<double>(i) / static_cast<double>(steps);
    r.ced.push_back({t, ced_fraction(errors, t)});
  }
  double area = 0;
  for (std::size_t i = 1; i < r.ced.size(); ++i) {
    area += 0.5 * (r.ced[i].fraction + r.ced[i - 1].fraction) * (r.ced[i].threshold - r.ced[i - 1].threshold);
  }
  r.auc = area / auc_threshold;
  return r;
}

void emit_ced(const EvalReport& report, std::ostream& out) {
  char line[64];
  out << "threshold,fraction\n";
  for (const auto& p : report.ced) {
    std::snprintf(line, sizeof line, "%.6f,%.6f\n", p.threshold, p.fraction);
    out << line;
  }
}

void emit_ced(const EvalReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit_ced(report, f);
}

void write_summary(const EvalReport& report, std::ostream& out) {
  char buf[64];
  auto put = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << name << '=' << buf << '\n';
  };
  out << "images=" << report.images << '\n';
  out << "landmarks=" << report.landmarks << '\n';
  out << "normalization=" << report.normalization << '\n';
  put("nme", report.mean_error);
  put("failure_threshold", report.failure_threshold);
  put("failure_rate", report.failure_rate);
  put("auc_threshold", report.auc_threshold);
  put("auc", report.auc);
}

}  // namespace lmkd
