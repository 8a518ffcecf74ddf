#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lmkd/heatmap.hpp"

namespace lmkd {

/// Indices of the two points whose distance normalizes the error
/// (outer eye corners).
using NormPair = std::pair<std::size_t, std::size_t>;

/// Mean Euclidean point error divided by the ground-truth distance between
/// the norm_pair points. Throws when that distance is below 1e-9.
double image_nme(const LandmarkSet& pred, const LandmarkSet& gt, NormPair norm_pair);

struct CedPoint {
  double threshold = 0;
  double fraction = 0;
};

struct EvalReport {
  std::vector<double> errors;
  double mean_error = 0;
  double failure_threshold = 0.1;
  double failure_rate = 0;
  double auc_threshold = 0.1;
  double auc = 0;
  std::vector<CedPoint> ced;
  std::size_t images = 0;
  std::size_t landmarks = 0;
  std::string normalization = "inter-ocular";
};

/// Aggregates per-image errors. A failure is an error strictly above
/// failure_threshold. The CED is sampled at steps+1 uniform thresholds on
/// [0, auc_threshold]; AUC is its trapezoidal area divided by auc_threshold.
EvalReport dataset_report(const std::vector<double>& errors, double failure_threshold = 0.1,
                          double auc_threshold = 0.1, std::size_t steps = 1000);

/// Fraction of errors less than or equal to the threshold.
double ced_fraction(const std::vector<double>& errors, double threshold);

/// Writes "threshold,fraction" rows with six decimals.
void emit_ced(const EvalReport& report, std::ostream& out);
void emit_ced(const EvalReport& report, const std::string& path);

/// name=value summary lines.
void write_summary(const EvalReport& report, std::ostream& out);

}  // namespace lmkd
