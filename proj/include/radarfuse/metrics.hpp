#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radarfuse/sparse_depth.hpp"

namespace radarfuse {

// Depth errors evaluated only where the reference map has measurements.
struct MetricsReport {
  double mae = 0.0;   // mean |pred - ref| in meters
  double rel = 0.0;   // mean |pred - ref| / ref
  double rmse = 0.0;  // sqrt(mean (pred - ref)^2) in meters
  std::int64_t evaluated_pixel_count = 0;
};

// Computes MAE / REL / RMSE over the measured pixels of `reference`.
// `pred` must carry a value at every evaluated pixel (a dense completion
// always does; so does comparing a sparse map against itself).
MetricsReport evaluate_depth(const SparseDepthMap& pred, const SparseDepthMap& reference);

std::string metrics_to_json(const MetricsReport& report);

// Area under the ROC curve via the rank-sum statistic; ties contribute 1/2.
// Requires at least one positive and one negative label.
double binary_auc(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace radarfuse
