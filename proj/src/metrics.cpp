#include "radarfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace radarfuse {

MetricsReport evaluate_depth(const SparseDepthMap& pred, const SparseDepthMap& reference) {
  if (pred.width() != reference.width() || pred.height() != reference.height()) {
    throw std::invalid_argument("metrics: prediction and reference shapes differ");
  }
  double abs_sum = 0.0;
  double rel_sum = 0.0;
  double sq_sum = 0.0;
  std::int64_t count = 0;
  for (int v = 0; v < reference.height(); ++v) {
    for (int u = 0; u < reference.width(); ++u) {
      if (!reference.measured(u, v)) continue;
      if (!pred.measured(u, v)) {
        throw std::invalid_argument("metrics: prediction missing at evaluated pixel (" +
                                    std::to_string(u) + "," + std::to_string(v) + ")");
      }
      const double r = reference.at(u, v);
      const double diff = static_cast<double>(pred.at(u, v)) - r;
      abs_sum += std::abs(diff);
      rel_sum += std::abs(diff) / r;
      sq_sum += diff * diff;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("metrics: reference map has no measured pixels");
  MetricsReport report;
  report.mae = abs_sum / static_cast<double>(count);
  report.rel = rel_sum / static_cast<double>(count);
  report.rmse = std::sqrt(sq_sum / static_cast<double>(count));
  report.evaluated_pixel_count = count;
  return report;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["mae"] = report.mae;
  j["rel"] = report.rel;
  j["rmse"] = report.rmse;
  j["evaluated_pixel_count"] = report.evaluated_pixel_count;
  return j.dump();
}

double binary_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc: scores and labels differ in length");
  }
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) throw std::invalid_argument("auc: non-finite score");
    if (labels[i] == 1) {
      ++n_pos;
    } else if (labels[i] == 0) {
      ++n_neg;
    } else {
      throw std::invalid_argument("auc: labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc: need at least one positive and one negative label");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of average ranks over positives; ties within a score group share
  // the mean rank of the group, which credits tied pos/neg pairs with 1/2.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) pos_rank_sum += mean_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace radarfuse
