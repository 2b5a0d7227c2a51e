#include "radarfuse/sparse_depth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radarfuse {

std::size_t SparseDepthMap::measured_count() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](float v) { return v > 0.0f; }));
}

RmBuildResult build_rm(const std::vector<RadarReturn>& returns, const CameraIntrinsics& cam,
                       int row_offset) {
  RmBuildResult result;
  result.map = SparseDepthMap(cam.width, cam.height);
  for (const RadarReturn& r : returns) {
    const auto px = project_radar_horizontal(r, cam, row_offset);
    if (!px) {
      ++result.dropped_returns;
      continue;
    }
    result.map.fuse_min(px->u, px->v, static_cast<float>(r.depth()));
  }
  return result;
}

SparseDepthMap build_lm(const std::vector<CameraPoint3D>& points, const CameraIntrinsics& cam) {
  SparseDepthMap lm(cam.width, cam.height);
  for (const CameraPoint3D& p : points) {
    const auto px = project_point(p, cam);
    if (!px) continue;
    lm.fuse_min(px->u, px->v, static_cast<float>(p.z));
  }
  return lm;
}

ErmBuildResult build_erm(const std::vector<RadarReturn>& returns, const CameraIntrinsics& cam,
                         int v, int row_offset) {
  if (v < 1) throw std::invalid_argument("build_erm: v must be >= 1");
  ErmBuildResult result;
  result.map = SparseDepthMap(cam.width, cam.height);
  for (std::size_t r = 0; r < returns.size(); ++r) {
    const auto px = project_radar_horizontal(returns[r], cam, row_offset);
    if (!px) {
      ++result.dropped_returns;
      continue;
    }
    const float depth = static_cast<float>(returns[r].depth());
    for (int k = 0; k < v; ++k) {
      const int row = px->v - k;  // upward expansion only
      if (row < 0) break;
      result.entries.push_back(ErmEntry{PixelCoord{px->u, row}, depth, static_cast<int>(r)});
      result.map.fuse_min(px->u, row, depth);
    }
  }
  return result;
}

PcrmResult select_pcrm(const std::vector<ErmEntry>& entries, const SparseDepthMap& lm,
                       const MatchThresholds& th, bool negatives_include_uncovered) {
  if (!th.valid()) throw std::invalid_argument("select_pcrm: invalid thresholds");
  PcrmResult result;
  result.pcrm = SparseDepthMap(lm.width(), lm.height());
  result.labels.per_entry.resize(entries.size(), EntryLabel::kUnlabeled);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const ErmEntry& entry = entries[e];
    if (!lm.in_bounds(entry.pixel.u, entry.pixel.v)) {
      throw std::invalid_argument("select_pcrm: entry pixel outside the LM grid");
    }
    const float d_l = lm.at(entry.pixel.u, entry.pixel.v);
    if (d_l <= 0.0f) {
      if (negatives_include_uncovered) {
        result.labels.per_entry[e] = EntryLabel::kNegative;
        result.labels.negatives.push_back(e);
      } else {
        result.labels.unlabeled.push_back(e);
      }
      continue;
    }
    const double diff = std::abs(static_cast<double>(d_l) - static_cast<double>(entry.depth));
    const bool matched = diff < th.t_abs && diff / d_l < th.t_rel;
    if (matched) {
      result.labels.per_entry[e] = EntryLabel::kPositive;
      result.labels.positives.push_back(e);
      result.pcrm.fuse_min(entry.pixel.u, entry.pixel.v, entry.depth);
    } else {
      result.labels.per_entry[e] = EntryLabel::kNegative;
      result.labels.negatives.push_back(e);
    }
  }
  return result;
}

}  // namespace radarfuse
