#pragma once

#include <cstddef>
#include <vector>

#include "radarfuse/geometry.hpp"

namespace radarfuse {

// W x H grid of depths in meters. Values <= 0 mean "no measurement"; a
// fresh map is all zeros. One type plays every role in the pipeline:
// RM, LM, ERM, PCRM and EM.
class SparseDepthMap {
 public:
  SparseDepthMap() = default;
  SparseDepthMap(int width, int height) : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, 0.0f) {}

  int width() const { return width_; }
  int height() const { return height_; }

  float at(int u, int v) const { return values_[index(u, v)]; }
  void set(int u, int v, float depth) { values_[index(u, v)] = depth; }
  bool measured(int u, int v) const { return at(u, v) > 0.0f; }

  // Writes depth and resolves collisions toward the nearer surface.
  void fuse_min(int u, int v, float depth) {
    float& cell = values_[index(u, v)];
    if (cell <= 0.0f || depth < cell) cell = depth;
  }

  std::size_t measured_count() const;
  bool in_bounds(int u, int v) const { return u >= 0 && u < width_ && v >= 0 && v < height_; }

  const std::vector<float>& values() const { return values_; }
  std::vector<float>& values() { return values_; }

  bool operator==(const SparseDepthMap&) const = default;

 private:
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

  int width_ = 0, height_ = 0;
  std::vector<float> values_;
};

// One expanded radar pixel. Entries made from the same return share a column
// and a depth; `source` is the index of that return.
struct ErmEntry {
  PixelCoord pixel;
  float depth = 0.0f;
  int source = -1;
  bool operator==(const ErmEntry&) const = default;
};

enum class EntryLabel { kPositive, kNegative, kUnlabeled };

// Disjoint partition of ERM entry indices produced by the LiDAR matching
// rule. positives/negatives drive the training loss; unlabeled entries have
// no LiDAR reference and carry no supervision.
struct LabelSets {
  std::vector<std::size_t> positives;   // X_p
  std::vector<std::size_t> negatives;   // X_n
  std::vector<std::size_t> unlabeled;

  std::vector<EntryLabel> per_entry;    // same info, indexed by entry
};

struct MatchThresholds {
  double t_abs = 1.0;   // T_a [m]
  double t_rel = 0.01;  // T_r

  bool valid() const { return t_abs > 0.0 && t_rel > 0.0 && t_rel < 1.0; }
};

struct RmBuildResult {
  SparseDepthMap map;
  int dropped_returns = 0;  // behind camera or out of frame
};

// RM: each projectable return writes its depth at its horizon-row pixel.
RmBuildResult build_rm(const std::vector<RadarReturn>& returns, const CameraIntrinsics& cam,
                       int row_offset = 0);

// LM from 3D LiDAR points; same projection and collision policy as RM.
SparseDepthMap build_lm(const std::vector<CameraPoint3D>& points, const CameraIntrinsics& cam);

struct ErmBuildResult {
  SparseDepthMap map;
  std::vector<ErmEntry> entries;
  int dropped_returns = 0;
};

// ERM: every projectable return is expanded upward over v rows (offsets
// 0 .. v-1, clipped at the top border). The map keeps the smallest covering
// depth; the entry list keeps every (return, offset) pixel.
ErmBuildResult build_erm(const std::vector<RadarReturn>& returns, const CameraIntrinsics& cam,
                         int v, int row_offset = 0);

struct PcrmResult {
  LabelSets labels;
  SparseDepthMap pcrm;
};

// Labels each ERM entry against LM: positive when the absolute difference
// is below t_abs AND the relative difference is below t_rel (both strict),
// negative when LM disagrees, unlabeled when LM has no value at the pixel.
// With negatives_include_uncovered, uncovered entries count as negatives
// instead. PCRM collects the positive entries.
PcrmResult select_pcrm(const std::vector<ErmEntry>& entries, const SparseDepthMap& lm,
                       const MatchThresholds& th, bool negatives_include_uncovered = false);

}  // namespace radarfuse
