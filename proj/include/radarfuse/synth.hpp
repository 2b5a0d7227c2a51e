#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "radarfuse/geometry.hpp"
#include "radarfuse/rng.hpp"
#include "radarfuse/sparse_depth.hpp"
#include "radarfuse/tensor.hpp"

namespace radarfuse::synth {

using nn::Tensor;

// Axis-aligned box in the camera frame (x right, y down, z forward).
struct Box {
  CameraPoint3D center;
  CameraPoint3D size;
  double albedo = 0.5;
};

struct Scene {
  CameraIntrinsics camera;
  double ground_y = 0.8;       // plane below the camera, y points down
  double ground_albedo = 0.5;
  std::vector<Box> boxes;
  CameraPoint3D ego_translation{0.1, 0.0, 0.5};  // next-frame camera motion
  std::uint64_t seed = 0;
  double max_depth = 80.0;     // render cutoff; beyond it pixels read as sky
};

// Throws std::invalid_argument when the camera is degenerate, a box leaves
// the [2, max_depth] depth band, or two box albedos sit closer than 0.05.
void validate_scene(const Scene& scene);

struct SensorNoise {
  double lidar_sigma = 0.02;         // [m]
  double radar_sigma = 0.1;          // range noise [m]
  double elevation_bound_deg = 20.0; // radar vertical uncertainty
  double clutter_rate = 2.0;         // Poisson mean of spurious returns

  bool valid() const {
    return lidar_sigma >= 0.0 && radar_sigma >= 0.0 && elevation_bound_deg >= 0.0 &&
           clutter_rate >= 0.0;
  }
};

struct RenderResult {
  SparseDepthMap depth;   // dense ground truth; sky stays unmeasured
  Tensor<float> image;    // (1,H,W), 8-bit quantized intensities in [0,1]
  Tensor<float> flow;     // (2,H,W), pixels; zero on sky
};

RenderResult render_scene(const Scene& scene);

struct LidarPattern {
  int row_step = 4;
  double dropout = 0.2;
};

SparseDepthMap sample_lidar(const SparseDepthMap& gt, const LidarPattern& pattern, double sigma,
                            Rng& rng);

// True 3D location behind each radar return. Clutter returns have no real
// surface; their recorded point sits on the horizontal plane (y = 0).
struct RadarTruth {
  CameraPoint3D point;
  bool clutter = false;
};

struct RadarSample {
  std::vector<RadarReturn> returns;
  std::vector<RadarTruth> truths;  // same order as returns
};

RadarSample sample_radar(const Scene& scene, const SensorNoise& noise, Rng& rng);

// Back-projects measured map pixels to 3D points (pixel centers).
std::vector<CameraPoint3D> lidar_points_from_map(const SparseDepthMap& lm,
                                                 const CameraIntrinsics& camera);

struct SceneBundle {
  Scene scene;
  RenderResult render;
  SparseDepthMap lm;
  RadarSample radar;
};

// Random desk-scale scene: 400x192 camera, a ground plane, and 4-10 boxes
// mixing three archetypes: tall grounded boxes whose radar return really
// lies at the horizon row, short grounded boxes whose return sits below it
// (upward expansion cannot reach the truth), and floating boxes within the
// radar's elevation uncertainty (expansion can recover the truth). The
// archetype mix is what separates RM, PCRM and EM quality.
Scene make_standard_scene(std::uint64_t scene_seed);

SceneBundle generate_scene(const Scene& scene, const SensorNoise& noise);

enum class Split { kTrain, kVal, kTest };

std::uint64_t derive_scene_seed(std::uint64_t master_seed, Split split, int index);

// Content digest over depth, image, flow and radar returns.
std::uint32_t scene_hash(const SceneBundle& bundle);

// On-disk scene layout: image.pgm, flow.sdm2, gt.sdm1, lm.sdm1, lidar.txt,
// radar.txt, meta.json.
void write_scene_dir(const std::filesystem::path& dir, const SceneBundle& bundle);

struct SceneMeta {
  CameraIntrinsics camera;
  std::uint64_t seed = 0;
  double ground_y = 0.8;
  CameraPoint3D ego_translation{};
  std::vector<RadarTruth> truths;
  std::uint32_t hash = 0;
};

struct LoadedScene {
  Tensor<float> image;
  Tensor<float> flow;
  SparseDepthMap gt;
  SparseDepthMap lm;
  std::vector<RadarReturn> radar;
  SceneMeta meta;
};

LoadedScene load_scene_dir(const std::filesystem::path& dir);

}  // namespace radarfuse::synth
