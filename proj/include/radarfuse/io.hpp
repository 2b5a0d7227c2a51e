#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "radarfuse/geometry.hpp"
#include "radarfuse/layers.hpp"
#include "radarfuse/sparse_depth.hpp"
#include "radarfuse/tensor.hpp"

namespace radarfuse::io {

using nn::Tensor;

// Error taxonomy mirrored by the CLI exit codes: FileWriteError -> 2,
// FormatError -> 3, ConfigError -> 4. Everything else -> 1.
struct FileWriteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --------------------------------------------------------------------------
// Sparse depth maps. "SDM1": magic, LE u32 width, LE u32 height, then
// width*height LE f32 row-major from the top row; <= 0 means no measurement.
// File length must be exactly 12 + 4*W*H bytes.
// --------------------------------------------------------------------------
void save_sdm1(const std::filesystem::path& path, const SparseDepthMap& map);
SparseDepthMap load_sdm1(const std::filesystem::path& path);

// "SDM2": same header, two f32 planes (x component then y component), used
// for optical flow. Tensors are (2,H,W).
void save_sdm2(const std::filesystem::path& path, const Tensor<float>& planes);
Tensor<float> load_sdm2(const std::filesystem::path& path);

// --------------------------------------------------------------------------
// Netpbm images. Grayscale tensors are (1,H,W) in [0,1] and map to binary
// 8-bit PGM (P5); RGB byte buffers map to binary PPM (P6).
// --------------------------------------------------------------------------
void save_pgm(const std::filesystem::path& path, const Tensor<float>& gray);
Tensor<float> load_pgm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& rgb);

// Depth visualization: linear in inverse depth over [min_depth, max_depth],
// so near surfaces render bright. Grayscale leaves missing pixels black; the
// RGB variant paints them pure red (255,0,0).
Tensor<float> render_depth_gray(const SparseDepthMap& map, double min_depth, double max_depth);
std::vector<std::uint8_t> render_depth_rgb(const SparseDepthMap& map, double min_depth,
                                           double max_depth);

// --------------------------------------------------------------------------
// Point files. LiDAR: "X Y Z" per line, radar: "X Z" per line, meters,
// camera frame. '#' starts a comment; Z must be positive on every line.
// --------------------------------------------------------------------------
void save_lidar_txt(const std::filesystem::path& path, const std::vector<CameraPoint3D>& points);
std::vector<CameraPoint3D> load_lidar_txt(const std::filesystem::path& path);
void save_radar_txt(const std::filesystem::path& path, const std::vector<RadarReturn>& returns);
std::vector<RadarReturn> load_radar_txt(const std::filesystem::path& path);

// --------------------------------------------------------------------------
// Checkpoints. "RFCK", LE u32 version, LE f32 d_max, LE u32 feature
// channels, then each parameter as LE u32 name length, name bytes, LE u32
// rank, LE u32 dims, LE f32 data, and a trailing CRC32 (IEEE) of every
// preceding byte. Parameters are stored as f32 regardless of compute type.
// --------------------------------------------------------------------------
struct CheckpointData {
  float d_max = 0.0f;
  int feature_channels = 0;
  std::vector<std::pair<std::string, Tensor<float>>> params;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, float d_max, int feature_channels,
                     std::span<const nn::ParamRef<T>> params);
CheckpointData load_checkpoint(const std::filesystem::path& path);
// Copies checkpoint tensors into live parameters, matching by name and shape
// in any order; every live parameter must be present exactly once.
template <typename T>
void restore_params(const CheckpointData& data, std::span<const nn::ParamRef<T>> params);

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes);

// --------------------------------------------------------------------------
// Run configuration: `key = value` text, '#' comments, unknown keys and
// out-of-range values rejected with ConfigError.
// --------------------------------------------------------------------------
struct RunConfig {
  double t_abs = 1.0;     // LiDAR match, absolute threshold [m]
  double t_rel = 0.01;    // LiDAR match, relative threshold
  int v = 60;             // vertical expansion height [px]
  double tau = 0.5;       // acceptance threshold on the evaluator probability
  double lr = 5e-5;
  int epochs = 12;
  std::uint64_t seed = 0;
  double d_max = 80.0;    // depth normalization for the evaluator input [m]
  bool invert_class_weights = false;
  bool negatives_include_uncovered = false;
  bool deterministic = true;
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

extern template void save_checkpoint<float>(const std::filesystem::path&, float, int,
                                            std::span<const nn::ParamRef<float>>);
extern template void save_checkpoint<double>(const std::filesystem::path&, float, int,
                                             std::span<const nn::ParamRef<double>>);
extern template void restore_params<float>(const CheckpointData&,
                                           std::span<const nn::ParamRef<float>>);
extern template void restore_params<double>(const CheckpointData&,
                                            std::span<const nn::ParamRef<double>>);

}  // namespace radarfuse::io
