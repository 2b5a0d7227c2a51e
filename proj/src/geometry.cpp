#include "radarfuse/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace radarfuse {

int round_half_up(double value) { return static_cast<int>(std::floor(value + 0.5)); }

std::optional<PixelCoord> project_point(const CameraPoint3D& p, const CameraIntrinsics& cam) {
  if (!(p.z > 0.0)) return std::nullopt;
  const int u = round_half_up(cam.fx * p.x / p.z + cam.cx);
  const int v = round_half_up(cam.fy * p.y / p.z + cam.cy);
  if (u < 0 || u >= cam.width || v < 0 || v >= cam.height) return std::nullopt;
  return PixelCoord{u, v};
}

std::optional<PixelCoord> project_radar_horizontal(const RadarReturn& r, const CameraIntrinsics& cam,
                                                   int row_offset) {
  if (!(r.z > 0.0)) return std::nullopt;
  const int u = round_half_up(cam.fx * r.x / r.z + cam.cx);
  const int v = round_half_up(cam.cy) + row_offset;
  if (u < 0 || u >= cam.width || v < 0 || v >= cam.height) return std::nullopt;
  return PixelCoord{u, v};
}

int compute_expansion_pixels(const CameraIntrinsics& cam, double theta_deg) {
  if (!(theta_deg > 0.0 && theta_deg < 90.0)) {
    throw std::invalid_argument("compute_expansion_pixels: theta_deg must be in (0, 90)");
  }
  const double pixels = cam.fy * std::tan(theta_deg * M_PI / 180.0);
  const int v = static_cast<int>(std::ceil(pixels));
  return v < cam.height ? v : cam.height;
}

}  // namespace radarfuse
