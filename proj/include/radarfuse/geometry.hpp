#pragma once

#include <optional>

namespace radarfuse {

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;  // focal lengths [px]
  double cx = 0.0, cy = 0.0;  // principal point [px]
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width &&
           cy >= 0.0 && cy < height;
  }
};

// Camera frame: x right, y down, z forward. Depth is the z coordinate.
struct CameraPoint3D {
  double x = 0.0, y = 0.0, z = 0.0;
};

// A radar return carries no elevation: only the lateral offset and the
// range along the horizontal plane survive. depth() is what every depth
// map stores for this return.
struct RadarReturn {
  double x = 0.0;
  double z = 0.0;
  double depth() const { return z; }
};

struct PixelCoord {
  int u = 0;
  int v = 0;
  bool operator==(const PixelCoord&) const = default;
};

// Shared pixelization rule: nearest integer, ties toward +inf. Used by every
// projection so RM/LM/ERM land on consistent pixels.
int round_half_up(double value);

// Pinhole projection to integer pixels; nullopt when behind the camera or
// outside the image.
std::optional<PixelCoord> project_point(const CameraPoint3D& p, const CameraIntrinsics& cam);

// Horizontal-plane projection of a radar return: the column follows from
// x/z, the row is the camera's horizon row (round(cy) + row_offset).
std::optional<PixelCoord> project_radar_horizontal(const RadarReturn& r, const CameraIntrinsics& cam,
                                                   int row_offset = 0);

// Pixel count V covering a vertical uncertainty of theta_deg under the
// camera's fy, capped at the image height. Callers with a calibrated device
// override V directly instead.
int compute_expansion_pixels(const CameraIntrinsics& cam, double theta_deg);

}  // namespace radarfuse
