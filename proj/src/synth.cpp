#include "radarfuse/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "radarfuse/io.hpp"

namespace radarfuse::synth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  CameraPoint3D normal{0.0, 0.0, 0.0};
  double albedo = 0.0;
};

// Ray r(t) = t * dir with dir.z == 1, so the hit parameter t IS the depth.
bool intersect_box(const Box& box, const CameraPoint3D& dir, Hit& hit) {
  const double lo[3] = {box.center.x - box.size.x / 2, box.center.y - box.size.y / 2,
                        box.center.z - box.size.z / 2};
  const double hi[3] = {box.center.x + box.size.x / 2, box.center.y + box.size.y / 2,
                        box.center.z + box.size.z / 2};
  const double d[3] = {dir.x, dir.y, dir.z};
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (0.0 < lo[a] || 0.0 > hi[a]) return false;
      continue;
    }
    double t0 = lo[a] / d[a];
    double t1 = hi[a] / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_enter) {
      t_enter = t0;
      enter_axis = a;
    }
    t_exit = std::min(t_exit, t1);
  }
  if (enter_axis < 0 || t_enter > t_exit || t_enter <= 1e-9 || t_enter >= hit.t) return false;
  hit.t = t_enter;
  hit.normal = {0.0, 0.0, 0.0};
  const double sign = d[enter_axis] > 0.0 ? -1.0 : 1.0;
  if (enter_axis == 0) hit.normal.x = sign;
  if (enter_axis == 1) hit.normal.y = sign;
  if (enter_axis == 2) hit.normal.z = sign;
  hit.albedo = box.albedo;
  return true;
}

double shade(const Hit& hit) {
  // Fixed directional light plus an ambient floor; Lambertian response.
  static const CameraPoint3D light = [] {
    CameraPoint3D l{0.4, -0.7, -0.6};
    const double n = std::sqrt(l.x * l.x + l.y * l.y + l.z * l.z);
    return CameraPoint3D{l.x / n, l.y / n, l.z / n};
  }();
  const double lambert =
      std::max(0.0, hit.normal.x * light.x + hit.normal.y * light.y + hit.normal.z * light.z);
  return hit.albedo * (0.35 + 0.65 * lambert);
}

float quantize8(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<float>(std::lround(clamped * 255.0) / 255.0);
}

void append_bits(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), bytes, bytes + n);
}

}  // namespace

void validate_scene(const Scene& scene) {
  if (!scene.camera.valid()) throw std::invalid_argument("scene: invalid camera");
  if (!(scene.ground_y > 0.0)) {
    throw std::invalid_argument("scene: ground plane must sit below the camera (ground_y > 0)");
  }
  if (!(scene.max_depth > 2.0)) throw std::invalid_argument("scene: max_depth too small");
  for (const auto& box : scene.boxes) {
    if (!(box.size.x > 0.0 && box.size.y > 0.0 && box.size.z > 0.0)) {
      throw std::invalid_argument("scene: box sizes must be positive");
    }
    const double z0 = box.center.z - box.size.z / 2;
    const double z1 = box.center.z + box.size.z / 2;
    if (z0 < 2.0 || z1 > scene.max_depth) {
      throw std::invalid_argument("scene: boxes must stay within [2, max_depth] meters of depth");
    }
    if (box.albedo < 0.0 || box.albedo > 1.0) {
      throw std::invalid_argument("scene: box albedo must lie in [0,1]");
    }
  }
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.boxes.size(); ++j) {
      if (std::abs(scene.boxes[i].albedo - scene.boxes[j].albedo) < 0.05 - 1e-12) {
        throw std::invalid_argument("scene: box albedos closer than 0.05 shade alike");
      }
    }
  }
}

RenderResult render_scene(const Scene& scene) {
  validate_scene(scene);
  const auto& cam = scene.camera;
  RenderResult result;
  result.depth = SparseDepthMap(cam.width, cam.height);
  result.image = Tensor<float>({1, cam.height, cam.width});
  result.flow = Tensor<float>({2, cam.height, cam.width});

  constexpr float kSkyIntensity = 0.06f;
  const bool camera_static = scene.ego_translation.x == 0.0 &&
                             scene.ego_translation.y == 0.0 &&
                             scene.ego_translation.z == 0.0;
  bool any_hit = false;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const CameraPoint3D dir{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
      Hit hit;
      if (dir.y > 1e-12) {
        const double t = scene.ground_y / dir.y;
        if (t > 1e-9 && t < hit.t) {
          hit.t = t;
          hit.normal = {0.0, -1.0, 0.0};
          hit.albedo = scene.ground_albedo;
        }
      }
      for (const auto& box : scene.boxes) intersect_box(box, dir, hit);

      if (!std::isfinite(hit.t) || hit.t > scene.max_depth) {
        result.image(0, v, u) = kSkyIntensity;
        continue;
      }
      any_hit = true;
      result.depth.set(u, v, static_cast<float>(hit.t));
      result.image(0, v, u) = quantize8(shade(hit));

      if (camera_static) continue;  // flow is exactly zero, not merely tiny
      const CameraPoint3D p{hit.t * dir.x, hit.t * dir.y, hit.t};
      const CameraPoint3D moved{p.x - scene.ego_translation.x, p.y - scene.ego_translation.y,
                                p.z - scene.ego_translation.z};
      if (moved.z > 0.1) {
        result.flow(0, v, u) = static_cast<float>(cam.fx * moved.x / moved.z + cam.cx - u);
        result.flow(1, v, u) = static_cast<float>(cam.fy * moved.y / moved.z + cam.cy - v);
      }
    }
  }
  if (!any_hit) throw std::invalid_argument("scene: no geometry inside the camera frustum");
  return result;
}

SparseDepthMap sample_lidar(const SparseDepthMap& gt, const LidarPattern& pattern, double sigma,
                            Rng& rng) {
  if (pattern.row_step < 1) throw std::invalid_argument("lidar pattern: row_step must be >= 1");
  if (pattern.dropout < 0.0 || pattern.dropout > 1.0) {
    throw std::invalid_argument("lidar pattern: dropout must be in [0,1]");
  }
  if (sigma < 0.0) throw std::invalid_argument("lidar pattern: sigma must be >= 0");
  SparseDepthMap lm(gt.width(), gt.height());
  for (int v = 0; v < gt.height(); v += pattern.row_step) {
    for (int u = 0; u < gt.width(); ++u) {
      if (!gt.measured(u, v)) continue;
      if (rng.uniform() < pattern.dropout) continue;
      double d = gt.at(u, v);
      if (sigma > 0.0) d = std::max(d + rng.normal(0.0, sigma), 0.01);
      lm.set(u, v, static_cast<float>(d));
    }
  }
  return lm;
}

RadarSample sample_radar(const Scene& scene, const SensorNoise& noise, Rng& rng) {
  if (!noise.valid()) throw std::invalid_argument("sensor noise: fields must be >= 0");
  RadarSample sample;
  for (const auto& box : scene.boxes) {
    const double lo[3] = {box.center.x - box.size.x / 2, box.center.y - box.size.y / 2,
                          box.center.z - box.size.z / 2};
    const double hi[3] = {box.center.x + box.size.x / 2, box.center.y + box.size.y / 2,
                          box.center.z + box.size.z / 2};
    const auto clamp_origin = [&](int axis) { return std::clamp(0.0, lo[axis], hi[axis]); };

    // Nearest point of every camera-facing face; faces sharing an edge with
    // the nearest point collapse to the same 3D location.
    std::vector<CameraPoint3D> candidates;
    candidates.push_back({clamp_origin(0), clamp_origin(1), lo[2]});              // front
    if (lo[0] > 0.0) candidates.push_back({lo[0], clamp_origin(1), lo[2]});       // left
    if (hi[0] < 0.0) candidates.push_back({hi[0], clamp_origin(1), lo[2]});       // right
    if (lo[1] > 0.0) candidates.push_back({clamp_origin(0), lo[1], lo[2]});       // top
    if (hi[1] < 0.0) candidates.push_back({clamp_origin(0), hi[1], lo[2]});       // bottom

    std::set<std::array<double, 3>> seen;
    for (const auto& p : candidates) {
      if (!seen.insert({p.x, p.y, p.z}).second) continue;
      double z = p.z;
      if (noise.radar_sigma > 0.0) z = std::max(z + rng.normal(0.0, noise.radar_sigma), 0.5);
      sample.returns.push_back({p.x, z});
      sample.truths.push_back({p, false});
    }
  }

  const int clutter = static_cast<int>(rng.poisson(noise.clutter_rate));
  for (int i = 0; i < clutter; ++i) {
    const double z = rng.uniform(5.0, std::max(6.0, scene.max_depth - 5.0));
    const double u = rng.uniform(0.0, static_cast<double>(scene.camera.width - 1));
    const double x = (u - scene.camera.cx) / scene.camera.fx * z;
    sample.returns.push_back({x, z});
    sample.truths.push_back({{x, 0.0, z}, true});
  }
  return sample;
}

std::vector<CameraPoint3D> lidar_points_from_map(const SparseDepthMap& lm,
                                                 const CameraIntrinsics& camera) {
  std::vector<CameraPoint3D> points;
  points.reserve(lm.measured_count());
  for (int v = 0; v < lm.height(); ++v) {
    for (int u = 0; u < lm.width(); ++u) {
      if (!lm.measured(u, v)) continue;
      const double d = lm.at(u, v);
      points.push_back({(u - camera.cx) / camera.fx * d, (v - camera.cy) / camera.fy * d, d});
    }
  }
  return points;
}

Scene make_standard_scene(std::uint64_t scene_seed) {
  Rng rng(scene_seed);
  Scene scene;
  scene.seed = scene_seed;
  scene.camera = CameraIntrinsics{164.8, 164.8, 200.0, 96.0, 400, 192};
  scene.ground_y = 0.8;
  scene.ground_albedo = 0.5;
  scene.ego_translation = {0.1, 0.0, 0.5};
  scene.max_depth = 80.0;

  const int count = 4 + static_cast<int>(rng.below(7));  // 4..10
  std::vector<double> albedos;
  for (int i = 0; i < count; ++i) albedos.push_back(0.15 + 0.07 * i);
  rng.shuffle(albedos);

  for (int i = 0; i < count; ++i) {
    const double z = rng.uniform(5.0, 70.0);
    const double half_fov_x = z * scene.camera.cx / scene.camera.fx;
    const double cx = rng.uniform(-0.7, 0.7) * half_fov_x;
    const double sx = rng.uniform(1.5, 6.0);
    const double sz = rng.uniform(1.0, 4.0);  // z >= 5 keeps the front face past 2 m

    double top = 0.0, bottom = 0.0;
    const double archetype = rng.uniform();
    if (archetype < 0.4) {
      // Tall grounded: spans the camera height, radar return truly at the
      // horizon row.
      top = -rng.uniform(0.3, 2.0);
      bottom = scene.ground_y;
    } else if (archetype < 0.6) {
      // Short grounded: top stays below the camera axis, so the return's
      // true row lies below the horizon, outside the upward expansion.
      top = rng.uniform(0.15, 0.5);
      bottom = scene.ground_y;
    } else {
      // Floating: bottom edge 5-16 degrees above the axis, inside the
      // radar's vertical uncertainty cone.
      bottom = -z * std::tan(rng.uniform(5.0, 16.0) * kDegToRad);
      top = bottom - rng.uniform(0.5, 2.5);
    }

    Box box;
    box.size = {sx, bottom - top, sz};
    box.center = {cx, (top + bottom) / 2.0, z};
    box.albedo = albedos[static_cast<std::size_t>(i)];
    scene.boxes.push_back(box);
  }
  validate_scene(scene);
  return scene;
}

SceneBundle generate_scene(const Scene& scene, const SensorNoise& noise) {
  SceneBundle bundle;
  bundle.scene = scene;
  bundle.render = render_scene(scene);
  Rng rng(scene.seed ^ 0xA5C39EDB2F718641ull);
  bundle.lm = sample_lidar(bundle.render.depth, LidarPattern{}, noise.lidar_sigma, rng);
  bundle.radar = sample_radar(scene, noise, rng);
  return bundle;
}

std::uint64_t derive_scene_seed(std::uint64_t master_seed, Split split, int index) {
  const auto split_id = static_cast<std::uint64_t>(split);
  Rng mixer(master_seed ^
            (0x9E3779B97F4A7C15ull * (split_id * 1000003ull + static_cast<std::uint64_t>(index) + 1ull)));
  return mixer.next_u64();
}

std::uint32_t scene_hash(const SceneBundle& bundle) {
  std::vector<std::uint8_t> bytes;
  const auto& depth = bundle.render.depth.values();
  append_bits(bytes, depth.data(), depth.size() * sizeof(float));
  append_bits(bytes, &bundle.render.image[0],
              static_cast<std::size_t>(bundle.render.image.numel()) * sizeof(float));
  append_bits(bytes, &bundle.render.flow[0],
              static_cast<std::size_t>(bundle.render.flow.numel()) * sizeof(float));
  for (const auto& r : bundle.radar.returns) {
    append_bits(bytes, &r.x, sizeof r.x);
    append_bits(bytes, &r.z, sizeof r.z);
  }
  return io::crc32_ieee(bytes);
}

void write_scene_dir(const std::filesystem::path& dir, const SceneBundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io::FileWriteError("cannot create directory " + dir.string());

  io::save_pgm(dir / "image.pgm", bundle.render.image);
  io::save_sdm2(dir / "flow.sdm2", bundle.render.flow);
  io::save_sdm1(dir / "gt.sdm1", bundle.render.depth);
  io::save_sdm1(dir / "lm.sdm1", bundle.lm);
  io::save_lidar_txt(dir / "lidar.txt", lidar_points_from_map(bundle.lm, bundle.scene.camera));
  io::save_radar_txt(dir / "radar.txt", bundle.radar.returns);

  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["seed"] = bundle.scene.seed;
  meta["ground_y"] = bundle.scene.ground_y;
  meta["camera"] = {{"fx", bundle.scene.camera.fx},   {"fy", bundle.scene.camera.fy},
                    {"cx", bundle.scene.camera.cx},   {"cy", bundle.scene.camera.cy},
                    {"width", bundle.scene.camera.width}, {"height", bundle.scene.camera.height}};
  meta["ego_translation"] = {bundle.scene.ego_translation.x, bundle.scene.ego_translation.y,
                             bundle.scene.ego_translation.z};
  auto truths = nlohmann::json::array();
  for (const auto& t : bundle.radar.truths) {
    truths.push_back({{"x", t.point.x}, {"y", t.point.y}, {"z", t.point.z},
                      {"clutter", t.clutter}});
  }
  meta["radar_truth"] = truths;
  meta["scene_hash"] = scene_hash(bundle);

  std::ofstream out(dir / "meta.json", std::ios::trunc);
  if (!out) throw io::FileWriteError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
  out.flush();
  if (!out) throw io::FileWriteError("write failed on " + (dir / "meta.json").string());
}

LoadedScene load_scene_dir(const std::filesystem::path& dir) {
  LoadedScene scene;
  scene.image = io::load_pgm(dir / "image.pgm");
  scene.flow = io::load_sdm2(dir / "flow.sdm2");
  scene.gt = io::load_sdm1(dir / "gt.sdm1");
  scene.lm = io::load_sdm1(dir / "lm.sdm1");
  scene.radar = io::load_radar_txt(dir / "radar.txt");

  std::ifstream in(dir / "meta.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    in >> meta;
    scene.meta.seed = meta.at("seed").get<std::uint64_t>();
    scene.meta.ground_y = meta.at("ground_y").get<double>();
    const auto& cam = meta.at("camera");
    scene.meta.camera = CameraIntrinsics{cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                                         cam.at("cx").get<double>(), cam.at("cy").get<double>(),
                                         cam.at("width").get<int>(), cam.at("height").get<int>()};
    const auto& ego = meta.at("ego_translation");
    scene.meta.ego_translation = {ego.at(0).get<double>(), ego.at(1).get<double>(),
                                  ego.at(2).get<double>()};
    for (const auto& t : meta.at("radar_truth")) {
      scene.meta.truths.push_back({{t.at("x").get<double>(), t.at("y").get<double>(),
                                    t.at("z").get<double>()},
                                   t.at("clutter").get<bool>()});
    }
    scene.meta.hash = meta.at("scene_hash").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError("malformed meta.json in " + dir.string() + ": " + e.what());
  }
  if (scene.meta.truths.size() != scene.radar.size()) {
    throw io::FormatError("radar truth record disagrees with radar.txt in " + dir.string());
  }
  return scene;
}

}  // namespace radarfuse::synth
