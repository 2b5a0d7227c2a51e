#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "radarfuse/io.hpp"
#include "radarfuse/metrics.hpp"
#include "radarfuse/pipeline.hpp"
#include "radarfuse/rng.hpp"
#include "radarfuse/synth.hpp"

namespace fs = std::filesystem;
using namespace radarfuse;

namespace {

constexpr int kFeatureChannels = 32;
constexpr int kEvaluatorHidden = 64;

synth::SensorNoise noise_profile(const std::string& name) {
  synth::SensorNoise noise;
  if (name == "default") return noise;
  if (name == "clean") {
    noise.lidar_sigma = 0.005;
    noise.radar_sigma = 0.02;
    noise.clutter_rate = 0.0;
    return noise;
  }
  if (name == "noisy") {
    noise.lidar_sigma = 0.05;
    noise.radar_sigma = 0.2;
    noise.clutter_rate = 4.0;
    return noise;
  }
  throw io::ConfigError("unknown noise profile '" + name + "' (expected default, clean or noisy)");
}

synth::Split parse_split(const std::string& name) {
  if (name == "train") return synth::Split::kTrain;
  if (name == "val") return synth::Split::kVal;
  if (name == "test") return synth::Split::kTest;
  throw io::ConfigError("unknown split '" + name + "' (expected train, val or test)");
}

std::string scene_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", index);
  return buf;
}

std::vector<synth::LoadedScene> load_scene_set(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> scene_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
      scene_dirs.push_back(entry.path());
    }
  }
  std::sort(scene_dirs.begin(), scene_dirs.end());
  std::vector<synth::LoadedScene> scenes;
  scenes.reserve(scene_dirs.size());
  for (const auto& d : scene_dirs) scenes.push_back(synth::load_scene_dir(d));
  if (scenes.empty()) throw std::runtime_error("no scene directories under " + dir.string());
  return scenes;
}

int cmd_synth_gen(const fs::path& out, int scenes, std::uint64_t seed, const std::string& profile,
                  const std::string& split_name) {
  if (scenes < 1) throw io::ConfigError("--scenes must be at least 1");
  const auto noise = noise_profile(profile);
  const auto split = parse_split(split_name);
  std::error_code ec;
  fs::create_directories(out, ec);  // a failure shows up as a write error below
  for (int i = 0; i < scenes; ++i) {
    const auto scene = synth::make_standard_scene(synth::derive_scene_seed(seed, split, i));
    const auto bundle = synth::generate_scene(scene, noise);
    synth::write_scene_dir(out / scene_dir_name(i), bundle);
  }
  nlohmann::json summary;
  summary["out"] = out.string();
  summary["scenes"] = scenes;
  summary["split"] = split_name;
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_train(const fs::path& data, const fs::path& val_dir, const fs::path& config,
              const fs::path& out) {
  const auto cfg = io::load_run_config(config);
  const auto train_scenes = load_scene_set(data);
  std::vector<synth::LoadedScene> val_scenes;
  if (!val_dir.empty()) val_scenes = load_scene_set(val_dir);

  FusionModel<float> model(cfg.d_max, kFeatureChannels, kEvaluatorHidden);
  Rng rng(cfg.seed);
  model.init(rng);
  train_model(model, train_scenes, val_scenes, cfg, &std::cout);

  const auto params = model.params();
  io::save_checkpoint<float>(out, static_cast<float>(cfg.d_max), kFeatureChannels, params);
  nlohmann::json summary;
  summary["checkpoint"] = out.string();
  summary["trained_scenes"] = train_scenes.size();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_infer(const fs::path& ckpt, const fs::path& scene_dir, const fs::path& out,
              const fs::path& config, bool tau_given, double tau, const fs::path& prob_out) {
  io::RunConfig cfg;
  if (!config.empty()) cfg = io::load_run_config(config);
  if (tau_given) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw io::ConfigError("--tau must lie in [0, 1]");
    cfg.tau = tau;
  }

  const auto data = io::load_checkpoint(ckpt);
  FusionModel<float> model(data.d_max, data.feature_channels, kEvaluatorHidden);
  const auto params = model.params();
  io::restore_params<float>(data, params);

  const auto scene = synth::load_scene_dir(scene_dir);
  const auto result = infer_em(model, scene.image, scene.flow, scene.radar, scene.meta.camera, cfg);
  io::save_sdm1(out, result.em);
  if (!prob_out.empty()) io::save_sdm1(prob_out, result.probability);

  nlohmann::json summary;
  summary["em"] = out.string();
  summary["accepted_pixels"] = result.em.measured_count();
  summary["tau"] = cfg.tau;
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_complete(const fs::path& em, const fs::path& image, const fs::path& out) {
  const auto sparse = io::load_sdm1(em);
  const auto gray = io::load_pgm(image);
  const auto dense = complete_depth(sparse, gray);
  io::save_sdm1(out, dense);
  nlohmann::json summary;
  summary["out"] = out.string();
  summary["source_pixels"] = sparse.measured_count();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_eval(const fs::path& pred, const fs::path& lm, const fs::path& json_out) {
  const auto prediction = io::load_sdm1(pred);
  const auto reference = io::load_sdm1(lm);
  const auto report = evaluate_depth(prediction, reference);
  const auto text = metrics_to_json(report);
  std::cout << text << "\n";
  if (!json_out.empty()) {
    std::ofstream file(json_out, std::ios::trunc);
    if (!file) throw io::FileWriteError("cannot write " + json_out.string());
    file << text << "\n";
    if (!file) throw io::FileWriteError("write failed on " + json_out.string());
  }
  return 0;
}

int cmd_render(const fs::path& depth, const fs::path& out, double min_depth, double max_depth) {
  const auto map = io::load_sdm1(depth);
  const auto ext = out.extension().string();
  if (ext == ".ppm") {
    io::save_ppm(out, map.width(), map.height(), io::render_depth_rgb(map, min_depth, max_depth));
  } else if (ext == ".pgm") {
    io::save_pgm(out, io::render_depth_gray(map, min_depth, max_depth));
  } else {
    throw io::ConfigError("--out must end in .pgm or .ppm, got '" + out.string() + "'");
  }
  nlohmann::json summary;
  summary["out"] = out.string();
  std::cout << summary.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camera-radar depth fusion on synthetic scenes"};
  app.require_subcommand(1);

  std::string out, data, val_dir, config, ckpt, scene_dir, prob_out, pred, lm, image, json_out;
  std::string profile = "default", split = "train";
  int scenes = 1;
  std::uint64_t seed = 0;
  double tau = 0.5, min_depth = 1.0, max_depth = 80.0;

  auto* synth_gen = app.add_subcommand("synth-gen", "generate synthetic scene directories");
  synth_gen->add_option("--out", out, "output dataset directory")->required();
  synth_gen->add_option("--scenes", scenes, "number of scenes")->required();
  synth_gen->add_option("--seed", seed, "master seed");
  synth_gen->add_option("--noise-profile", profile, "default, clean or noisy");
  synth_gen->add_option("--split", split, "train, val or test (decorrelates scene seeds)");

  auto* train = app.add_subcommand("train", "train the consistency evaluator");
  train->add_option("--data", data, "directory of training scenes")->required();
  train->add_option("--val", val_dir, "directory of validation scenes");
  train->add_option("--config", config, "run configuration file")->required();
  train->add_option("--out", out, "checkpoint path")->required();

  auto* infer = app.add_subcommand("infer", "score radar candidates and write the estimated map");
  infer->add_option("--ckpt", ckpt, "trained checkpoint")->required();
  infer->add_option("--scene", scene_dir, "scene directory")->required();
  infer->add_option("--out", out, "output estimated map (SDM1)")->required();
  infer->add_option("--config", config, "run configuration file");
  auto* tau_opt = infer->add_option("--tau", tau, "acceptance threshold override");
  infer->add_option("--prob", prob_out, "also write accepted probabilities (SDM1)");

  auto* complete = app.add_subcommand("complete", "densify a sparse map with the guided filter");
  complete->add_option("--em", data, "sparse depth map (SDM1)")->required();
  complete->add_option("--image", image, "guidance image (PGM)")->required();
  complete->add_option("--out", out, "output dense map (SDM1)")->required();

  auto* eval = app.add_subcommand("eval", "depth errors on measured reference pixels");
  eval->add_option("--pred", pred, "predicted depth map (SDM1)")->required();
  eval->add_option("--lm", lm, "reference map (SDM1)")->required();
  eval->add_option("--json", json_out, "also write the report here");

  auto* render = app.add_subcommand("render", "visualize a depth map");
  render->add_option("--depth", data, "depth map (SDM1)")->required();
  render->add_option("--out", out, "output image (.pgm or .ppm)")->required();
  render->add_option("--min", min_depth, "near clip in meters");
  render->add_option("--max", max_depth, "far clip in meters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth_gen->parsed()) return cmd_synth_gen(out, scenes, seed, profile, split);
    if (train->parsed()) return cmd_train(data, val_dir, config, out);
    if (infer->parsed())
      return cmd_infer(ckpt, scene_dir, out, config, tau_opt->count() > 0, tau, prob_out);
    if (complete->parsed()) return cmd_complete(data, image, out);
    if (eval->parsed()) return cmd_eval(pred, lm, json_out);
    if (render->parsed()) return cmd_render(data, out, min_depth, max_depth);
  } catch (const io::FileWriteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const io::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
