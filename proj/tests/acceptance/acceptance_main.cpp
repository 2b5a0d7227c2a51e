// Acceptance gate: one PASS/FAIL line per numbered criterion, indented lines
// carry the measurements backing the verdict. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "radarfuse/evaluator.hpp"
#include "radarfuse/feature_extractor.hpp"
#include "radarfuse/gradcheck.hpp"
#include "radarfuse/io.hpp"
#include "radarfuse/layers.hpp"
#include "radarfuse/metrics.hpp"
#include "radarfuse/pipeline.hpp"
#include "radarfuse/rng.hpp"
#include "radarfuse/sparse_depth.hpp"
#include "radarfuse/synth.hpp"

using namespace radarfuse;
namespace fs = std::filesystem;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void note(const char* fmt, ...) {
  std::printf("       ");
  va_list args;
  va_start(args, fmt);
  std::vprintf(fmt, args);
  va_end(args);
  std::printf("\n");
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// Shared dataset and training artifacts (generated / trained on first use).
// ---------------------------------------------------------------------------

synth::LoadedScene to_loaded(const synth::SceneBundle& bundle) {
  synth::LoadedScene s;
  s.image = bundle.render.image;
  s.flow = bundle.render.flow;
  s.gt = bundle.render.depth;
  s.lm = bundle.lm;
  s.radar = bundle.radar.returns;
  s.meta.camera = bundle.scene.camera;
  s.meta.seed = bundle.scene.seed;
  s.meta.ground_y = bundle.scene.ground_y;
  s.meta.ego_translation = bundle.scene.ego_translation;
  s.meta.truths = bundle.radar.truths;
  return s;
}

std::vector<synth::LoadedScene> generate_split(std::uint64_t seed, synth::Split split, int count) {
  std::vector<synth::LoadedScene> out;
  out.reserve(count);
  const synth::SensorNoise noise;
  for (int i = 0; i < count; ++i) {
    const auto scene = synth::make_standard_scene(synth::derive_scene_seed(seed, split, i));
    out.push_back(to_loaded(synth::generate_scene(scene, noise)));
  }
  return out;
}

struct SettingResult {
  bool invert = false;
  std::unique_ptr<FusionModel<float>> model;
  double train_seconds = 0.0;
  double first_loss = 0.0, last_loss = 0.0;
  double mae_rm = -1.0, mae_pcrm = -1.0, mae_em = -1.0;
  bool ordered = false;
  double test_auc = -1.0;
};

struct Experiment {
  io::RunConfig cfg;
  std::vector<synth::LoadedScene> train, val, test;
  SettingResult printed, inverted;
  bool ready = false;

  void ensure_dataset() {
    if (!train.empty()) return;
    const auto t0 = std::chrono::steady_clock::now();
    cfg.seed = 0;
    cfg.lr = 1e-3;
    cfg.epochs = 40;
    train = generate_split(0, synth::Split::kTrain, 24);
    val = generate_split(0, synth::Split::kVal, 6);
    test = generate_split(0, synth::Split::kTest, 10);
    note("dataset: 24 train / 6 val / 10 test scenes, 400x192, in %.1fs",
         seconds_since(t0));
  }
};

Experiment experiment;

// Pooled mean absolute error across scenes (every reference pixel weighs
// the same regardless of which scene it came from).  A sparse map with no
// measured pixels cannot be completed; score it as infinitely bad instead
// of aborting the criterion.
struct ErrorPool {
  double abs_sum = 0.0;
  std::int64_t count = 0;
  bool empty_input = false;

  void add(const SparseDepthMap& sparse, const Tensor<float>& image, const SparseDepthMap& ref) {
    if (sparse.measured_count() == 0) {
      empty_input = true;
      return;
    }
    const auto report = evaluate_depth(complete_depth(sparse, image), ref);
    abs_sum += report.mae * static_cast<double>(report.evaluated_pixel_count);
    count += report.evaluated_pixel_count;
  }
  double mae() const {
    if (empty_input || count == 0) return std::numeric_limits<double>::infinity();
    return abs_sum / static_cast<double>(count);
  }
};

void train_setting(SettingResult& result, bool invert) {
  auto cfg = experiment.cfg;
  cfg.invert_class_weights = invert;
  result.invert = invert;
  result.model = std::make_unique<FusionModel<float>>(cfg.d_max, 32, 64);
  Rng rng(cfg.seed);
  result.model->init(rng);

  const auto t0 = std::chrono::steady_clock::now();
  const auto run = train_model(*result.model, experiment.train, experiment.val, cfg, nullptr);
  result.train_seconds = seconds_since(t0);
  result.first_loss = run.curve.front().mean_loss;
  result.last_loss = run.curve.back().mean_loss;
  const auto& final_auc = run.curve.back().val_auc;
  note("setting invert=%d: %d epochs in %.0fs, loss %.3f -> %.3f, val auc %s", invert ? 1 : 0,
       cfg.epochs, result.train_seconds, result.first_loss, result.last_loss,
       final_auc ? std::to_string(*final_auc).c_str() : "n/a");
}

void evaluate_setting(SettingResult& result) {
  auto cfg = experiment.cfg;
  cfg.invert_class_weights = result.invert;
  ErrorPool rm_pool, pcrm_pool, em_pool;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& scene : experiment.test) {
    const auto& cam = scene.meta.camera;
    const auto rm = build_rm(scene.radar, cam);
    const auto batch = build_entry_batch(scene.radar, cam, scene.lm, cfg);
    const auto em = infer_em(*result.model, scene.image, scene.flow, scene.radar, cam, cfg);

    rm_pool.add(rm.map, scene.image, scene.lm);
    pcrm_pool.add(batch.pcrm, scene.image, scene.lm);
    em_pool.add(em.em, scene.image, scene.lm);

    const Tensor<float> packed = pack_model_input<float>(scene.image, scene.flow);
    const Tensor<float> features = result.model->extractor.forward(packed, false);
    const Tensor<float> rows =
        gather_entry_rows(features, batch.entries, batch.labeled, result.model->d_max);
    const Tensor<float> probs = result.model->evaluator.forward(rows);
    for (std::size_t i = 0; i < batch.labeled.size(); ++i) {
      scores.push_back(static_cast<double>(probs[static_cast<std::int64_t>(i)]));
      labels.push_back(batch.targets[i] ? 1 : 0);
    }
  }
  result.mae_rm = rm_pool.mae();
  result.mae_pcrm = pcrm_pool.mae();
  result.mae_em = em_pool.mae();
  result.ordered = result.mae_pcrm > 0.0 && result.mae_em >= 1.05 * result.mae_pcrm &&
                   result.mae_rm >= 1.05 * result.mae_em;
  result.test_auc = binary_auc(scores, labels);
  note("setting invert=%d: completed-map MAE pcrm %.3f / em %.3f / rm %.3f, test auc %.3f",
       result.invert ? 1 : 0, result.mae_pcrm, result.mae_em, result.mae_rm, result.test_auc);
}

void ensure_experiment() {
  if (experiment.ready) return;
  experiment.ensure_dataset();
  train_setting(experiment.printed, false);
  evaluate_setting(experiment.printed);
  train_setting(experiment.inverted, true);
  evaluate_setting(experiment.inverted);
  experiment.ready = true;
}

// ---------------------------------------------------------------------------
// Criterion 1: finite-difference gradient checks.
// ---------------------------------------------------------------------------

template <typename T>
double dot_all(const nn::Tensor<T>& p, const nn::Tensor<T>& x) {
  double sum = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) sum += static_cast<double>(p[i]) * x[i];
  return sum;
}

template <typename T>
void fill_uniform(nn::Tensor<T>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
}

// Central differences over every element of every listed tensor against the
// provided analytic gradients; relative error |a-n| / max(1,|a|,|n|).
template <typename T>
double fd_max_rel_err(const std::vector<nn::Tensor<T>*>& inputs,
                      const std::function<double()>& loss,
                      const std::vector<nn::Tensor<T>>& analytic, double h) {
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    nn::Tensor<T>& t = *inputs[k];
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      const T orig = t[i];
      t[i] = static_cast<T>(orig + h);
      const double up = loss();
      t[i] = static_cast<T>(orig - h);
      const double down = loss();
      t[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

template <typename T>
double check_conv(Rng& rng, double h) {
  const int ic = 1 + static_cast<int>(rng.below(3));
  const int oc = 1 + static_cast<int>(rng.below(3));
  const int k = rng.below(2) == 0 ? 1 : 3;
  const int stride = 1 + static_cast<int>(rng.below(2));
  const int pad = k == 3 ? static_cast<int>(rng.below(2)) : 0;
  const int hh = k + 1 + static_cast<int>(rng.below(4));
  const int ww = k + 1 + static_cast<int>(rng.below(4));
  nn::Tensor<T> x({ic, hh, ww}), w({oc, ic, k, k}), b({oc});
  fill_uniform(x, rng);
  fill_uniform(w, rng);
  fill_uniform(b, rng);
  nn::Tensor<T> probe(nn::conv2d_forward(x, w, b, stride, pad).shape());
  fill_uniform(probe, rng);
  const auto loss = [&]() { return dot_all(probe, nn::conv2d_forward(x, w, b, stride, pad)); };
  const auto grads = nn::conv2d_backward(x, w, probe, stride, pad);
  return fd_max_rel_err<T>({&x, &w, &b}, loss, {grads.input, grads.weight, grads.bias}, h);
}

template <typename T>
double check_batchnorm(Rng& rng, bool training, double h) {
  const int c = 1 + static_cast<int>(rng.below(4));
  const int hh = 2 + static_cast<int>(rng.below(4));
  const int ww = 2 + static_cast<int>(rng.below(4));
  nn::Tensor<T> x({c, hh, ww}), gamma({c}), beta({c}), rm({c}), rv({c}), probe({c, hh, ww});
  fill_uniform(x, rng);
  fill_uniform(gamma, rng, 0.5, 1.5);
  fill_uniform(beta, rng);
  fill_uniform(rm, rng, -0.5, 0.5);
  fill_uniform(rv, rng, 0.5, 1.5);
  fill_uniform(probe, rng);
  const auto loss = [&]() {
    auto rm_copy = rm;  // keep the captured running statistics fixed
    auto rv_copy = rv;
    nn::BatchNormCache cache;
    return dot_all(probe,
                   nn::batchnorm_forward(x, gamma, beta, rm_copy, rv_copy, training, cache));
  };
  auto rm_copy = rm;
  auto rv_copy = rv;
  nn::BatchNormCache cache;
  nn::batchnorm_forward(x, gamma, beta, rm_copy, rv_copy, training, cache);
  const auto grads = nn::batchnorm_backward(x, gamma, probe, cache, training);
  return fd_max_rel_err<T>({&x, &gamma, &beta}, loss, {grads.input, grads.gamma, grads.beta}, h);
}

template <typename T>
double check_linear(Rng& rng, double h) {
  const int n = 1 + static_cast<int>(rng.below(5));
  const int fi = 1 + static_cast<int>(rng.below(6));
  const int fo = 1 + static_cast<int>(rng.below(6));
  nn::Tensor<T> x({n, fi}), w({fo, fi}), b({fo}), probe({n, fo});
  fill_uniform(x, rng);
  fill_uniform(w, rng);
  fill_uniform(b, rng);
  fill_uniform(probe, rng);
  const auto loss = [&]() { return dot_all(probe, nn::linear_forward(x, w, b)); };
  const auto grads = nn::linear_backward(x, w, probe);
  return fd_max_rel_err<T>({&x, &w, &b}, loss, {grads.input, grads.weight, grads.bias}, h);
}

template <typename T>
double check_relu(Rng& rng, double h) {
  const int n = 8 + static_cast<int>(rng.below(24));
  nn::Tensor<T> x({n}), probe({n});
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    double v = rng.uniform(-1.0, 1.0);
    while (std::abs(v) < 16.0 * h) v = rng.uniform(-1.0, 1.0);  // stay off the corner
    x[i] = static_cast<T>(v);
  }
  fill_uniform(probe, rng);
  const auto loss = [&]() { return dot_all(probe, nn::relu_forward(x)); };
  const auto analytic = nn::relu_backward(x, probe);
  return fd_max_rel_err<T>({&x}, loss, {analytic}, h);
}

template <typename T>
double check_maxpool(Rng& rng, double h) {
  const int c = 1 + static_cast<int>(rng.below(3));
  const int hh = 2 * (1 + static_cast<int>(rng.below(3)));
  const int ww = 2 * (1 + static_cast<int>(rng.below(3)));
  nn::Tensor<T> x({c, hh, ww});
  // distinct window entries keep the argmax stable under the perturbation
  for (bool clean = false; !clean;) {
    fill_uniform(x, rng);
    clean = true;
    for (int ch = 0; ch < c && clean; ++ch) {
      for (int y = 0; y < hh && clean; y += 2) {
        for (int xx = 0; xx < ww && clean; xx += 2) {
          const T v[4] = {x(ch, y, xx), x(ch, y, xx + 1), x(ch, y + 1, xx), x(ch, y + 1, xx + 1)};
          for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
              if (std::abs(static_cast<double>(v[a]) - v[b]) < 16.0 * h) clean = false;
        }
      }
    }
  }
  std::vector<int> argmax;
  nn::Tensor<T> probe(nn::maxpool2_forward(x, argmax).shape());
  fill_uniform(probe, rng);
  const auto loss = [&]() {
    std::vector<int> am;
    return dot_all(probe, nn::maxpool2_forward(x, am));
  };
  const auto analytic = nn::maxpool2_backward(x.shape(), argmax, probe);
  return fd_max_rel_err<T>({&x}, loss, {analytic}, h);
}

template <typename T>
double check_upsample(Rng& rng, double h) {
  const int c = 1 + static_cast<int>(rng.below(3));
  const int hh = 1 + static_cast<int>(rng.below(4));
  const int ww = 1 + static_cast<int>(rng.below(4));
  nn::Tensor<T> x({c, hh, ww}), probe({c, 2 * hh, 2 * ww});
  fill_uniform(x, rng);
  fill_uniform(probe, rng);
  const auto loss = [&]() { return dot_all(probe, nn::upsample_nearest2_forward(x)); };
  const auto analytic = nn::upsample_nearest2_backward(probe);
  return fd_max_rel_err<T>({&x}, loss, {analytic}, h);
}

template <typename T>
double check_sigmoid(Rng& rng, double h) {
  const int n = 4 + static_cast<int>(rng.below(8));
  const int f = 1 + static_cast<int>(rng.below(3));
  nn::Tensor<T> x({n, f}), probe({n, f});
  fill_uniform(x, rng, -3.0, 3.0);
  fill_uniform(probe, rng);
  const auto loss = [&]() { return dot_all(probe, nn::sigmoid_forward(x)); };
  const auto y = nn::sigmoid_forward(x);
  const auto analytic = nn::sigmoid_backward(y, probe);
  return fd_max_rel_err<T>({&x}, loss, {analytic}, h);
}

// Full image -> features -> gathered rows -> scorer -> loss. The forward pass
// is rebuilt here from the public kernels so every ReLU input and pool argmax
// is observable; the rebuilt pass is required to agree bitwise with the
// production pass at the base point. Probes whose perturbation flips an
// activation sign or argmax sit on a kink where a central difference is
// meaningless; they are excluded and counted.
template <typename T>
struct CompositionProbe {
  FusionModel<T> model{80.0, 6, 8};
  nn::Tensor<T> packed;
  std::vector<ErmEntry> entries;
  std::vector<std::size_t> idx;
  std::vector<std::uint8_t> targets;
  std::vector<double> weights;
  std::map<std::string, nn::Tensor<T>*> value_of;
  std::map<std::string, nn::Tensor<T>*> grad_of;

  struct Pass {
    double loss = 0.0;
    nn::Tensor<T> features, probs;
    std::vector<std::uint8_t> signs;
    std::vector<int> argmax1, argmax2;

    bool same_kink_pattern(const Pass& o) const {
      return signs == o.signs && argmax1 == o.argmax1 && argmax2 == o.argmax2;
    }
  };

  CompositionProbe(std::uint64_t seed, int entry_count) {
    Rng rng(seed);
    model.init(rng);
    const int width = 16, height = 8;
    nn::Tensor<float> image({1, height, width}), flow({2, height, width});
    for (std::int64_t i = 0; i < image.numel(); ++i)
      image[i] = static_cast<float>(rng.uniform(0.0, 1.0));
    for (std::int64_t i = 0; i < flow.numel(); ++i)
      flow[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
    packed = pack_model_input<T>(image, flow);
    for (int e = 0; e < entry_count; ++e) {
      entries.push_back({{static_cast<int>(rng.below(width)), static_cast<int>(rng.below(height))},
                         static_cast<float>(rng.uniform(2.0, 75.0)), e});
    }
    idx.resize(entries.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    targets.resize(entries.size());
    for (auto& t : targets) t = rng.below(2) == 0 ? 0 : 1;
    targets[0] = 1;
    targets[1] = 0;
    std::size_t pos = 0;
    for (const auto t : targets) pos += t;
    const auto cw = class_weights(pos, targets.size() - pos, false);
    weights.resize(targets.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
      weights[i] = targets[i] ? cw.positive : cw.negative;
    for (const auto& p : model.params()) {
      value_of[p.name] = p.value;
      if (p.grad) grad_of[p.name] = p.grad;
    }
  }

  Pass forward() {
    Pass r;
    const auto P = [&](const std::string& n) -> nn::Tensor<T>& { return *value_of.at(n); };
    const auto conv = [&](const nn::Tensor<T>& x, const std::string& n, int pad) {
      return nn::conv2d_forward(x, P(n + ".weight"), P(n + ".bias"), 1, pad);
    };
    const auto bn = [&](const nn::Tensor<T>& x, const std::string& n) {
      auto rm = P(n + ".running_mean");  // local copies; training mode ignores them
      auto rv = P(n + ".running_var");
      nn::BatchNormCache cache;
      return nn::batchnorm_forward(x, P(n + ".gamma"), P(n + ".beta"), rm, rv, true, cache);
    };
    const auto act = [&](const nn::Tensor<T>& t) {
      for (std::int64_t i = 0; i < t.numel(); ++i) r.signs.push_back(t[i] > T(0) ? 1 : 0);
      return nn::relu_forward(t);
    };

    nn::Tensor<T> t = act(bn(conv(packed, "fx.stem", 1), "fx.stem_bn"));
    t = act(bn(conv(t, "fx.down1a", 1), "fx.down1a_bn"));
    t = act(bn(conv(t, "fx.down1b", 1), "fx.down1b_bn"));
    t = nn::maxpool2_forward(t, r.argmax1);
    t = act(bn(conv(t, "fx.down2a", 1), "fx.down2a_bn"));
    t = act(bn(conv(t, "fx.down2b", 1), "fx.down2b_bn"));
    t = nn::maxpool2_forward(t, r.argmax2);
    t = act(bn(conv(t, "fx.mid", 1), "fx.mid_bn"));
    t = act(bn(conv(nn::upsample_nearest2_forward(t), "fx.up1", 1), "fx.up1_bn"));
    t = act(bn(conv(nn::upsample_nearest2_forward(t), "fx.up2", 1), "fx.up2_bn"));
    r.features = conv(t, "fx.head", 0);

    const auto rows = gather_entry_rows(r.features, entries, idx, model.d_max);
    const auto z1 = nn::linear_forward(rows, P("ev.fc1.weight"), P("ev.fc1.bias"));
    const auto z2 = nn::linear_forward(act(z1), P("ev.fc2.weight"), P("ev.fc2.bias"));
    r.probs = nn::sigmoid_forward(nn::linear_forward(act(z2), P("ev.fc3.weight"), P("ev.fc3.bias")));
    r.loss = weighted_bce_loss(r.probs, targets, weights).loss;
    return r;
  }

  // Production forward/backward at the base point; returns the loss and
  // leaves the analytic gradients in the model.
  double production_pass(nn::Tensor<T>* features_out, nn::Tensor<T>* probs_out) {
    auto features = model.extractor.forward(packed, true);
    auto rows = gather_entry_rows(features, entries, idx, model.d_max);
    auto probs = model.evaluator.forward(rows);
    auto bce = weighted_bce_loss(probs, targets, weights);
    model.zero_grads();
    auto row_grads = model.evaluator.backward_from_logits(bce.grad_logits);
    auto feature_grads = nn::Tensor<T>::zeros(features.shape());
    scatter_entry_row_grads(row_grads, entries, idx, feature_grads);
    model.extractor.backward(feature_grads);
    if (features_out) *features_out = std::move(features);
    if (probs_out) *probs_out = std::move(probs);
    return bce.loss;
  }
};

struct CompositionReport {
  double max_rel_err = 0.0;
  int probed = 0;
  int excluded = 0;
  bool mirror_matches = false;
};

template <typename T>
CompositionReport check_composition(std::uint64_t seed, double h, int entry_count) {
  CompositionProbe<T> probe(seed, entry_count);
  CompositionReport report;

  nn::Tensor<T> features, probs;
  const double base_loss = probe.production_pass(&features, &probs);
  const auto base = probe.forward();
  report.mirror_matches =
      base.features == features && base.probs == probs && base.loss == base_loss;
  if (!report.mirror_matches) return report;

  std::map<std::string, nn::Tensor<T>> analytic;
  std::vector<nn::ParamRef<T>> subset;
  for (const auto& p : probe.model.params()) {
    if (!p.trainable) continue;
    if (p.value->numel() <= 96 || p.name == "fx.stem.weight") {
      subset.push_back(p);
      analytic.emplace(p.name, *p.grad);
    }
  }

  for (const auto& p : subset) {
    nn::Tensor<T>& value = *p.value;
    const nn::Tensor<T>& grad = analytic.at(p.name);
    for (std::int64_t i = 0; i < value.numel(); ++i) {
      const T orig = value[i];
      value[i] = static_cast<T>(orig + h);
      const auto up = probe.forward();
      value[i] = static_cast<T>(orig - h);
      const auto down = probe.forward();
      value[i] = orig;
      if (!up.same_kink_pattern(base) || !down.same_kink_pattern(base)) {
        ++report.excluded;
        continue;
      }
      ++report.probed;
      const double numeric = (up.loss - down.loss) / (2.0 * h);
      const double a = grad[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      report.max_rel_err = std::max(report.max_rel_err, err);
    }
  }
  return report;
}

// 32-bit gradients compared element for element against the 64-bit production
// gradients at the same parameter values and inputs. The 64-bit gradients are
// finite-difference verified above, so agreement transfers that verification
// to every 32-bit element, including the ones FD cannot probe at kinks. Only
// valid when both precisions take identical ReLU/argmax branches, which the
// instrumented passes confirm first; returns nullopt when they differ.
std::optional<double> cross_precision_grad_gap(std::uint64_t seed, int entry_count) {
  CompositionProbe<float> pf(seed, entry_count);
  CompositionProbe<double> pd(seed, entry_count);
  for (const auto& [name, src] : pf.value_of) {
    nn::Tensor<double>& dst = *pd.value_of.at(name);
    for (std::int64_t i = 0; i < src->numel(); ++i) dst[i] = static_cast<double>((*src)[i]);
  }
  const auto trace_f = pf.forward();
  const auto trace_d = pd.forward();
  if (trace_f.signs != trace_d.signs || trace_f.argmax1 != trace_d.argmax1 ||
      trace_f.argmax2 != trace_d.argmax2) {
    return std::nullopt;
  }
  pf.production_pass(nullptr, nullptr);
  pd.production_pass(nullptr, nullptr);
  double worst = 0.0;
  for (const auto& [name, gf] : pf.grad_of) {
    const nn::Tensor<double>& gd = *pd.grad_of.at(name);
    for (std::int64_t i = 0; i < gf->numel(); ++i) {
      const double a = (*gf)[i];
      const double b = gd[i];
      worst = std::max(worst, std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
    }
  }
  return worst;
}

bool criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  int checks = 0;
  double worst64 = 0.0, worst32 = 0.0;

  const auto family = [&](const char* name, int repeats, double tol, double& worst,
                          const std::function<double()>& one) {
    double fam = 0.0;
    for (int i = 0; i < repeats; ++i, ++checks) fam = std::max(fam, one());
    worst = std::max(worst, fam);
    if (fam >= tol) note("family %s: max err %.2e (tol %.0e)", name, fam, tol);
  };

  family("conv64", 30, 1e-6, worst64, [&] { return check_conv<double>(rng, 1e-5); });
  family("bn64-train", 10, 1e-6, worst64, [&] { return check_batchnorm<double>(rng, true, 1e-5); });
  family("bn64-eval", 10, 1e-6, worst64, [&] { return check_batchnorm<double>(rng, false, 1e-5); });
  family("linear64", 15, 1e-6, worst64, [&] { return check_linear<double>(rng, 1e-5); });
  family("relu64", 10, 1e-6, worst64, [&] { return check_relu<double>(rng, 1e-5); });
  family("maxpool64", 10, 1e-6, worst64, [&] { return check_maxpool<double>(rng, 1e-5); });
  family("upsample64", 10, 1e-6, worst64, [&] { return check_upsample<double>(rng, 1e-5); });
  family("sigmoid64", 10, 1e-6, worst64, [&] { return check_sigmoid<double>(rng, 1e-5); });

  family("conv32", 10, 1e-3, worst32, [&] { return check_conv<float>(rng, 1e-3); });
  family("linear32", 5, 1e-3, worst32, [&] { return check_linear<float>(rng, 1e-3); });
  family("bn32-train", 5, 1e-3, worst32, [&] { return check_batchnorm<float>(rng, true, 1e-3); });
  family("sigmoid32", 5, 1e-3, worst32, [&] { return check_sigmoid<float>(rng, 1e-3); });

  const auto comp64 = check_composition<double>(1, 1e-6, 12);
  ++checks;
  // a smaller entry batch keeps the float loss small enough that rounding in
  // the forward pass stays visibly below the 1e-3 difference tolerance
  const auto comp32 = check_composition<float>(1, 1e-3, 3);
  ++checks;
  // covers the float elements FD cannot probe (kink exclusions)
  std::optional<double> cross;
  for (std::uint64_t seed = 1; seed <= 5 && !cross; ++seed)
    cross = cross_precision_grad_gap(seed, 12);
  ++checks;

  const double elapsed = seconds_since(t0);
  note("%d randomized checks: layer max err %.2e (64-bit) / %.2e (32-bit)", checks, worst64,
       worst32);
  note("composition 64-bit: mirror bitwise %s, max err %.2e over %d probes (%d at kinks)",
       comp64.mirror_matches ? "equal" : "DIFFERS", comp64.max_rel_err, comp64.probed,
       comp64.excluded);
  note("composition 32-bit: mirror bitwise %s, max err %.2e over %d probes (%d at kinks)",
       comp32.mirror_matches ? "equal" : "DIFFERS", comp32.max_rel_err, comp32.probed,
       comp32.excluded);
  if (cross) {
    note("32-bit vs 64-bit gradients at shared parameters: max gap %.2e", *cross);
  } else {
    note("32-bit vs 64-bit gradients: no seed with matching branches");
  }
  note("%.1fs total", elapsed);
  return worst64 < 1e-6 && worst32 < 1e-3 && comp64.mirror_matches &&
         comp64.max_rel_err < 1e-6 && comp64.probed >= 1500 && comp64.excluded <= 20 &&
         comp32.mirror_matches && comp32.max_rel_err < 1e-3 && comp32.probed >= 400 &&
         cross.has_value() && *cross < 1e-3 && checks >= 100 && elapsed < 120.0;
}

// ---------------------------------------------------------------------------
// Criterion 2: brute-force label-selection equivalence.
// ---------------------------------------------------------------------------

PcrmResult brute_force_select(const std::vector<ErmEntry>& entries, const SparseDepthMap& lm,
                              const MatchThresholds& th, bool uncovered_negative) {
  PcrmResult result;
  result.pcrm = SparseDepthMap(lm.width(), lm.height());
  result.labels.per_entry.assign(entries.size(), EntryLabel::kUnlabeled);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!lm.measured(e.pixel.u, e.pixel.v)) {
      if (uncovered_negative) {
        result.labels.per_entry[i] = EntryLabel::kNegative;
        result.labels.negatives.push_back(i);
      } else {
        result.labels.unlabeled.push_back(i);
      }
      continue;
    }
    const double dl = lm.at(e.pixel.u, e.pixel.v);
    const double dr = e.depth;
    const bool match = std::abs(dl - dr) < th.t_abs && std::abs(dl - dr) / dl < th.t_rel;
    if (match) {
      result.labels.per_entry[i] = EntryLabel::kPositive;
      result.labels.positives.push_back(i);
      result.pcrm.fuse_min(e.pixel.u, e.pixel.v, e.depth);
    } else {
      result.labels.per_entry[i] = EntryLabel::kNegative;
      result.labels.negatives.push_back(i);
    }
  }
  return result;
}

bool criterion_selection_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(99);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    CameraIntrinsics cam;
    cam.fx = rng.uniform(20.0, 200.0);
    cam.fy = rng.uniform(20.0, 200.0);
    cam.width = 20 + static_cast<int>(rng.below(45));
    cam.height = 16 + static_cast<int>(rng.below(33));
    cam.cx = rng.uniform(4.0, cam.width - 4.0);
    cam.cy = rng.uniform(4.0, cam.height - 4.0);

    std::vector<RadarReturn> returns;
    const int n = static_cast<int>(rng.below(16));
    for (int i = 0; i < n; ++i) {
      returns.push_back({rng.uniform(-30.0, 30.0), rng.uniform(0.5, 90.0)});
    }
    const int v = 1 + static_cast<int>(rng.below(20));
    const auto erm = build_erm(returns, cam, v);

    SparseDepthMap lm(cam.width, cam.height);
    for (int py = 0; py < cam.height; ++py) {
      for (int px = 0; px < cam.width; ++px) {
        if (rng.below(10) < 3) {
          lm.set(px, py, static_cast<float>(rng.uniform(0.5, 90.0)));
        }
      }
    }
    // sprinkle close-call values next to entry depths to stress the bounds
    for (const auto& e : erm.entries) {
      if (rng.below(4) == 0) {
        lm.set(e.pixel.u, e.pixel.v,
               static_cast<float>(e.depth + rng.uniform(-1.5, 1.5) * 0.02 * e.depth));
      }
    }

    MatchThresholds th;
    if (trial % 3 != 0) {  // keep a third of the trials at the default thresholds
      th.t_abs = rng.uniform(0.05, 5.0);
      th.t_rel = rng.uniform(0.001, 0.5);
    }
    const bool uncovered_negative = trial % 2 == 1;

    const auto got = select_pcrm(erm.entries, lm, th, uncovered_negative);
    const auto want = brute_force_select(erm.entries, lm, th, uncovered_negative);
    if (got.labels.per_entry != want.labels.per_entry ||
        got.labels.positives != want.labels.positives ||
        got.labels.negatives != want.labels.negatives ||
        got.labels.unlabeled != want.labels.unlabeled || !(got.pcrm == want.pcrm)) {
      note("mismatch on trial %d", trial);
      return false;
    }
    ++checked;
  }
  const double elapsed = seconds_since(t0);
  note("%d randomized instances matched the brute-force labeling, %.1fs", checked, elapsed);
  return checked == 1000 && elapsed < 60.0;
}

// ---------------------------------------------------------------------------
// Criterion 3: loss identities.
// ---------------------------------------------------------------------------

bool criterion_loss_identities() {
  bool ok = true;

  // single entry, weight 1, probability one half: loss is exactly ln 2
  nn::Tensor<double> half({1, 1});
  half[0] = 0.5;
  const auto ln2 = weighted_bce_loss(half, {1}, {1.0});
  const double ln2_err = std::abs(ln2.loss - std::log(2.0));
  ok &= ln2_err < 1e-12;
  note("ln2 case: |loss - ln 2| = %.2e", ln2_err);

  // confident correct predictions cost (almost) nothing
  nn::Tensor<double> confident({2, 1});
  confident[0] = 1.0;
  confident[1] = 0.0;
  const auto perfect = weighted_bce_loss(confident, {1, 0}, {1.0, 1.0});
  ok &= perfect.loss < 1e-6;
  note("clamped perfect predictions: loss = %.2e", perfect.loss);

  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n_pos = rng.below(1000);
    const std::size_t n_neg = n_pos == 0 ? 1 + rng.below(999) : rng.below(1000);
    const double total = static_cast<double>(n_pos + n_neg);
    const auto w = class_weights(n_pos, n_neg, false);
    worst = std::max(worst, std::abs(w.positive - n_pos / total));
    worst = std::max(worst, std::abs(w.negative - n_neg / total));
    const auto wi = class_weights(n_pos, n_neg, true);
    worst = std::max(worst, std::abs(wi.positive - n_neg / total));
    worst = std::max(worst, std::abs(wi.negative - n_pos / total));
  }
  ok &= worst < 1e-15;
  note("50 class-weight pairs, both orientations: max deviation %.2e", worst);
  return ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: label-oracle inference reproduces the selected map.
// ---------------------------------------------------------------------------

bool criterion_oracle_inference() {
  experiment.ensure_dataset();
  const auto& cfg = experiment.cfg;
  int scenes = 0;
  for (const auto* split : {&experiment.train, &experiment.val, &experiment.test}) {
    for (const auto& scene : *split) {
      const auto batch = build_entry_batch(scene.radar, scene.meta.camera, scene.lm, cfg);
      std::vector<double> oracle(batch.entries.size(), 0.0);
      for (const auto i : batch.labels.positives) oracle[i] = 1.0;
      const auto em = select_em(batch.entries, oracle, scene.meta.camera.width,
                                scene.meta.camera.height, cfg.tau);
      if (!(em.em == batch.pcrm)) {
        note("scene seed %llu: oracle map differs",
             static_cast<unsigned long long>(scene.meta.seed));
        return false;
      }
      ++scenes;
    }
  }
  note("oracle-scored map identical to the selected map on all %d scenes", scenes);
  return scenes == 40;
}

// ---------------------------------------------------------------------------
// Criterion 5: completed-map error ordering with margins.
// ---------------------------------------------------------------------------

bool criterion_error_ordering() {
  ensure_experiment();
  const bool time_ok =
      experiment.printed.train_seconds < 1800.0 && experiment.inverted.train_seconds < 1800.0;
  const auto describe = [](const SettingResult& r) {
    note("invert=%d: pcrm %.3f < em %.3f < rm %.3f with 5%% margins: %s (trained in %.0fs)",
         r.invert ? 1 : 0, r.mae_pcrm, r.mae_em, r.mae_rm, r.ordered ? "yes" : "no",
         r.train_seconds);
  };
  describe(experiment.printed);
  describe(experiment.inverted);
  if (!time_ok) note("a training run exceeded the 30 minute budget");
  const bool any = experiment.printed.ordered || experiment.inverted.ordered;
  if (any) {
    note("achieved by: %s%s", experiment.printed.ordered ? "printed-form weights " : "",
         experiment.inverted.ordered ? "inverted weights" : "");
  }
  return any && time_ok;
}

// ---------------------------------------------------------------------------
// Criterion 6: held-out discrimination.
// ---------------------------------------------------------------------------

bool criterion_discrimination() {
  ensure_experiment();
  note("held-out auc: printed-form %.3f, inverted %.3f", experiment.printed.test_auc,
       experiment.inverted.test_auc);
  return std::max(experiment.printed.test_auc, experiment.inverted.test_auc) >= 0.90;
}

// ---------------------------------------------------------------------------
// Criterion 7: run-to-run determinism through the file formats.
// ---------------------------------------------------------------------------

std::vector<char> file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool criterion_determinism() {
  experiment.ensure_dataset();
  auto cfg = experiment.cfg;
  cfg.epochs = 3;
  const std::vector<synth::LoadedScene> subset(experiment.train.begin(),
                                               experiment.train.begin() + 4);
  const fs::path dir = fs::temp_directory_path() / "radarfuse_acceptance";
  fs::create_directories(dir);

  const auto run = [&](const fs::path& ckpt, const fs::path& em_file) {
    FusionModel<float> model(cfg.d_max, 32, 64);
    Rng rng(cfg.seed);
    model.init(rng);
    train_model(model, subset, {}, cfg, nullptr);
    const auto params = model.params();
    io::save_checkpoint<float>(ckpt, static_cast<float>(cfg.d_max), 32, params);
    const auto& scene = experiment.test.front();
    const auto em = infer_em(model, scene.image, scene.flow, scene.radar, scene.meta.camera, cfg);
    io::save_sdm1(em_file, em.em);
  };
  run(dir / "a.ckpt", dir / "a_em.sdm1");
  run(dir / "b.ckpt", dir / "b_em.sdm1");

  const bool ckpt_same = file_bytes(dir / "a.ckpt") == file_bytes(dir / "b.ckpt");
  const bool em_same = file_bytes(dir / "a_em.sdm1") == file_bytes(dir / "b_em.sdm1");
  note("checkpoint bytes identical: %s, estimated-map bytes identical: %s",
       ckpt_same ? "yes" : "no", em_same ? "yes" : "no");
  fs::remove_all(dir);
  return ckpt_same && em_same;
}

// ---------------------------------------------------------------------------
// Criterion 8: metric properties.
// ---------------------------------------------------------------------------

bool criterion_metric_properties() {
  Rng rng(512);
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = 10 + static_cast<int>(rng.below(30));
    const int h = 8 + static_cast<int>(rng.below(20));
    SparseDepthMap ref(w, h), pred(w, h);
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
      const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
      ref.set(u, v, static_cast<float>(rng.uniform(0.5, 80.0)));
      pred.set(u, v, static_cast<float>(rng.uniform(0.5, 80.0)));
    }
    const auto base = evaluate_depth(pred, ref);
    if (base.rmse < base.mae - 1e-12) {
      note("rmse < mae on trial %d", trial);
      return false;
    }
    if (trial % 100 != 0) continue;

    for (const double lambda : {0.5, 2.0, 4.0, 1.7}) {
      SparseDepthMap ref_s(w, h), pred_s(w, h);
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          if (!ref.measured(u, v)) continue;
          ref_s.set(u, v, static_cast<float>(ref.at(u, v) * lambda));
          pred_s.set(u, v, static_cast<float>(pred.at(u, v) * lambda));
        }
      }
      const auto scaled = evaluate_depth(pred_s, ref_s);
      const double mae_err = std::abs(scaled.mae - lambda * base.mae) /
                             std::max(1e-12, lambda * base.mae);
      const double rmse_err = std::abs(scaled.rmse - lambda * base.rmse) /
                              std::max(1e-12, lambda * base.rmse);
      const double rel_err = std::abs(scaled.rel - base.rel) / std::max(1e-12, base.rel);
      if (mae_err > 1e-6 || rmse_err > 1e-6 || rel_err > 1e-6) {
        note("scaling failed at lambda %.2f (errors %.2e / %.2e / %.2e)", lambda, mae_err,
             rmse_err, rel_err);
        return false;
      }
    }
  }
  note("1000 map pairs: rmse >= mae everywhere; scaling held to 1e-6 on sampled pairs");
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 9: acceptance-threshold sweep.
// ---------------------------------------------------------------------------

bool criterion_threshold_sweep() {
  ensure_experiment();
  const SettingResult& setting =
      experiment.printed.ordered || !experiment.inverted.ordered ? experiment.printed
                                                                 : experiment.inverted;
  auto cfg = experiment.cfg;
  int scene_index = 0;
  for (const auto& scene : experiment.test) {
    const auto& cam = scene.meta.camera;
    const nn::Tensor<float> packed = pack_model_input<float>(scene.image, scene.flow);
    const nn::Tensor<float> features = setting.model->extractor.forward(packed, false);
    const auto erm = build_erm(scene.radar, cam, cfg.v);
    const auto probs = score_entries(*setting.model, features, erm.entries);

    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (int step = 1; step <= 9; ++step) {
      const double tau = 0.1 * step;
      const auto em = select_em(erm.entries, probs, cam.width, cam.height, tau);
      const std::size_t count = em.em.measured_count();
      if (count > previous) {
        note("scene %d: count rose from %zu to %zu at tau %.1f", scene_index, previous, count,
             tau);
        return false;
      }
      previous = count;
    }
    ++scene_index;
  }
  note("pixel counts non-increasing over tau in {0.1..0.9} on all %d test scenes", scene_index);
  return scene_index == 10;
}

}  // namespace

int main(int argc, char** argv) {
  // optional criterion numbers on the command line restrict the run
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  int number = 0;
  const auto criterion = [&](const char* name, const std::function<bool()>& fn) {
    ++number;
    if (!selected.empty() && !selected.count(number)) return;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string error;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      error = e.what();
    }
    if (!error.empty()) note("exception: %s", error.c_str());
    std::printf("%s - %s (%.1fs)\n", ok ? "PASS" : "FAIL", name, seconds_since(t0));
    std::fflush(stdout);
    if (!ok) ++failures;
  };

  criterion("1. layer and end-to-end gradients match finite differences", criterion_gradients);
  criterion("2. label selection matches a brute-force reimplementation on 1000 instances",
            criterion_selection_oracle);
  criterion("3. loss identities and class-weight formulas hold", criterion_loss_identities);
  criterion("4. label-oracle scoring reproduces the selected map on every scene",
            criterion_oracle_inference);
  criterion("5. completed-map error ordering pcrm < em < rm with 5% margins",
            criterion_error_ordering);
  criterion("6. held-out candidate discrimination reaches auc 0.90", criterion_discrimination);
  criterion("7. identical seeds give bit-identical checkpoints and estimated maps",
            criterion_determinism);
  criterion("8. metric bounds and scale relations hold on 1000 random map pairs",
            criterion_metric_properties);
  criterion("9. accepted pixel count never rises as the threshold grows",
            criterion_threshold_sweep);

  const int ran = selected.empty() ? number : static_cast<int>(selected.size());
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
