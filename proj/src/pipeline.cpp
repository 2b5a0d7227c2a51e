#include "radarfuse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "radarfuse/metrics.hpp"

namespace radarfuse {

template <typename T>
FusionModel<T>::FusionModel(double d_max_, int feature_channels, int hidden)
    : extractor(kInChannels, feature_channels, "fx."),
      evaluator(feature_channels, hidden, "ev."),
      d_max(d_max_) {
  if (!(d_max > 0.0)) throw std::invalid_argument("fusion model: d_max must be positive");
}

template <typename T>
void FusionModel<T>::init(Rng& rng) {
  extractor.init(rng);
  evaluator.init(rng);
}

template <typename T>
void FusionModel<T>::zero_grads() {
  extractor.zero_grads();
  evaluator.zero_grads();
}

template <typename T>
std::vector<nn::ParamRef<T>> FusionModel<T>::params() {
  std::vector<nn::ParamRef<T>> out;
  extractor.collect_params(out);
  evaluator.collect_params(out);
  return out;
}

template <typename T>
Tensor<T> pack_model_input(const Tensor<float>& image, const Tensor<float>& flow) {
  if (image.shape().size() != 3 || image.shape()[0] != 1) {
    throw std::invalid_argument("pack: image must be (1,H,W), got " +
                                nn::shape_string(image.shape()));
  }
  const int h = image.shape()[1];
  const int w = image.shape()[2];
  ExtractorInput<T> in;
  in.image = image.template cast<T>();
  in.flow = flow.template cast<T>();
  in.coords = make_coord_map<T>(w, h);
  return in.packed();
}

EntryBatch build_entry_batch(const std::vector<RadarReturn>& radar, const CameraIntrinsics& cam,
                             const SparseDepthMap& lm, const io::RunConfig& cfg) {
  if (lm.width() != cam.width || lm.height() != cam.height) {
    throw std::invalid_argument("entry batch: LiDAR map does not match the camera frame");
  }
  EntryBatch batch;
  auto erm = build_erm(radar, cam, cfg.v);
  batch.entries = std::move(erm.entries);
  batch.erm = std::move(erm.map);
  MatchThresholds th;
  th.t_abs = cfg.t_abs;
  th.t_rel = cfg.t_rel;
  auto selected = select_pcrm(batch.entries, lm, th, cfg.negatives_include_uncovered);
  batch.labels = std::move(selected.labels);
  batch.pcrm = std::move(selected.pcrm);
  for (std::size_t i = 0; i < batch.entries.size(); ++i) {
    const EntryLabel label = batch.labels.per_entry[i];
    if (label == EntryLabel::kUnlabeled) continue;
    batch.labeled.push_back(i);
    batch.targets.push_back(label == EntryLabel::kPositive ? 1 : 0);
  }
  return batch;
}

template <typename T>
Tensor<T> gather_entry_rows(const Tensor<T>& features, const std::vector<ErmEntry>& entries,
                            const std::vector<std::size_t>& idx, double d_max) {
  if (features.shape().size() != 3) {
    throw std::invalid_argument("gather: features must be (C,H,W)");
  }
  if (!(d_max > 0.0)) throw std::invalid_argument("gather: d_max must be positive");
  const int c = features.shape()[0];
  const int h = features.shape()[1];
  const int w = features.shape()[2];
  Tensor<T> rows({static_cast<int>(idx.size()), c + 1});
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const ErmEntry& e = entries.at(idx[n]);
    if (e.pixel.u < 0 || e.pixel.u >= w || e.pixel.v < 0 || e.pixel.v >= h) {
      throw std::invalid_argument("gather: entry pixel outside the feature map");
    }
    for (int k = 0; k < c; ++k) {
      rows(static_cast<int>(n), k) = features(k, e.pixel.v, e.pixel.u);
    }
    rows(static_cast<int>(n), c) = static_cast<T>(e.depth / d_max);
  }
  return rows;
}

template <typename T>
void scatter_entry_row_grads(const Tensor<T>& row_grads, const std::vector<ErmEntry>& entries,
                             const std::vector<std::size_t>& idx, Tensor<T>& feature_grads) {
  if (feature_grads.shape().size() != 3) {
    throw std::invalid_argument("scatter: feature grads must be (C,H,W)");
  }
  const int c = feature_grads.shape()[0];
  if (row_grads.shape().size() != 2 || row_grads.shape()[0] != static_cast<int>(idx.size()) ||
      row_grads.shape()[1] != c + 1) {
    throw std::invalid_argument("scatter: row gradient shape mismatch");
  }
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const ErmEntry& e = entries.at(idx[n]);
    for (int k = 0; k < c; ++k) {
      feature_grads(k, e.pixel.v, e.pixel.u) += row_grads(static_cast<int>(n), k);
    }
  }
}

namespace {

template <typename T>
struct PreparedScene {
  Tensor<T> packed;
  EntryBatch batch;
};

template <typename T>
std::vector<PreparedScene<T>> prepare_scenes(const std::vector<synth::LoadedScene>& scenes,
                                             const io::RunConfig& cfg) {
  std::vector<PreparedScene<T>> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes) {
    PreparedScene<T> p;
    p.packed = pack_model_input<T>(s.image, s.flow);
    p.batch = build_entry_batch(s.radar, s.meta.camera, s.lm, cfg);
    out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
double image_loss_and_backprop(FusionModel<T>& model, const PreparedScene<T>& scene,
                               const io::RunConfig& cfg) {
  const auto& batch = scene.batch;
  Tensor<T> features = model.extractor.forward(scene.packed, true);
  Tensor<T> rows = gather_entry_rows(features, batch.entries, batch.labeled, model.d_max);
  Tensor<T> probs = model.evaluator.forward(rows);

  const std::size_t n_pos = batch.labels.positives.size();
  const std::size_t n_neg = batch.labels.negatives.size();
  const ClassWeights cw = class_weights(n_pos, n_neg, cfg.invert_class_weights);
  std::vector<double> weights(batch.targets.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = batch.targets[i] ? cw.positive : cw.negative;
  }
  auto bce = weighted_bce_loss(probs, batch.targets, weights);

  model.zero_grads();
  Tensor<T> row_grads = model.evaluator.backward_from_logits(bce.grad_logits);
  Tensor<T> feature_grads = Tensor<T>::zeros(features.shape());
  scatter_entry_row_grads(row_grads, batch.entries, batch.labeled, feature_grads);
  model.extractor.backward(feature_grads);
  return bce.loss;
}

template <typename T>
std::optional<double> pooled_validation_auc(FusionModel<T>& model,
                                            const std::vector<PreparedScene<T>>& val) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& scene : val) {
    const auto& batch = scene.batch;
    if (batch.labeled.empty()) continue;
    Tensor<T> features = model.extractor.forward(scene.packed, false);
    Tensor<T> rows = gather_entry_rows(features, batch.entries, batch.labeled, model.d_max);
    Tensor<T> probs = model.evaluator.forward(rows);
    for (std::size_t i = 0; i < batch.labeled.size(); ++i) {
      scores.push_back(static_cast<double>(probs[i]));
      labels.push_back(batch.targets[i] ? 1 : 0);
    }
  }
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg) return std::nullopt;
  return binary_auc(scores, labels);
}

}  // namespace

template <typename T>
TrainResult train_model(FusionModel<T>& model, const std::vector<synth::LoadedScene>& train_scenes,
                        const std::vector<synth::LoadedScene>& val_scenes,
                        const io::RunConfig& cfg, std::ostream* log) {
  if (train_scenes.empty()) throw std::invalid_argument("train: empty training set");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

  auto train_prepared = prepare_scenes<T>(train_scenes, cfg);
  auto val_prepared = prepare_scenes<T>(val_scenes, cfg);

  auto params = model.params();
  nn::AdamState<T> adam;
  adam.lr = cfg.lr;
  // distinct stream from the seed used for weight init
  Rng shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

  TrainResult result;
  std::vector<std::size_t> order(train_prepared.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int used = 0;
    int skipped = 0;
    for (const std::size_t i : order) {
      if (train_prepared[i].batch.labeled.empty()) {
        ++skipped;
        continue;
      }
      loss_sum += image_loss_and_backprop(model, train_prepared[i], cfg);
      nn::adam_step<T>(params, adam);
      ++used;
    }
    if (used == 0) {
      throw std::runtime_error("train: epoch " + std::to_string(epoch) +
                               " had no image with labeled entries; check LiDAR coverage");
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / used;
    stats.skipped_images = skipped;
    stats.val_auc = pooled_validation_auc(model, val_prepared);
    if (log) {
      nlohmann::json line;
      line["epoch"] = stats.epoch;
      line["loss"] = stats.mean_loss;
      if (stats.val_auc) {
        line["val_auc"] = *stats.val_auc;
      } else {
        line["val_auc"] = nullptr;
      }
      line["skipped_images"] = stats.skipped_images;
      (*log) << line.dump() << "\n" << std::flush;
    }
    result.curve.push_back(stats);
  }
  return result;
}

template <typename T>
std::vector<double> score_entries(FusionModel<T>& model, const Tensor<T>& features,
                                  const std::vector<ErmEntry>& entries) {
  if (entries.empty()) return {};
  std::vector<std::size_t> all(entries.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Tensor<T> rows = gather_entry_rows(features, entries, all, model.d_max);
  Tensor<T> probs = model.evaluator.forward(rows);
  std::vector<double> out(entries.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(probs[i]);
  return out;
}

EstimatedMap select_em(const std::vector<ErmEntry>& entries, const std::vector<double>& probs,
                       int width, int height, double tau) {
  if (entries.size() != probs.size()) {
    throw std::invalid_argument("select: one probability per entry required");
  }
  if (!std::isfinite(tau)) throw std::invalid_argument("select: tau must be finite");
  EstimatedMap result;
  result.em = SparseDepthMap(width, height);
  result.probability = SparseDepthMap(width, height);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double p = probs[i];
    if (!(p > tau)) continue;
    const auto [u, v] = entries[i].pixel;
    if (!result.em.in_bounds(u, v)) {
      throw std::invalid_argument("select: entry pixel out of bounds");
    }
    const float pf = static_cast<float>(p);
    if (!result.em.measured(u, v) || pf > result.probability.at(u, v) ||
        (pf == result.probability.at(u, v) && entries[i].depth < result.em.at(u, v))) {
      result.em.set(u, v, entries[i].depth);
      result.probability.set(u, v, pf);
    }
  }
  return result;
}

template <typename T>
EstimatedMap infer_em(FusionModel<T>& model, const Tensor<float>& image, const Tensor<float>& flow,
                      const std::vector<RadarReturn>& radar, const CameraIntrinsics& cam,
                      const io::RunConfig& cfg) {
  Tensor<T> packed = pack_model_input<T>(image, flow);
  Tensor<T> features = model.extractor.forward(packed, false);
  auto erm = build_erm(radar, cam, cfg.v);
  const auto probs = score_entries(model, features, erm.entries);
  return select_em(erm.entries, probs, cam.width, cam.height, cfg.tau);
}

namespace {

struct CompletionSource {
  int u = 0, v = 0;
  float depth = 0.0f;
  float intensity = 0.0f;
};

}  // namespace

SparseDepthMap complete_depth(const SparseDepthMap& sparse, const Tensor<float>& image) {
  const int w = sparse.width();
  const int h = sparse.height();
  if (image.shape().size() != 3 || image.shape()[0] != 1 || image.shape()[1] != h ||
      image.shape()[2] != w) {
    throw std::invalid_argument("completion: image must be (1,H,W) matching the depth map");
  }

  constexpr int kNeighbors = 16;
  constexpr double kSigmaSpatial = 16.0;
  constexpr double kSigmaIntensity = 0.1;
  constexpr int kCell = 16;

  std::vector<CompletionSource> sources;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (sparse.measured(u, v)) sources.push_back({u, v, sparse.at(u, v), image(0, v, u)});
    }
  }
  if (sources.empty()) throw std::invalid_argument("completion: no measured pixels");

  const int gw = (w + kCell - 1) / kCell;
  const int gh = (h + kCell - 1) / kCell;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(gw) * gh);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const int cu = sources[i].u / kCell;
    const int cv = sources[i].v / kCell;
    buckets[static_cast<std::size_t>(cv) * gw + cu].push_back(static_cast<int>(i));
  }

  struct Candidate {
    std::int64_t d2 = 0;
    int idx = 0;
  };
  SparseDepthMap out(w, h);
  std::vector<Candidate> cands;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (sparse.measured(u, v)) {
        out.set(u, v, sparse.at(u, v));
        continue;
      }
      const int cu = u / kCell;
      const int cv = v / kCell;
      cands.clear();
      const int max_ring = std::max(gw, gh);
      for (int r = 0; r <= max_ring; ++r) {
        bool ring_in_grid = false;
        for (int cy = cv - r; cy <= cv + r; ++cy) {
          if (cy < 0 || cy >= gh) continue;
          for (int cx = cu - r; cx <= cu + r; ++cx) {
            if (cx < 0 || cx >= gw) continue;
            if (std::max(std::abs(cx - cu), std::abs(cy - cv)) != r) continue;
            ring_in_grid = true;
            for (const int si : buckets[static_cast<std::size_t>(cy) * gw + cx]) {
              const std::int64_t du = sources[si].u - u;
              const std::int64_t dv = sources[si].v - v;
              cands.push_back({du * du + dv * dv, si});
            }
          }
        }
        if (static_cast<int>(cands.size()) >= kNeighbors) {
          // any source in ring r+1 sits at least r*kCell pixels away
          std::nth_element(cands.begin(), cands.begin() + (kNeighbors - 1), cands.end(),
                           [](const Candidate& a, const Candidate& b) { return a.d2 < b.d2; });
          const std::int64_t kth = cands[kNeighbors - 1].d2;
          const std::int64_t fence = static_cast<std::int64_t>(r) * kCell;
          if (fence * fence >= kth) break;
        }
        if (!ring_in_grid && r > 0) break;
      }
      const std::size_t take = std::min<std::size_t>(kNeighbors, cands.size());
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take),
                        cands.end(), [&](const Candidate& a, const Candidate& b) {
                          if (a.d2 != b.d2) return a.d2 < b.d2;
                          if (sources[a.idx].v != sources[b.idx].v)
                            return sources[a.idx].v < sources[b.idx].v;
                          return sources[a.idx].u < sources[b.idx].u;
                        });
      double weight_sum = 0.0;
      double value_sum = 0.0;
      const double intensity = image(0, v, u);
      for (std::size_t k = 0; k < take; ++k) {
        const auto& s = sources[cands[k].idx];
        const double di = intensity - static_cast<double>(s.intensity);
        const double weight =
            std::exp(-static_cast<double>(cands[k].d2) / (2.0 * kSigmaSpatial * kSigmaSpatial)) *
            std::exp(-(di * di) / (2.0 * kSigmaIntensity * kSigmaIntensity));
        weight_sum += weight;
        value_sum += weight * static_cast<double>(s.depth);
      }
      if (weight_sum > 0.0 && std::isfinite(weight_sum)) {
        out.set(u, v, static_cast<float>(value_sum / weight_sum));
      } else {
        out.set(u, v, sources[cands[0].idx].depth);  // nearest measured value
      }
    }
  }
  return out;
}

template struct FusionModel<float>;
template struct FusionModel<double>;
template Tensor<float> pack_model_input<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> pack_model_input<double>(const Tensor<float>&, const Tensor<float>&);
template Tensor<float> gather_entry_rows<float>(const Tensor<float>&, const std::vector<ErmEntry>&,
                                                const std::vector<std::size_t>&, double);
template Tensor<double> gather_entry_rows<double>(const Tensor<double>&,
                                                  const std::vector<ErmEntry>&,
                                                  const std::vector<std::size_t>&, double);
template void scatter_entry_row_grads<float>(const Tensor<float>&, const std::vector<ErmEntry>&,
                                             const std::vector<std::size_t>&, Tensor<float>&);
template void scatter_entry_row_grads<double>(const Tensor<double>&, const std::vector<ErmEntry>&,
                                              const std::vector<std::size_t>&, Tensor<double>&);
template TrainResult train_model<float>(FusionModel<float>&,
                                        const std::vector<synth::LoadedScene>&,
                                        const std::vector<synth::LoadedScene>&,
                                        const io::RunConfig&, std::ostream*);
template TrainResult train_model<double>(FusionModel<double>&,
                                         const std::vector<synth::LoadedScene>&,
                                         const std::vector<synth::LoadedScene>&,
                                         const io::RunConfig&, std::ostream*);
template std::vector<double> score_entries<float>(FusionModel<float>&, const Tensor<float>&,
                                                  const std::vector<ErmEntry>&);
template std::vector<double> score_entries<double>(FusionModel<double>&, const Tensor<double>&,
                                                   const std::vector<ErmEntry>&);
template EstimatedMap infer_em<float>(FusionModel<float>&, const Tensor<float>&,
                                      const Tensor<float>&, const std::vector<RadarReturn>&,
                                      const CameraIntrinsics&, const io::RunConfig&);
template EstimatedMap infer_em<double>(FusionModel<double>&, const Tensor<float>&,
                                       const Tensor<float>&, const std::vector<RadarReturn>&,
                                       const CameraIntrinsics&, const io::RunConfig&);

}  // namespace radarfuse
