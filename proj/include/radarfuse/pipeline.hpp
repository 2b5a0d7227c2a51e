#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "radarfuse/evaluator.hpp"
#include "radarfuse/feature_extractor.hpp"
#include "radarfuse/io.hpp"
#include "radarfuse/optimizer.hpp"
#include "radarfuse/rng.hpp"
#include "radarfuse/sparse_depth.hpp"
#include "radarfuse/synth.hpp"
#include "radarfuse/tensor.hpp"

namespace radarfuse {

// Feature extractor and consistency evaluator trained end to end. The
// extractor sees [gray, flow, coords] (5 channels); the evaluator scores
// [feature vector, depth / d_max] rows.
template <typename T>
struct FusionModel {
  static constexpr int kInChannels = 5;

  FusionModel(double d_max, int feature_channels = 32, int hidden = 64);

  void init(Rng& rng);
  void zero_grads();
  std::vector<nn::ParamRef<T>> params();

  FeatureExtractor<T> extractor;
  ConsistencyEvaluator<T> evaluator;
  double d_max;
};

// Packs image (1,H,W) and flow (2,H,W) with a coordinate map into the
// 5-channel extractor input.
template <typename T>
Tensor<T> pack_model_input(const Tensor<float>& image, const Tensor<float>& flow);

// ERM entries of one image together with their LiDAR labels.
struct EntryBatch {
  std::vector<ErmEntry> entries;
  LabelSets labels;
  SparseDepthMap erm, pcrm;
  std::vector<std::size_t> labeled;      // entry indices with a label, in order
  std::vector<std::uint8_t> targets;     // parallel to `labeled`, 1 = positive
};

EntryBatch build_entry_batch(const std::vector<RadarReturn>& radar, const CameraIntrinsics& cam,
                             const SparseDepthMap& lm, const io::RunConfig& cfg);

// Rows [features at entry pixel, entry depth / d_max] for the chosen entry
// indices; the linear adjoint scatters row gradients back into the feature
// gradient tensor (the depth column carries no trainable signal).
template <typename T>
Tensor<T> gather_entry_rows(const Tensor<T>& features, const std::vector<ErmEntry>& entries,
                            const std::vector<std::size_t>& idx, double d_max);
template <typename T>
void scatter_entry_row_grads(const Tensor<T>& row_grads, const std::vector<ErmEntry>& entries,
                             const std::vector<std::size_t>& idx, Tensor<T>& feature_grads);

struct EpochStats {
  int epoch = 0;                  // 1-based
  double mean_loss = 0.0;         // per-image summed loss, averaged over used images
  std::optional<double> val_auc;  // pooled over validation entries; absent without both classes
  int skipped_images = 0;         // images with no labeled entry
};

struct TrainResult {
  std::vector<EpochStats> curve;
};

// Optimizes the model in place. One Adam step per image, images visited in
// seeded-shuffled order each epoch. When `log` is given, one JSON line per
// epoch is emitted. Throws when an entire epoch has nothing to train on.
template <typename T>
TrainResult train_model(FusionModel<T>& model, const std::vector<synth::LoadedScene>& train_scenes,
                        const std::vector<synth::LoadedScene>& val_scenes,
                        const io::RunConfig& cfg, std::ostream* log = nullptr);

// Depth estimate assembled from the accepted ERM entries; `probability`
// holds the winning entry's score at each measured pixel.
struct EstimatedMap {
  SparseDepthMap em;
  SparseDepthMap probability;
};

// Evaluator probability for every listed entry, inference mode.
template <typename T>
std::vector<double> score_entries(FusionModel<T>& model, const Tensor<T>& features,
                                  const std::vector<ErmEntry>& entries);

// Keeps entries with probability strictly above tau. When several accepted
// entries cover a pixel the higher probability wins; equal probabilities
// fall back to the smaller depth.
EstimatedMap select_em(const std::vector<ErmEntry>& entries, const std::vector<double>& probs,
                       int width, int height, double tau);

// Full inference path: pack input, extract features, score every ERM entry,
// threshold into an EM.
template <typename T>
EstimatedMap infer_em(FusionModel<T>& model, const Tensor<float>& image, const Tensor<float>& flow,
                      const std::vector<RadarReturn>& radar, const CameraIntrinsics& cam,
                      const io::RunConfig& cfg);

// Cross-bilateral scattered-data interpolation: each empty pixel takes a
// weighted mean of its 16 nearest measured pixels, weighted by spatial
// distance (sigma 16 px) and intensity difference (sigma 0.1). Measured
// pixels pass through; if every weight underflows the nearest value is used.
SparseDepthMap complete_depth(const SparseDepthMap& sparse, const Tensor<float>& image);

extern template struct FusionModel<float>;
extern template struct FusionModel<double>;
extern template Tensor<float> pack_model_input<float>(const Tensor<float>&, const Tensor<float>&);
extern template Tensor<double> pack_model_input<double>(const Tensor<float>&, const Tensor<float>&);
extern template Tensor<float> gather_entry_rows<float>(const Tensor<float>&,
                                                       const std::vector<ErmEntry>&,
                                                       const std::vector<std::size_t>&, double);
extern template Tensor<double> gather_entry_rows<double>(const Tensor<double>&,
                                                         const std::vector<ErmEntry>&,
                                                         const std::vector<std::size_t>&, double);
extern template void scatter_entry_row_grads<float>(const Tensor<float>&,
                                                    const std::vector<ErmEntry>&,
                                                    const std::vector<std::size_t>&,
                                                    Tensor<float>&);
extern template void scatter_entry_row_grads<double>(const Tensor<double>&,
                                                     const std::vector<ErmEntry>&,
                                                     const std::vector<std::size_t>&,
                                                     Tensor<double>&);
extern template TrainResult train_model<float>(FusionModel<float>&,
                                               const std::vector<synth::LoadedScene>&,
                                               const std::vector<synth::LoadedScene>&,
                                               const io::RunConfig&, std::ostream*);
extern template TrainResult train_model<double>(FusionModel<double>&,
                                                const std::vector<synth::LoadedScene>&,
                                                const std::vector<synth::LoadedScene>&,
                                                const io::RunConfig&, std::ostream*);
extern template std::vector<double> score_entries<float>(FusionModel<float>&, const Tensor<float>&,
                                                         const std::vector<ErmEntry>&);
extern template std::vector<double> score_entries<double>(FusionModel<double>&,
                                                          const Tensor<double>&,
                                                          const std::vector<ErmEntry>&);
extern template EstimatedMap infer_em<float>(FusionModel<float>&, const Tensor<float>&,
                                             const Tensor<float>&,
                                             const std::vector<RadarReturn>&,
                                             const CameraIntrinsics&, const io::RunConfig&);
extern template EstimatedMap infer_em<double>(FusionModel<double>&, const Tensor<float>&,
                                              const Tensor<float>&,
                                              const std::vector<RadarReturn>&,
                                              const CameraIntrinsics&, const io::RunConfig&);

}  // namespace radarfuse
