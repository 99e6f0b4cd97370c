#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "defence/canny.hpp"
#include "defence/fencegen.hpp"
#include "defence/losses.hpp"
#include "defence/nets.hpp"

namespace defence::train {

/// Everything one training run depends on. Loadable from a key = value
/// text file; hash() feeds the checkpoint manifest so runs are traceable.
struct TrainingConfig {
  int max_epochs = 200;
  int batch_size = 1;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  std::uint64_t seed = 0;
  double epsilon = 1e-3;  // stop when successive epoch losses differ by less
  loss::LossWeights weights;
  int checkpoint_every = 0;  // steps between intermediate checkpoints, 0 = final only
  int net_width = 64;        // generator/discriminator base width
  CannyParams canny;         // single-stage edge conditioning
  bool use_edge_channel = true;  // ablation flag for the single-stage network

  static TrainingConfig load(const std::string& path);
  void validate() const;
  std::uint64_t hash() const;
};

/// Per-epoch mean generator total loss, append-only.
using LossHistory = std::vector<double>;

/// True iff the last two epoch losses differ by less than epsilon.
bool convergence_check(const LossHistory& history, double epsilon);

struct TrainResult {
  std::string tag;  // files <tag>.ckpt / <tag>.json / <tag>.csv
  nets::CheckpointManifest manifest;
  LossHistory history;
  std::int64_t steps = 0;
};

/// Stage 1: fenced image -> fence mask, adversarial + L1 objective.
TrainResult train_mask_generator(const std::vector<fence::TrainingTriple>& dataset,
                                 const TrainingConfig& config, const std::string& out_tag);

/// Stage 2: ground-truth-masked fenced image -> de-fenced image, full
/// composite objective (adversarial, L1, perceptual, style, SSIM).
TrainResult train_recovering_network(const std::vector<fence::TrainingTriple>& dataset,
                                     const TrainingConfig& config,
                                     nets::FeatureExtractor& extractor,
                                     const std::string& out_tag);

/// Single stage: fenced image + Canny edge channel -> de-fenced image,
/// same composite objective as stage 2. Masks in the triples are unused.
TrainResult train_single_stage(const std::vector<fence::TrainingTriple>& dataset,
                               const TrainingConfig& config, nets::FeatureExtractor& extractor,
                               const std::string& out_tag);

}  // namespace defence::train
