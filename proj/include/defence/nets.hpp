#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "defence/losses.hpp"

namespace defence::nets {

/// Encoder-decoder generator: seven stride-2 down-sampling layers mirrored
/// by seven up-sampling layers with skip connections, sigmoid output.
/// Depth is fixed; inputs whose dims are not multiples of 128 are padded
/// up and cropped back inside forward().
struct GeneratorSpec {
  int in_channels = 3;    // 3 (RGB) or 4 (RGB + edge map)
  int out_channels = 1;   // 1 (mask) or 3 (image)
  int base_width = 64;
  bool skip_connections = true;

  static constexpr int kDepth = 7;

  void validate() const;
  std::uint64_t hash() const;
};

/// PatchGAN discriminator: four stride-2 blocks and a stride-1 head, so a
/// 256x256 input yields a 16x16 grid of per-patch sigmoid scores.
struct DiscriminatorSpec {
  int in_channels = 4;  // condition channels + candidate channels
  int base_width = 64;

  void validate() const;
  std::uint64_t hash() const;
};

enum class ExtractorKind { DeterministicStandIn, PretrainedVgg19 };

/// Feature extractor behind the perceptual/style losses. The stand-in is a
/// small frozen conv stack with bit-reproducible seeded weights; the VGG-19
/// variant loads locally available weights saved by save_extractor_weights.
struct FeatureExtractorSpec {
  ExtractorKind kind = ExtractorKind::DeterministicStandIn;
  std::vector<int> tap_layers{1, 2, 3, 4};
  std::uint64_t seed = 77;
  std::string weights_path;

  void validate() const;
};

class UNetGeneratorImpl : public torch::nn::Module {
 public:
  UNetGeneratorImpl() : UNetGeneratorImpl(GeneratorSpec{}) {}
  explicit UNetGeneratorImpl(const GeneratorSpec& spec);

  torch::Tensor forward(torch::Tensor x);
  const GeneratorSpec& spec() const { return spec_; }

 private:
  GeneratorSpec spec_;
  torch::nn::ModuleList downs_{nullptr};
  torch::nn::ModuleList ups_{nullptr};
};
TORCH_MODULE(UNetGenerator);

class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  PatchDiscriminatorImpl() : PatchDiscriminatorImpl(DiscriminatorSpec{}) {}
  explicit PatchDiscriminatorImpl(const DiscriminatorSpec& spec);

  torch::Tensor forward(torch::Tensor x);
  const DiscriminatorSpec& spec() const { return spec_; }

 private:
  DiscriminatorSpec spec_;
  torch::nn::Sequential model_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

class FeatureExtractorImpl : public torch::nn::Module {
 public:
  FeatureExtractorImpl() : FeatureExtractorImpl(FeatureExtractorSpec{}) {}
  explicit FeatureExtractorImpl(const FeatureExtractorSpec& spec);

  /// One activation per tap layer, ordered by depth.
  std::vector<torch::Tensor> forward_taps(torch::Tensor x);
  const FeatureExtractorSpec& spec() const { return spec_; }

 private:
  FeatureExtractorSpec spec_;
  torch::nn::Sequential features_{nullptr};
  std::vector<std::size_t> tap_positions_;
};
TORCH_MODULE(FeatureExtractor);

UNetGenerator build_generator(const GeneratorSpec& spec, std::uint64_t seed);
PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed);
FeatureExtractor build_feature_extractor(const FeatureExtractorSpec& spec);

/// Run the extractor; single-channel input is replicated to 3 channels.
std::vector<torch::Tensor> extract_features(FeatureExtractor& extractor,
                                            const torch::Tensor& image);

/// Serialize extractor weights in the format PretrainedVgg19 loads.
void save_extractor_weights(FeatureExtractor& extractor, const std::string& path);

/// Sidecar metadata stored as <tag>.json next to the <tag>.ckpt weights.
struct CheckpointManifest {
  std::string kind;  // e.g. "mask_generator", "recovery_generator", "single_stage_generator"
  GeneratorSpec arch;
  std::uint64_t spec_hash = 0;
  std::uint64_t config_hash = 0;
  std::int64_t step_count = 0;
  loss::LossWeights weights;
  std::uint64_t seed = 0;
};

void save_generator_checkpoint(UNetGenerator& generator, const CheckpointManifest& manifest,
                               const std::string& tag);

/// Rebuild the generator recorded in <tag>.json and load its weights.
std::pair<UNetGenerator, CheckpointManifest> load_generator_checkpoint(const std::string& tag);

/// As above but rejects checkpoints whose spec hash differs from `expected`.
UNetGenerator load_generator_checkpoint(const std::string& tag, const GeneratorSpec& expected);

}  // namespace defence::nets
