#include "defence/nets.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace defence::nets {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// pix2pix-style initialization: conv weights ~ N(0, 0.02), zero biases.
void init_weights(torch::nn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& p : module.named_parameters()) {
    if (p.value().dim() >= 2)
      torch::nn::init::normal_(p.value(), 0.0, 0.02);
    else
      torch::nn::init::zeros_(p.value());
  }
}

int round_up(int value, int multiple) {
  return ((value + multiple - 1) / multiple) * multiple;
}

}  // namespace

void GeneratorSpec::validate() const {
  if (in_channels != 1 && in_channels != 3 && in_channels != 4)
    throw std::invalid_argument("generator: in_channels must be 1, 3 or 4");
  if (out_channels != 1 && out_channels != 3)
    throw std::invalid_argument("generator: out_channels must be 1 or 3");
  if (base_width < 1) throw std::invalid_argument("generator: base_width must be >= 1");
}

std::uint64_t GeneratorSpec::hash() const {
  return fnv1a("unet|in=" + std::to_string(in_channels) + "|out=" + std::to_string(out_channels) +
               "|bw=" + std::to_string(base_width) + "|depth=" + std::to_string(kDepth) +
               "|skips=" + std::to_string(skip_connections ? 1 : 0));
}

void DiscriminatorSpec::validate() const {
  if (in_channels < 1) throw std::invalid_argument("discriminator: in_channels must be >= 1");
  if (base_width < 1) throw std::invalid_argument("discriminator: base_width must be >= 1");
}

std::uint64_t DiscriminatorSpec::hash() const {
  return fnv1a("patch|in=" + std::to_string(in_channels) + "|bw=" + std::to_string(base_width));
}

void FeatureExtractorSpec::validate() const {
  if (tap_layers.empty()) throw std::invalid_argument("extractor: tap_layers must be nonempty");
  const int max_tap = kind == ExtractorKind::DeterministicStandIn ? 4 : 5;
  for (int t : tap_layers)
    if (t < 1 || t > max_tap)
      throw std::invalid_argument("extractor: tap layer out of range");
  if (!std::is_sorted(tap_layers.begin(), tap_layers.end()))
    throw std::invalid_argument("extractor: tap_layers must be ascending");
  if (kind == ExtractorKind::PretrainedVgg19 && weights_path.empty())
    throw std::invalid_argument("extractor: vgg19 kind needs a weights_path");
}

// ---------------------------------------------------------------------------
// UNetGenerator
// ---------------------------------------------------------------------------

UNetGeneratorImpl::UNetGeneratorImpl(const GeneratorSpec& spec) : spec_(spec) {
  spec_.validate();
  downs_ = torch::nn::ModuleList();
  ups_ = torch::nn::ModuleList();

  // encoder widths double per layer, capped at 8x base
  std::array<int, GeneratorSpec::kDepth> down_w{};
  for (int k = 0; k < GeneratorSpec::kDepth; ++k)
    down_w[k] = spec_.base_width * std::min(1 << k, 8);

  for (int k = 0; k < GeneratorSpec::kDepth; ++k) {
    const int in = k == 0 ? spec_.in_channels : down_w[k - 1];
    torch::nn::Sequential block;
    block->push_back(torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, down_w[k], 4).stride(2).padding(1)));
    // no norm on the outermost layer or the bottleneck (instance stats of a
    // 1x1 map are degenerate)
    if (k != 0 && k != GeneratorSpec::kDepth - 1)
      block->push_back(torch::nn::InstanceNorm2d(down_w[k]));
    block->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    downs_->push_back(block);
  }

  for (int k = 0; k < GeneratorSpec::kDepth; ++k) {
    const bool last = k == GeneratorSpec::kDepth - 1;
    const int skip = (k > 0 && spec_.skip_connections) ? down_w[GeneratorSpec::kDepth - 1 - k] : 0;
    const int in = (k == 0 ? down_w[GeneratorSpec::kDepth - 1]
                           : spec_.base_width * std::min(1 << (GeneratorSpec::kDepth - 1 - (k - 1)), 8)) + skip;
    const int out = last ? spec_.out_channels
                         : spec_.base_width * std::min(1 << (GeneratorSpec::kDepth - 2 - k), 8);
    torch::nn::Sequential block;
    block->push_back(torch::nn::ConvTranspose2d(
        torch::nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
    if (!last) {
      block->push_back(torch::nn::InstanceNorm2d(out));
      block->push_back(torch::nn::ReLU());
    } else {
      block->push_back(torch::nn::Sigmoid());
    }
    ups_->push_back(block);
  }

  register_module("downs", downs_);
  register_module("ups", ups_);
}

torch::Tensor UNetGeneratorImpl::forward(torch::Tensor x) {
  if (x.dim() != 4 || x.size(1) != spec_.in_channels)
    throw std::invalid_argument("generator forward: expected NCHW with " +
                                std::to_string(spec_.in_channels) + " channels");
  const auto h = static_cast<int>(x.size(2));
  const auto w = static_cast<int>(x.size(3));
  const int unit = 1 << GeneratorSpec::kDepth;  // 128
  const int th = std::max(unit, round_up(h, unit));
  const int tw = std::max(unit, round_up(w, unit));
  const int pt = (th - h) / 2, pb = th - h - pt;
  const int pl = (tw - w) / 2, pr = tw - w - pl;
  if (th != h || tw != w) {
    const bool can_reflect = pt < h && pb < h && pl < w && pr < w;
    x = torch::nn::functional::pad(
        x, torch::nn::functional::PadFuncOptions({pl, pr, pt, pb})
               .mode(can_reflect ? torch::kReflect : torch::kReplicate));
  }

  std::vector<torch::Tensor> feats;
  feats.reserve(GeneratorSpec::kDepth);
  torch::Tensor y = x;
  for (const auto& block : *downs_) {
    y = block->as<torch::nn::Sequential>()->forward(y);
    feats.push_back(y);
  }
  y = feats.back();
  for (int k = 0; k < GeneratorSpec::kDepth; ++k) {
    if (k > 0 && spec_.skip_connections)
      y = torch::cat({y, feats[GeneratorSpec::kDepth - 1 - k]}, 1);
    y = ups_[k]->as<torch::nn::Sequential>()->forward(y);
  }

  if (th != h || tw != w)
    y = y.slice(2, pt, pt + h).slice(3, pl, pl + w);
  return y;
}

// ---------------------------------------------------------------------------
// PatchDiscriminator
// ---------------------------------------------------------------------------

PatchDiscriminatorImpl::PatchDiscriminatorImpl(const DiscriminatorSpec& spec) : spec_(spec) {
  spec_.validate();
  const int b = spec_.base_width;
  model_ = torch::nn::Sequential();
  int in = spec_.in_channels;
  const int widths[4] = {b, 2 * b, 4 * b, 8 * b};
  for (int k = 0; k < 4; ++k) {
    model_->push_back(torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, widths[k], 4).stride(2).padding(1)));
    if (k != 0) model_->push_back(torch::nn::InstanceNorm2d(widths[k]));
    model_->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    in = widths[k];
  }
  // stride-1 head keeps the 16x16 grid on 256x256 input
  model_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 1, 3).stride(1).padding(1)));
  model_->push_back(torch::nn::Sigmoid());
  register_module("model", model_);
}

torch::Tensor PatchDiscriminatorImpl::forward(torch::Tensor x) {
  if (x.dim() != 4 || x.size(1) != spec_.in_channels)
    throw std::invalid_argument("discriminator forward: expected NCHW with " +
                                std::to_string(spec_.in_channels) + " channels");
  return model_->forward(x);
}

// ---------------------------------------------------------------------------
// FeatureExtractor
// ---------------------------------------------------------------------------

FeatureExtractorImpl::FeatureExtractorImpl(const FeatureExtractorSpec& spec) : spec_(spec) {
  spec_.validate();
  features_ = torch::nn::Sequential();
  std::vector<std::size_t> block_ends;

  if (spec_.kind == ExtractorKind::DeterministicStandIn) {
    const int widths[4] = {16, 32, 64, 64};
    int in = 3;
    for (int k = 0; k < 4; ++k) {
      features_->push_back(torch::nn::Conv2d(
          torch::nn::Conv2dOptions(in, widths[k], 3).stride(1).padding(1)));
      features_->push_back(torch::nn::ReLU());
      features_->push_back(torch::nn::AvgPool2d(torch::nn::AvgPool2dOptions(2)));
      block_ends.push_back(features_->size() - 1);
      in = widths[k];
    }
  } else {
    // VGG-19 feature stack; taps sit on relu<k>_1 as usual for style losses
    const std::vector<std::vector<int>> blocks = {
        {64, 64}, {128, 128}, {256, 256, 256, 256}, {512, 512, 512, 512}, {512, 512, 512, 512}};
    int in = 3;
    for (const auto& block : blocks) {
      bool first = true;
      for (int width : block) {
        features_->push_back(torch::nn::Conv2d(
            torch::nn::Conv2dOptions(in, width, 3).stride(1).padding(1)));
        features_->push_back(torch::nn::ReLU());
        if (first) {
          block_ends.push_back(features_->size() - 1);
          first = false;
        }
        in = width;
      }
      features_->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2)));
    }
  }

  for (int tap : spec_.tap_layers) tap_positions_.push_back(block_ends[tap - 1]);
  register_module("features", features_);

  if (spec_.kind == ExtractorKind::DeterministicStandIn) {
    torch::manual_seed(spec_.seed);
    torch::NoGradGuard guard;
    for (auto& p : named_parameters()) {
      if (p.value().dim() >= 2)
        torch::nn::init::kaiming_normal_(p.value());
      else
        torch::nn::init::zeros_(p.value());
    }
  }
  for (auto& p : parameters()) p.set_requires_grad(false);
}

std::vector<torch::Tensor> FeatureExtractorImpl::forward_taps(torch::Tensor x) {
  std::vector<torch::Tensor> taps;
  taps.reserve(tap_positions_.size());
  std::size_t idx = 0;
  auto next_tap = tap_positions_.begin();
  for (auto& any : *features_) {
    x = any.forward(x);
    if (next_tap != tap_positions_.end() && idx == *next_tap) {
      taps.push_back(x);
      ++next_tap;
    }
    ++idx;
    if (next_tap == tap_positions_.end()) break;
  }
  return taps;
}

UNetGenerator build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  torch::manual_seed(seed);
  UNetGenerator gen(spec);
  init_weights(*gen);
  return gen;
}

PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed) {
  spec.validate();
  torch::manual_seed(seed);
  PatchDiscriminator disc(spec);
  init_weights(*disc);
  return disc;
}

FeatureExtractor build_feature_extractor(const FeatureExtractorSpec& spec) {
  spec.validate();
  FeatureExtractor extractor(spec);
  if (spec.kind == ExtractorKind::PretrainedVgg19) {
    if (!std::filesystem::exists(spec.weights_path))
      throw std::runtime_error("vgg19 weights not found: " + spec.weights_path);
    torch::serialize::InputArchive archive;
    archive.load_from(spec.weights_path);
    extractor->load(archive);
    for (auto& p : extractor->parameters()) p.set_requires_grad(false);
  }
  return extractor;
}

std::vector<torch::Tensor> extract_features(FeatureExtractor& extractor,
                                            const torch::Tensor& image) {
  if (image.dim() != 4) throw std::invalid_argument("extract_features: expected NCHW input");
  torch::Tensor x = image;
  if (x.size(1) == 1) x = x.repeat({1, 3, 1, 1});  // documented coercion
  if (x.size(1) != 3) throw std::invalid_argument("extract_features: expected 1 or 3 channels");
  return extractor->forward_taps(x);
}

void save_extractor_weights(FeatureExtractor& extractor, const std::string& path) {
  torch::serialize::OutputArchive archive;
  extractor->save(archive);
  archive.save_to(path);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

json weights_to_json(const loss::LossWeights& w) {
  return json{{"alpha1", w.alpha1}, {"beta1", w.beta1}, {"alpha2", w.alpha2},
              {"beta2", w.beta2},   {"gamma", w.gamma}, {"delta", w.delta},
              {"eta", w.eta}};
}

loss::LossWeights weights_from_json(const json& j) {
  loss::LossWeights w;
  w.alpha1 = j.at("alpha1").get<double>();
  w.beta1 = j.at("beta1").get<double>();
  w.alpha2 = j.at("alpha2").get<double>();
  w.beta2 = j.at("beta2").get<double>();
  w.gamma = j.at("gamma").get<double>();
  w.delta = j.at("delta").get<double>();
  w.eta = j.at("eta").get<double>();
  return w;
}

}  // namespace

void save_generator_checkpoint(UNetGenerator& generator, const CheckpointManifest& manifest,
                               const std::string& tag) {
  torch::serialize::OutputArchive archive;
  generator->save(archive);
  archive.save_to(tag + ".ckpt");

  const auto& spec = generator->spec();
  json j;
  j["kind"] = manifest.kind;
  j["arch"] = {{"in_channels", spec.in_channels},
               {"out_channels", spec.out_channels},
               {"base_width", spec.base_width},
               {"skip_connections", spec.skip_connections},
               {"depth", GeneratorSpec::kDepth}};
  j["spec_hash"] = spec.hash();
  j["config_hash"] = manifest.config_hash;
  j["step_count"] = manifest.step_count;
  j["loss_weights"] = weights_to_json(manifest.weights);
  j["seed"] = manifest.seed;
  std::ofstream out(tag + ".json");
  if (!out) throw std::runtime_error("cannot write checkpoint manifest: " + tag + ".json");
  out << j.dump(2) << "\n";
}

std::pair<UNetGenerator, CheckpointManifest> load_generator_checkpoint(const std::string& tag) {
  std::ifstream in(tag + ".json");
  if (!in) throw std::runtime_error("no checkpoint manifest: " + tag + ".json");
  const json j = json::parse(in);

  CheckpointManifest manifest;
  manifest.kind = j.at("kind").get<std::string>();
  manifest.arch.in_channels = j.at("arch").at("in_channels").get<int>();
  manifest.arch.out_channels = j.at("arch").at("out_channels").get<int>();
  manifest.arch.base_width = j.at("arch").at("base_width").get<int>();
  manifest.arch.skip_connections = j.at("arch").at("skip_connections").get<bool>();
  manifest.spec_hash = j.at("spec_hash").get<std::uint64_t>();
  manifest.config_hash = j.at("config_hash").get<std::uint64_t>();
  manifest.step_count = j.at("step_count").get<std::int64_t>();
  manifest.weights = weights_from_json(j.at("loss_weights"));
  manifest.seed = j.at("seed").get<std::uint64_t>();

  if (manifest.arch.hash() != manifest.spec_hash)
    throw std::runtime_error("checkpoint manifest corrupt: spec hash mismatch for " + tag);

  UNetGenerator generator(manifest.arch);
  torch::serialize::InputArchive archive;
  archive.load_from(tag + ".ckpt");
  generator->load(archive);
  return {generator, manifest};
}

UNetGenerator load_generator_checkpoint(const std::string& tag, const GeneratorSpec& expected) {
  auto [generator, manifest] = load_generator_checkpoint(tag);
  if (manifest.spec_hash != expected.hash())
    throw std::runtime_error("checkpoint " + tag + " does not match the expected generator spec");
  return generator;
}

}  // namespace defence::nets
