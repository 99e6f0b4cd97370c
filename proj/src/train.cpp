#include "defence/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "defence/torch_bridge.hpp"

namespace defence::train {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic epoch shuffle, independent of the torch RNG stream.
std::vector<std::int64_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::int64_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::int64_t>(i);
  std::uint64_t state = fnv1a(fnv1a(14695981039346656037ULL, &seed, sizeof(seed)), &epoch, sizeof(epoch));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(splitmix(state) % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

struct StackedData {
  torch::Tensor fenced;  // N x 3 x H x W
  torch::Tensor clean;   // N x 3 x H x W
  torch::Tensor mask;    // N x 1 x H x W
};

StackedData stack_dataset(const std::vector<fence::TrainingTriple>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("training: dataset is empty");
  std::vector<torch::Tensor> fenced, clean, mask;
  for (const auto& t : dataset) {
    if (t.fenced.channels != 3 || t.clean.channels != 3)
      throw std::invalid_argument("training: triples must hold RGB images");
    fenced.push_back(to_tensor(t.fenced));
    clean.push_back(to_tensor(t.clean));
    mask.push_back(to_tensor(t.mask));
  }
  return {torch::cat(fenced, 0), torch::cat(clean, 0), torch::cat(mask, 0)};
}

struct StageSetup {
  std::string kind;
  torch::Tensor g_input;    // N x Cin x H x W
  torch::Tensor condition;  // N x Cc x H x W, discriminator conditioning
  torch::Tensor target;     // N x Cout x H x W
  bool composite = false;   // full stage-2 objective vs adversarial + L1
  nets::FeatureExtractor* extractor = nullptr;
};

class CsvLog {
 public:
  explicit CsvLog(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write loss log: " + path);
    out_ << "step,epoch,adv,l1,perc,style,ssim,total,d_loss\n";
  }
  void row(std::int64_t step, int epoch, const loss::LossBundle& b, double d_loss) {
    char line[320];
    std::snprintf(line, sizeof(line), "%lld,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(step), epoch, b.adv, b.l1, b.perc, b.style, b.ssim,
                  b.total, d_loss);
    out_ << line;
  }

 private:
  std::ofstream out_;
};

TrainResult run_gan_training(const StageSetup& setup, const TrainingConfig& config,
                             const std::string& out_tag) {
  config.validate();

  const auto n = setup.g_input.size(0);
  nets::GeneratorSpec gspec{static_cast<int>(setup.g_input.size(1)),
                            static_cast<int>(setup.target.size(1)), config.net_width, true};
  nets::DiscriminatorSpec dspec{static_cast<int>(setup.target.size(1) + setup.condition.size(1)),
                                config.net_width};
  auto generator = nets::build_generator(gspec, config.seed);
  auto discriminator = nets::build_discriminator(dspec, config.seed + 1);

  torch::optim::Adam g_opt(generator->parameters(),
                           torch::optim::AdamOptions(config.learning_rate)
                               .betas({config.adam_beta1, config.adam_beta2}));
  torch::optim::Adam d_opt(discriminator->parameters(),
                           torch::optim::AdamOptions(config.learning_rate)
                               .betas({config.adam_beta1, config.adam_beta2}));

  CsvLog log(out_tag + ".csv");
  LossHistory history;
  std::int64_t step = 0;

  nets::CheckpointManifest manifest;
  manifest.kind = setup.kind;
  manifest.arch = gspec;
  manifest.spec_hash = gspec.hash();
  manifest.config_hash = config.hash();
  manifest.weights = config.weights;
  manifest.seed = config.seed;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto order = epoch_order(static_cast<std::size_t>(n), config.seed, epoch);
    double epoch_total = 0.0;
    int epoch_steps = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto count = std::min<std::size_t>(config.batch_size, order.size() - start);
      const auto idx = torch::tensor(
          std::vector<std::int64_t>(order.begin() + start, order.begin() + start + count));
      const auto x = setup.g_input.index_select(0, idx);
      const auto cond = setup.condition.index_select(0, idx);
      const auto target = setup.target.index_select(0, idx);
      ++step;

      // discriminator step (generator output detached)
      d_opt.zero_grad();
      const auto fake_detached = generator->forward(x).detach();
      const auto d_loss_t = loss::adversarial_loss_discriminator(
          discriminator->forward(torch::cat({target, cond}, 1)),
          discriminator->forward(torch::cat({fake_detached, cond}, 1)));
      d_loss_t.backward();
      d_opt.step();

      // generator step on a fresh graph
      g_opt.zero_grad();
      const auto pred = generator->forward(x);
      const auto adv = loss::adversarial_loss_generator(
          discriminator->forward(torch::cat({pred, cond}, 1)));
      const auto l1 = loss::l1_loss(pred, target);

      loss::LossBundle bundle;
      torch::Tensor g_total;
      if (setup.composite) {
        const auto acts_pred = nets::extract_features(*setup.extractor, pred);
        const auto acts_gt = nets::extract_features(*setup.extractor, target);
        const auto perc = loss::perceptual_loss(acts_pred, acts_gt);
        const auto style = loss::style_loss(acts_pred, acts_gt);
        const auto ssim = loss::ssim_loss(pred, target);
        g_total = loss::total_stage2_loss(adv, l1, perc, style, ssim, config.weights);
        bundle = loss::total_stage2_loss(adv.item<double>(), l1.item<double>(),
                                         perc.item<double>(), style.item<double>(),
                                         ssim.item<double>(), config.weights);
      } else {
        g_total = loss::total_stage1_loss(adv, l1, config.weights);
        bundle.adv = adv.item<double>();
        bundle.l1 = l1.item<double>();
        bundle.total = loss::total_stage1_loss(bundle.adv, bundle.l1, config.weights);
      }
      g_total.backward();
      g_opt.step();

      const double d_loss = d_loss_t.item<double>();
      if (!std::isfinite(bundle.total) || !std::isfinite(d_loss)) {
        std::ostringstream msg;
        msg << setup.kind << ": non-finite loss at step " << step << " (total=" << bundle.total
            << ", d=" << d_loss << ")";
        throw std::runtime_error(msg.str());
      }
      log.row(step, epoch, bundle, d_loss);
      epoch_total += bundle.total;
      ++epoch_steps;

      if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
        manifest.step_count = step;
        nets::save_generator_checkpoint(generator, manifest,
                                        out_tag + "_step" + std::to_string(step));
      }
    }

    history.push_back(epoch_total / epoch_steps);
    if (convergence_check(history, config.epsilon)) break;
  }

  manifest.step_count = step;
  nets::save_generator_checkpoint(generator, manifest, out_tag);
  return {out_tag, manifest, history, step};
}

}  // namespace

bool convergence_check(const LossHistory& history, double epsilon) {
  if (history.empty()) throw std::invalid_argument("convergence_check: empty history");
  if (history.size() < 2) return false;
  return std::abs(history[history.size() - 1] - history[history.size() - 2]) < epsilon;
}

void TrainingConfig::validate() const {
  if (max_epochs < 1) throw std::invalid_argument("config: max_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (learning_rate <= 0.0) throw std::invalid_argument("config: learning_rate must be > 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
    throw std::invalid_argument("config: adam betas must lie in [0,1)");
  if (epsilon <= 0.0) throw std::invalid_argument("config: epsilon must be > 0");
  if (net_width < 1) throw std::invalid_argument("config: net_width must be >= 1");
  if (checkpoint_every < 0) throw std::invalid_argument("config: checkpoint_every must be >= 0");
  canny.validate();
}

std::uint64_t TrainingConfig::hash() const {
  std::ostringstream s;
  s << max_epochs << '|' << batch_size << '|' << learning_rate << '|' << adam_beta1 << '|'
    << adam_beta2 << '|' << seed << '|' << epsilon << '|' << checkpoint_every << '|' << net_width
    << '|' << weights.alpha1 << '|' << weights.beta1 << '|' << weights.alpha2 << '|'
    << weights.beta2 << '|' << weights.gamma << '|' << weights.delta << '|' << weights.eta << '|'
    << canny.sigma << '|' << canny.low << '|' << canny.high << '|' << use_edge_channel;
  const std::string str = s.str();
  return fnv1a(14695981039346656037ULL, str.data(), str.size());
}

TrainingConfig TrainingConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read training config: " + path);
  TrainingConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    if (key.empty()) continue;
    std::istringstream vals(line.substr(eq + 1));
    double v;
    if (!(vals >> v))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected number");
    if (key == "max_epochs") cfg.max_epochs = static_cast<int>(v);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(v);
    else if (key == "learning_rate") cfg.learning_rate = v;
    else if (key == "adam_beta1") cfg.adam_beta1 = v;
    else if (key == "adam_beta2") cfg.adam_beta2 = v;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(v);
    else if (key == "epsilon") cfg.epsilon = v;
    else if (key == "checkpoint_every") cfg.checkpoint_every = static_cast<int>(v);
    else if (key == "net_width") cfg.net_width = static_cast<int>(v);
    else if (key == "alpha1") cfg.weights.alpha1 = v;
    else if (key == "beta1") cfg.weights.beta1 = v;
    else if (key == "alpha2") cfg.weights.alpha2 = v;
    else if (key == "beta2") cfg.weights.beta2 = v;
    else if (key == "gamma") cfg.weights.gamma = v;
    else if (key == "delta") cfg.weights.delta = v;
    else if (key == "eta") cfg.weights.eta = v;
    else if (key == "canny_sigma") cfg.canny.sigma = v;
    else if (key == "canny_low") cfg.canny.low = v;
    else if (key == "canny_high") cfg.canny.high = v;
    else if (key == "use_edge_channel") cfg.use_edge_channel = v != 0.0;
    else
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrainResult train_mask_generator(const std::vector<fence::TrainingTriple>& dataset,
                                 const TrainingConfig& config, const std::string& out_tag) {
  const auto data = stack_dataset(dataset);
  StageSetup setup;
  setup.kind = "mask_generator";
  setup.g_input = data.fenced;
  setup.condition = data.fenced;
  setup.target = data.mask;
  return run_gan_training(setup, config, out_tag);
}

TrainResult train_recovering_network(const std::vector<fence::TrainingTriple>& dataset,
                                     const TrainingConfig& config,
                                     nets::FeatureExtractor& extractor,
                                     const std::string& out_tag) {
  const auto data = stack_dataset(dataset);
  const auto masked = data.fenced * (1.0 - data.mask);  // ground-truth masks during training
  StageSetup setup;
  setup.kind = "recovery_generator";
  setup.g_input = masked;
  setup.condition = masked;
  setup.target = data.clean;
  setup.composite = true;
  setup.extractor = &extractor;
  return run_gan_training(setup, config, out_tag);
}

TrainResult train_single_stage(const std::vector<fence::TrainingTriple>& dataset,
                               const TrainingConfig& config, nets::FeatureExtractor& extractor,
                               const std::string& out_tag) {
  const auto data = stack_dataset(dataset);
  StageSetup setup;
  setup.kind = "single_stage_generator";
  if (config.use_edge_channel) {
    std::vector<torch::Tensor> edges;
    edges.reserve(dataset.size());
    for (const auto& t : dataset) edges.push_back(to_tensor(canny(t.fenced, config.canny)));
    setup.g_input = torch::cat({data.fenced, torch::cat(edges, 0)}, 1);
  } else {
    setup.g_input = data.fenced;
  }
  setup.condition = data.fenced;
  setup.target = data.clean;
  setup.composite = true;
  setup.extractor = &extractor;
  return run_gan_training(setup, config, out_tag);
}

}  // namespace defence::train
