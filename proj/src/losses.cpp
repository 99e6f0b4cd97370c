#include "defence/losses.hpp"

#include <stdexcept>

#include "defence/torch_bridge.hpp"

namespace defence::loss {

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* op) {
  if (!a.sizes().equals(b.sizes()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

torch::Tensor clamp_scores(const torch::Tensor& s) {
  return s.clamp(kScoreClamp, 1.0 - kScoreClamp);
}

// Gaussian-weighted local filtering with reflect padding, per channel.
torch::Tensor filter2d(const torch::Tensor& x, const torch::Tensor& window) {
  const auto c = x.size(1);
  const auto pad = (window.size(0) - 1) / 2;
  auto kernel = window.unsqueeze(0).unsqueeze(0).expand({c, 1, window.size(0), window.size(1)});
  auto padded = torch::nn::functional::pad(
      x, torch::nn::functional::PadFuncOptions({pad, pad, pad, pad}).mode(torch::kReflect));
  return torch::conv2d(padded, kernel, /*bias=*/{}, /*stride=*/1, /*padding=*/0,
                       /*dilation=*/1, /*groups=*/c);
}

}  // namespace

void SsimParams::validate() const {
  if (window_size < 3 || window_size % 2 == 0)
    throw std::invalid_argument("ssim: window_size must be odd and >= 3");
  if (window_sigma <= 0.0) throw std::invalid_argument("ssim: window_sigma must be > 0");
  if (c1 <= 0.0 || c2 <= 0.0) throw std::invalid_argument("ssim: C1, C2 must be > 0");
}

torch::Tensor l1_loss(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "l1_loss");
  return (a - b).abs().mean();
}

torch::Tensor adversarial_loss_discriminator(const torch::Tensor& real_scores,
                                             const torch::Tensor& fake_scores) {
  return -(torch::log(clamp_scores(real_scores)).mean() +
           torch::log(1.0 - clamp_scores(fake_scores)).mean());
}

torch::Tensor adversarial_loss_generator(const torch::Tensor& fake_scores) {
  return -torch::log(clamp_scores(fake_scores)).mean();
}

torch::Tensor gram_matrix(const torch::Tensor& activation) {
  torch::Tensor act = activation;
  const bool batched = act.dim() == 4;
  if (!batched) {
    if (act.dim() != 3) throw std::invalid_argument("gram_matrix: expected CHW or NCHW");
    act = act.unsqueeze(0);
  }
  const auto n = act.size(0), c = act.size(1), h = act.size(2), w = act.size(3);
  auto flat = act.reshape({n, c, h * w});
  auto gram = torch::bmm(flat, flat.transpose(1, 2)) / static_cast<double>(c * h * w);
  return batched ? gram : gram.squeeze(0);
}

torch::Tensor style_loss(const std::vector<torch::Tensor>& acts_pred,
                         const std::vector<torch::Tensor>& acts_gt) {
  if (acts_pred.size() != acts_gt.size())
    throw std::invalid_argument("style_loss: layer count mismatch");
  if (acts_pred.empty()) throw std::invalid_argument("style_loss: empty activation list");
  torch::Tensor total;
  for (std::size_t i = 0; i < acts_pred.size(); ++i) {
    require_same_shape(acts_pred[i], acts_gt[i], "style_loss");
    auto term = (gram_matrix(acts_pred[i]) - gram_matrix(acts_gt[i])).abs().mean();
    total = i == 0 ? term : total + term;
  }
  return total / static_cast<double>(acts_pred.size());
}

torch::Tensor perceptual_loss(const std::vector<torch::Tensor>& acts_pred,
                              const std::vector<torch::Tensor>& acts_gt) {
  if (acts_pred.size() != acts_gt.size())
    throw std::invalid_argument("perceptual_loss: layer count mismatch");
  if (acts_pred.empty()) throw std::invalid_argument("perceptual_loss: empty activation list");
  torch::Tensor total;
  for (std::size_t i = 0; i < acts_pred.size(); ++i) {
    require_same_shape(acts_pred[i], acts_gt[i], "perceptual_loss");
    // (1/N_i) * ||.||_1 over one sample = elementwise mean; batched inputs
    // average the per-sample terms.
    auto term = (acts_gt[i] - acts_pred[i]).abs().mean();
    total = i == 0 ? term : total + term;
  }
  return total;
}

torch::Tensor gaussian_window(int size, double sigma, torch::ScalarType dtype) {
  auto coords = torch::arange(size, torch::TensorOptions().dtype(dtype)) - (size - 1) / 2.0;
  auto g = torch::exp(-coords.square() / (2.0 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g);
}

torch::Tensor ssim_map(const torch::Tensor& x, const torch::Tensor& y,
                       const SsimParams& params) {
  params.validate();
  require_same_shape(x, y, "ssim_map");
  if (x.dim() != 4) throw std::invalid_argument("ssim_map: expected NCHW input");
  const auto window = gaussian_window(params.window_size, params.window_sigma, x.scalar_type());

  const auto mu_x = filter2d(x, window);
  const auto mu_y = filter2d(y, window);
  const auto var_x = filter2d(x * x, window) - mu_x * mu_x;
  const auto var_y = filter2d(y * y, window) - mu_y * mu_y;
  const auto cov_xy = filter2d(x * y, window) - mu_x * mu_y;

  const auto num = (2.0 * mu_x * mu_y + params.c1) * (2.0 * cov_xy + params.c2);
  const auto den = (mu_x * mu_x + mu_y * mu_y + params.c1) * (var_x + var_y + params.c2);
  return (num / den).mean(/*dim=*/1, /*keepdim=*/true);
}

torch::Tensor ssim_loss(const torch::Tensor& x, const torch::Tensor& y,
                        const SsimParams& params) {
  return (1.0 - ssim_map(x, y, params)).mean();
}

double total_stage1_loss(double adv_g, double l1, const LossWeights& w) {
  return w.alpha1 * adv_g + w.beta1 * l1;
}

torch::Tensor total_stage1_loss(const torch::Tensor& adv_g, const torch::Tensor& l1,
                                const LossWeights& w) {
  return w.alpha1 * adv_g + w.beta1 * l1;
}

LossBundle total_stage2_loss(double adv_g, double l1, double perc, double style, double ssim,
                             const LossWeights& w) {
  LossBundle b;
  b.adv = adv_g;
  b.l1 = l1;
  b.perc = perc;
  b.style = style;
  b.ssim = ssim;
  b.total = w.alpha2 * adv_g + w.beta2 * l1 + w.gamma * perc + w.delta * style + w.eta * ssim;
  return b;
}

torch::Tensor total_stage2_loss(const torch::Tensor& adv_g, const torch::Tensor& l1,
                                const torch::Tensor& perc, const torch::Tensor& style,
                                const torch::Tensor& ssim, const LossWeights& w) {
  return w.alpha2 * adv_g + w.beta2 * l1 + w.gamma * perc + w.delta * style + w.eta * ssim;
}

ImageTensor ssim_map(const ImageTensor& x, const ImageTensor& y, const SsimParams& params) {
  auto map = ssim_map(to_tensor(x, torch::kFloat64), to_tensor(y, torch::kFloat64), params);
  // SSIM lives in [-1,1]; bypass the [0,1] clamp of image_from_tensor.
  map = map.squeeze(0).permute({1, 2, 0}).contiguous().to(torch::kFloat32);
  ImageTensor out(x.height, x.width, 1);
  std::memcpy(out.data.data(), map.data_ptr<float>(), out.data.size() * sizeof(float));
  return out;
}

double ssim_loss(const ImageTensor& x, const ImageTensor& y, const SsimParams& params) {
  return ssim_loss(to_tensor(x, torch::kFloat64), to_tensor(y, torch::kFloat64), params)
      .item<double>();
}

double ssim_mean(const ImageTensor& x, const ImageTensor& y, const SsimParams& params) {
  return ssim_map(to_tensor(x, torch::kFloat64), to_tensor(y, torch::kFloat64), params)
      .mean()
      .item<double>();
}

double l1_distance(const ImageTensor& a, const ImageTensor& b) {
  return l1_loss(to_tensor(a, torch::kFloat64), to_tensor(b, torch::kFloat64)).item<double>();
}

}  // namespace defence::loss
