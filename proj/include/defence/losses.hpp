#pragma once

#include <vector>

#include <torch/torch.h>

#include "defence/image.hpp"

namespace defence::loss {

/// Wang et al. SSIM constants for unit dynamic range: C1=(0.01L)^2,
/// C2=(0.03L)^2 with L=1, computed over an 11x11 Gaussian window (sigma 1.5).
struct SsimParams {
  int window_size = 11;
  double window_sigma = 1.5;
  double c1 = 1e-4;
  double c2 = 9e-4;

  void validate() const;
};

/// Composite-objective weights. Stage 1 uses (alpha1, beta1); stage 2 and
/// the single-stage network use (alpha2, beta2, gamma, delta, eta).
struct LossWeights {
  double alpha1 = 1.0;   // stage-1 adversarial
  double beta1 = 10.0;   // stage-1 L1
  double alpha2 = 0.1;   // stage-2 adversarial
  double beta2 = 10.0;   // stage-2 L1
  double gamma = 2.0;    // perceptual
  double delta = 1.0;    // style
  double eta = 1.0;      // SSIM
};

/// Named scalar components of one stage-2 / single-stage optimization step.
struct LossBundle {
  double adv = 0.0;
  double l1 = 0.0;
  double perc = 0.0;
  double style = 0.0;
  double ssim = 0.0;
  double total = 0.0;
};

// Discriminator scores are clamped into [kScoreClamp, 1-kScoreClamp] before
// any logarithm so saturated discriminators keep losses finite.
inline constexpr double kScoreClamp = 1e-7;

/// Mean absolute difference. Shapes must match.
torch::Tensor l1_loss(const torch::Tensor& a, const torch::Tensor& b);

/// -[mean log(real) + mean log(1 - fake)], averaged over the patch grid.
torch::Tensor adversarial_loss_discriminator(const torch::Tensor& real_scores,
                                             const torch::Tensor& fake_scores);

/// Non-saturating generator objective: -mean log(fake).
torch::Tensor adversarial_loss_generator(const torch::Tensor& fake_scores);

/// G[p,q] = <vec(channel p), vec(channel q)> / (C*H*W). Accepts CHW or
/// batched NCHW (per-sample grams).
torch::Tensor gram_matrix(const torch::Tensor& activation);

/// Mean over layers of the entrywise-mean L1 distance between gram matrices.
torch::Tensor style_loss(const std::vector<torch::Tensor>& acts_pred,
                         const std::vector<torch::Tensor>& acts_gt);

/// Sum over layers of (1/N_i) * ||a_i(gt) - a_i(pred)||_1.
torch::Tensor perceptual_loss(const std::vector<torch::Tensor>& acts_pred,
                              const std::vector<torch::Tensor>& acts_gt);

/// Normalized 2-D Gaussian filter window.
torch::Tensor gaussian_window(int size, double sigma, torch::ScalarType dtype);

/// Per-pixel SSIM over local Gaussian statistics (reflect padding), channel
/// mean; input NCHW, output N x 1 x H x W with values in [-1, 1].
torch::Tensor ssim_map(const torch::Tensor& x, const torch::Tensor& y,
                       const SsimParams& params = {});

/// mean_p (1 - SSIM(p)), in [0, 2]; zero iff the images are identical.
torch::Tensor ssim_loss(const torch::Tensor& x, const torch::Tensor& y,
                        const SsimParams& params = {});

double total_stage1_loss(double adv_g, double l1, const LossWeights& w = {});
torch::Tensor total_stage1_loss(const torch::Tensor& adv_g, const torch::Tensor& l1,
                                const LossWeights& w = {});

LossBundle total_stage2_loss(double adv_g, double l1, double perc, double style, double ssim,
                             const LossWeights& w = {});
torch::Tensor total_stage2_loss(const torch::Tensor& adv_g, const torch::Tensor& l1,
                                const torch::Tensor& perc, const torch::Tensor& style,
                                const torch::Tensor& ssim, const LossWeights& w = {});

// ImageTensor conveniences (computed at float64).
ImageTensor ssim_map(const ImageTensor& x, const ImageTensor& y, const SsimParams& params = {});
double ssim_loss(const ImageTensor& x, const ImageTensor& y, const SsimParams& params = {});
double ssim_mean(const ImageTensor& x, const ImageTensor& y, const SsimParams& params = {});
double l1_distance(const ImageTensor& a, const ImageTensor& b);

}  // namespace defence::loss
