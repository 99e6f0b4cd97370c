#pragma once

#include <string>
#include <vector>

#include "defence/canny.hpp"
#include "defence/image.hpp"
#include "defence/nets.hpp"

namespace defence::pipeline {

struct PairMetrics {
  double ssim = 0.0;
  double psnr = 0.0;  // dB, capped at 99 for identical images
  double l1 = 0.0;
};

struct EvalReport {
  struct Item {
    std::string name;
    PairMetrics metrics;
  };
  std::vector<Item> items;
  PairMetrics means;
  std::vector<std::string> missing;  // unmatched or unreadable, excluded from means
};

PairMetrics pair_metrics(const ImageTensor& pred, const ImageTensor& gt);

/// Mask-then-recover chain at the input's native resolution:
/// G1 -> binarize(0.5) -> Hadamard masking -> G2.
ImageTensor two_stage_forward(const ImageTensor& image, nets::UNetGenerator& mask_generator,
                              nets::UNetGenerator& recovery_generator);

/// Edge-conditioned single forward pass at native resolution.
ImageTensor single_stage_forward(const ImageTensor& image, nets::UNetGenerator& generator,
                                 const CannyParams& params = {});

/// Published inference entry points: resize to 256x256, load checkpoints,
/// run the chain. Checkpoints with the wrong channel layout are rejected.
ImageTensor defence_two_stage(const ImageTensor& image, const std::string& ckpt_mask,
                              const std::string& ckpt_recover);
ImageTensor defence_single_stage(const ImageTensor& image, const std::string& ckpt,
                                 const CannyParams& params = {});

/// Compare directories of aligned filenames; SSIM/PSNR/L1 per pair plus
/// corpus means. Files without a readable counterpart of equal size are
/// listed under `missing` and excluded from the means.
EvalReport evaluate(const std::string& pred_dir, const std::string& gt_dir);

void write_report(const EvalReport& report, const std::string& path);

}  // namespace defence::pipeline
