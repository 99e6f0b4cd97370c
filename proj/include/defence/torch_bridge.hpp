#pragma once

#include <torch/torch.h>

#include "defence/image.hpp"

namespace defence {

/// ImageTensor (H x W x C, interleaved) -> 1 x C x H x W tensor.
torch::Tensor to_tensor(const ImageTensor& image,
                        torch::ScalarType dtype = torch::kFloat32);

/// BinaryMask -> 1 x 1 x H x W tensor of {0,1}.
torch::Tensor to_tensor(const BinaryMask& mask,
                        torch::ScalarType dtype = torch::kFloat32);

/// C x H x W or 1 x C x H x W tensor -> ImageTensor, values clamped to [0,1].
ImageTensor image_from_tensor(const torch::Tensor& tensor);

/// Single-channel tensor -> BinaryMask via inclusive threshold.
BinaryMask mask_from_tensor(const torch::Tensor& tensor, float threshold = 0.5f);

}  // namespace defence
