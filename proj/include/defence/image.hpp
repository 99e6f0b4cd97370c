#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace defence {

// Canonical spatial size every training/inference image is resampled to.
inline constexpr int kTrainingSize = 256;

/// Dense H x W x C image with interleaved channels and unit-interval values.
/// This is the currency every module trades in; conversion to network
/// tensors happens at module boundaries (see torch_bridge.hpp).
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;  // row-major, interleaved

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, float fill = 0.0f);

  float& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const ImageTensor& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
};

/// Strictly binary H x W map. Doubles as the fence mask (1 = fence pixel)
/// and the Canny edge map (1 = edge pixel).
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int h, int w, std::uint8_t fill = 0);

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

  std::size_t size() const { return data.size(); }
};

using FenceMask = BinaryMask;
using EdgeMap = BinaryMask;

/// Hadamard masking: out = image * (1 - mask), i.e. fence pixels zeroed.
/// Throws std::invalid_argument on spatial dim mismatch.
ImageTensor apply_mask(const ImageTensor& image, const FenceMask& mask);

/// Threshold a single-channel soft map into a binary mask, inclusive at the
/// threshold (soft >= threshold -> 1). threshold must lie in (0,1).
FenceMask binarize_mask(const ImageTensor& soft, float threshold = 0.5f);

BinaryMask invert(const BinaryMask& mask);

/// Fraction of pixels set to 1.
double coverage(const BinaryMask& mask);

/// Intersection-over-union of two equally sized masks. Two empty masks -> 1.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Bilinear resample with pixel-center alignment. Same-size inputs are
/// returned unchanged (bit-identical).
ImageTensor resize_bilinear(const ImageTensor& image, int out_height, int out_width);

/// Resample to the canonical 256 x 256 training resolution.
ImageTensor resize_to_training_dims(const ImageTensor& image);

/// ITU-R BT.601 luminance (0.299 R + 0.587 G + 0.114 B); single-channel
/// input passes through, a 4th (alpha) channel is ignored.
ImageTensor to_luminance(const ImageTensor& image);

// File I/O. PNG and JPEG, selected by extension. Images load as [0,1]
// floats (RGB order); masks are 8-bit single-channel PNGs with 255 <=> 1.
// All failures throw std::runtime_error and never produce partial output.
ImageTensor load_image(const std::string& path);
void save_image(const ImageTensor& image, const std::string& path);
FenceMask load_mask(const std::string& path);
void save_mask(const BinaryMask& mask, const std::string& path);

}  // namespace defence
