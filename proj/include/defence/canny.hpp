#pragma once

#include <vector>

#include "defence/image.hpp"

namespace defence {

/// Canny thresholds are fractions of the maximum (pre-suppression) gradient
/// magnitude, so they are invariant to any rescaling of the input.
struct CannyParams {
  double sigma = 1.4;
  double low = 0.1;
  double high = 0.2;

  void validate() const;
};

struct SobelGradients {
  // Magnitude normalized by 4*sqrt(2), the largest value a 3x3 Sobel pair
  // can produce on unit-range input, so it fits the [0,1] image contract.
  ImageTensor magnitude;
  std::vector<float> orientation;  // atan2(gy, gx), radians, row-major

  float orientation_at(int y, int x) const {
    return orientation[static_cast<std::size_t>(y) * magnitude.width + x];
  }
};

/// Convolve with a normalized Gaussian of radius ceil(3*sigma), reflective
/// borders. A constant image stays constant.
ImageTensor gaussian_smooth(const ImageTensor& gray, double sigma);

SobelGradients sobel_gradients(const ImageTensor& gray);

/// Full edge detection pipeline: luminance -> Gaussian smoothing -> Sobel
/// gradients -> 4-direction non-maximum suppression -> double-threshold
/// hysteresis with 8-connected linking.
EdgeMap canny(const ImageTensor& image, const CannyParams& params = {});

}  // namespace defence
