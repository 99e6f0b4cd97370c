#pragma once

// Independent brute-force reference implementations used by the unit and
// acceptance suites. These deliberately avoid the library's tensor code
// paths: plain loops, double precision.

#include <cmath>
#include <vector>

#include "defence/image.hpp"

namespace oracle {

// reflect-101 folding, the same border convention the library advertises
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

inline std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> g(size);
  double sum = 0.0;
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

/// Direct sliding-window SSIM map: per pixel, per channel, the Wang et al.
/// statistics accumulated with explicit double loops, then channel-averaged.
inline defence::ImageTensor ssim_map_reference(const defence::ImageTensor& x,
                                               const defence::ImageTensor& y,
                                               int window = 11, double sigma = 1.5,
                                               double c1 = 1e-4, double c2 = 9e-4) {
  const int h = x.height, w = x.width, ch = x.channels;
  const int r = (window - 1) / 2;
  const auto g = gaussian_taps(window, sigma);

  defence::ImageTensor map(h, w, 1);
  for (int py = 0; py < h; ++py)
    for (int px = 0; px < w; ++px) {
      double acc = 0.0;
      for (int c = 0; c < ch; ++c) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int j = -r; j <= r; ++j)
          for (int i = -r; i <= r; ++i) {
            const double weight = g[j + r] * g[i + r];
            const double vx = x.at(reflect(py + j, h), reflect(px + i, w), c);
            const double vy = y.at(reflect(py + j, h), reflect(px + i, w), c);
            mx += weight * vx;
            my += weight * vy;
            mxx += weight * vx * vx;
            myy += weight * vy * vy;
            mxy += weight * vx * vy;
          }
        const double var_x = mxx - mx * mx;
        const double var_y = myy - my * my;
        const double cov = mxy - mx * my;
        acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (var_x + var_y + c2));
      }
      map.at(py, px, 0) = static_cast<float>(acc / ch);
    }
  return map;
}

}  // namespace oracle
