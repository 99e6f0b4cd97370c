#include "defence/canny.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace defence {

namespace {

// Reflect-101 index folding: ..., 2, 1, | 0, 1, ..., n-1 | n-2, n-3, ...
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

struct RawGradients {
  std::vector<double> gx, gy, mag;
  int height = 0, width = 0;
  double max_mag = 0.0;
};

RawGradients raw_sobel(const ImageTensor& gray) {
  static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  RawGradients g;
  g.height = gray.height;
  g.width = gray.width;
  const std::size_t n = static_cast<std::size_t>(g.height) * g.width;
  g.gx.assign(n, 0.0);
  g.gy.assign(n, 0.0);
  g.mag.assign(n, 0.0);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      double dx = 0.0, dy = 0.0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          const double v = gray.at(reflect(y + j, g.height), reflect(x + i, g.width), 0);
          dx += kx[j + 1][i + 1] * v;
          dy += kx[i + 1][j + 1] * v;  // gy kernel is the transpose
        }
      const std::size_t idx = static_cast<std::size_t>(y) * g.width + x;
      g.gx[idx] = dx;
      g.gy[idx] = dy;
      g.mag[idx] = std::hypot(dx, dy);
      g.max_mag = std::max(g.max_mag, g.mag[idx]);
    }
  return g;
}

}  // namespace

void CannyParams::validate() const {
  if (sigma <= 0.0) throw std::invalid_argument("canny: sigma must be > 0");
  if (low <= 0.0 || high >= 1.0 || low >= high)
    throw std::invalid_argument("canny: thresholds must satisfy 0 < low < high < 1");
}

ImageTensor gaussian_smooth(const ImageTensor& gray, double sigma) {
  if (gray.channels != 1) throw std::invalid_argument("gaussian_smooth: expects 1 channel");
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_smooth: sigma must be > 0");
  const auto k = gaussian_kernel(sigma);
  const int radius = (static_cast<int>(k.size()) - 1) / 2;

  // separable: rows then columns
  ImageTensor tmp(gray.height, gray.width, 1);
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * gray.at(y, reflect(x + i, gray.width), 0);
      tmp.at(y, x, 0) = static_cast<float>(acc);
    }
  ImageTensor out(gray.height, gray.width, 1);
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * tmp.at(reflect(y + i, gray.height), x, 0);
      out.at(y, x, 0) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  return out;
}

SobelGradients sobel_gradients(const ImageTensor& gray) {
  if (gray.channels != 1) throw std::invalid_argument("sobel_gradients: expects 1 channel");
  const RawGradients g = raw_sobel(gray);
  const double norm = 4.0 * std::numbers::sqrt2;
  SobelGradients out;
  out.magnitude = ImageTensor(gray.height, gray.width, 1);
  out.orientation.resize(g.mag.size());
  for (std::size_t i = 0; i < g.mag.size(); ++i) {
    out.magnitude.data[i] = static_cast<float>(g.mag[i] / norm);
    out.orientation[i] = static_cast<float>(std::atan2(g.gy[i], g.gx[i]));
  }
  return out;
}

EdgeMap canny(const ImageTensor& image, const CannyParams& params) {
  params.validate();
  const ImageTensor gray = to_luminance(image);
  const ImageTensor smooth = gaussian_smooth(gray, params.sigma);
  const RawGradients g = raw_sobel(smooth);

  const int h = g.height, w = g.width;
  EdgeMap edges(h, w);
  if (g.max_mag <= 0.0) return edges;  // constant image

  // Non-maximum suppression across the gradient direction, quantized to
  // 0 / 45 / 90 / 135 degrees.
  std::vector<double> nms(g.mag.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      const double m = g.mag[idx];
      if (m <= 0.0) continue;
      double angle = std::atan2(g.gy[idx], g.gx[idx]) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      int dx = 1, dy = 0;  // sector 0: horizontal gradient, compare left/right
      if (angle >= 22.5 && angle < 67.5) { dx = 1; dy = 1; }
      else if (angle >= 67.5 && angle < 112.5) { dx = 0; dy = 1; }
      else if (angle >= 112.5 && angle < 157.5) { dx = -1; dy = 1; }
      const double n1 = g.mag[static_cast<std::size_t>(reflect(y + dy, h)) * w + reflect(x + dx, w)];
      const double n2 = g.mag[static_cast<std::size_t>(reflect(y - dy, h)) * w + reflect(x - dx, w)];
      if (m >= n1 && m >= n2) nms[idx] = m;
    }

  const double high = params.high * g.max_mag;
  const double low = params.low * g.max_mag;

  // Hysteresis: flood from strong pixels through weak ones, 8-connected.
  std::vector<std::size_t> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (nms[idx] >= high && !edges.data[idx]) {
        edges.data[idx] = 1;
        stack.push_back(idx);
        while (!stack.empty()) {
          const std::size_t cur = stack.back();
          stack.pop_back();
          const int cy = static_cast<int>(cur) / w;
          const int cx = static_cast<int>(cur) % w;
          for (int j = -1; j <= 1; ++j)
            for (int i = -1; i <= 1; ++i) {
              const int ny = cy + j, nx = cx + i;
              if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
              const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
              if (!edges.data[nidx] && nms[nidx] >= low) {
                edges.data[nidx] = 1;
                stack.push_back(nidx);
              }
            }
        }
      }
    }
  return edges;
}

}  // namespace defence
