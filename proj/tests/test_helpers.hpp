#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "defence/image.hpp"

namespace testutil {

// splitmix64-backed uniform floats, independent of any library RNG
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ? seed : 1) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  float uf(float lo = 0.0f, float hi = 1.0f) {
    return lo + static_cast<float>(u01()) * (hi - lo);
  }
};

inline defence::ImageTensor random_image(int h, int w, int c, std::uint64_t seed) {
  defence::ImageTensor img(h, w, c);
  Rng rng(seed);
  for (auto& v : img.data) v = rng.uf();
  return img;
}

inline defence::BinaryMask random_mask(int h, int w, std::uint64_t seed, double density = 0.3) {
  defence::BinaryMask mask(h, w);
  Rng rng(seed);
  for (auto& v : mask.data) v = rng.u01() < density ? 1 : 0;
  return mask;
}

// Smooth synthetic "scene": a few low-frequency sinusoids per channel.
inline defence::ImageTensor smooth_image(int h, int w, int c, std::uint64_t seed) {
  defence::ImageTensor img(h, w, c);
  Rng rng(seed);
  for (int ch = 0; ch < c; ++ch) {
    const double fx = 1.0 + 2.0 * rng.u01();
    const double fy = 1.0 + 2.0 * rng.u01();
    const double px = rng.u01() * 6.28, py = rng.u01() * 6.28;
    const double base = 0.3 + 0.4 * rng.u01();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = base + 0.25 * std::sin(fx * 6.28 * x / w + px) *
                                     std::cos(fy * 6.28 * y / h + py);
        img.at(y, x, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  }
  return img;
}

inline float max_abs_diff(const defence::ImageTensor& a, const defence::ImageTensor& b) {
  float m = 0.0f;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
