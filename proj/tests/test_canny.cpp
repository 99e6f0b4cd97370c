#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "defence/canny.hpp"
#include "test_helpers.hpp"

using namespace defence;

namespace {

// Recompute the suppressed magnitude surface from public building blocks;
// used to validate the thinness/hysteresis properties of canny() output.
struct NmsSurface {
  std::vector<double> nms;
  double max_mag = 0.0;
  int h = 0, w = 0;
};

NmsSurface nms_surface(const ImageTensor& image, const CannyParams& p) {
  const auto grads = sobel_gradients(gaussian_smooth(to_luminance(image), p.sigma));
  const auto& mag = grads.magnitude;
  NmsSurface s;
  s.h = mag.height;
  s.w = mag.width;
  s.nms.assign(static_cast<std::size_t>(s.h) * s.w, 0.0);
  for (const float v : mag.data) s.max_mag = std::max<double>(s.max_mag, v);
  for (int y = 1; y < s.h - 1; ++y)
    for (int x = 1; x < s.w - 1; ++x) {
      const double m = mag.at(y, x, 0);
      if (m <= 0.0) continue;
      double angle = grads.orientation_at(y, x) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      int dx = 1, dy = 0;
      if (angle >= 22.5 && angle < 67.5) { dx = 1; dy = 1; }
      else if (angle >= 67.5 && angle < 112.5) { dx = 0; dy = 1; }
      else if (angle >= 112.5 && angle < 157.5) { dx = -1; dy = 1; }
      if (m >= mag.at(y + dy, x + dx, 0) && m >= mag.at(y - dy, x - dx, 0))
        s.nms[static_cast<std::size_t>(y) * s.w + x] = m;
    }
  return s;
}

ImageTensor white_square(int size, int square) {
  ImageTensor img(size, size, 1, 0.0f);
  const int lo = (size - square) / 2, hi = lo + square;
  for (int y = lo; y < hi; ++y)
    for (int x = lo; x < hi; ++x) img.at(y, x, 0) = 1.0f;
  return img;
}

}  // namespace

TEST_CASE("gaussian_smooth preserves constants and mass") {
  const ImageTensor constant(24, 24, 1, 0.42f);
  const auto smoothed = gaussian_smooth(constant, 1.4);
  for (float v : smoothed.data) CHECK(v == doctest::Approx(0.42f).epsilon(1e-6));

  // interior-dominated image: all mass far from the border
  ImageTensor impulse(33, 33, 1, 0.0f);
  impulse.at(16, 16, 0) = 1.0f;
  const auto out = gaussian_smooth(impulse, 1.0);
  double sum = 0.0;
  for (float v : out.data) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("gaussian impulse response peaks at the kernel center weight") {
  ImageTensor impulse(33, 33, 1, 0.0f);
  impulse.at(16, 16, 0) = 1.0f;
  const double sigma = 1.0;
  const auto out = gaussian_smooth(impulse, sigma);

  // evaluate the analytic normalized kernel independently
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  double sum = 0.0, center = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-i * i / (2.0 * sigma * sigma));
    sum += v;
    if (i == 0) center = v;
  }
  const double w0 = center / sum;  // separable: 2-D center weight is w0^2
  CHECK(out.at(16, 16, 0) == doctest::Approx(w0 * w0).epsilon(1e-6));
}

TEST_CASE("sobel of a constant image is zero") {
  const auto grads = sobel_gradients(ImageTensor(16, 16, 1, 0.77f));
  for (float v : grads.magnitude.data) CHECK(v == doctest::Approx(0.0f).epsilon(1e-6));
}

TEST_CASE("sobel on a vertical step: horizontal gradient at the step") {
  ImageTensor step(16, 16, 1, 0.0f);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x) step.at(y, x, 0) = 1.0f;
  const auto grads = sobel_gradients(step);

  // hand convolution: columns 7 and 8 see gx = 4, everything else 0
  const float expected = static_cast<float>(4.0 / (4.0 * std::numbers::sqrt2));
  for (int y = 2; y < 14; ++y) {
    CHECK(grads.magnitude.at(y, 7, 0) == doctest::Approx(expected).epsilon(1e-5));
    CHECK(grads.magnitude.at(y, 8, 0) == doctest::Approx(expected).epsilon(1e-5));
    CHECK(std::abs(grads.orientation_at(y, 7)) < 1e-6);  // gradient points along +x
    CHECK(grads.magnitude.at(y, 3, 0) == doctest::Approx(0.0f).epsilon(1e-6));
  }
}

TEST_CASE("sobel transpose symmetry") {
  const auto img = testutil::smooth_image(20, 20, 1, 21);
  ImageTensor transposed(20, 20, 1);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) transposed.at(y, x, 0) = img.at(x, y, 0);
  const auto a = sobel_gradients(img);
  const auto b = sobel_gradients(transposed);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x)
      CHECK(a.magnitude.at(y, x, 0) == doctest::Approx(b.magnitude.at(x, y, 0)).epsilon(1e-5));
}

TEST_CASE("canny of a constant image is empty") {
  const auto edges = canny(ImageTensor(32, 32, 3, 0.5f), {});
  for (auto v : edges.data) CHECK(v == 0);
}

TEST_CASE("canny is deterministic") {
  const auto img = testutil::smooth_image(48, 48, 3, 33);
  CHECK(canny(img, {}).data == canny(img, {}).data);
}

TEST_CASE("canny square yields edges near the contour") {
  const auto img = white_square(64, 32);
  const auto edges = canny(img, {});
  std::size_t count = 0;
  for (auto v : edges.data) count += v;
  CHECK(count > 0);
  // all edge pixels hug the square boundary (within the blur radius)
  const int lo = 16, hi = 48;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (edges.at(y, x)) {
        const int d = std::min({std::abs(y - lo), std::abs(y - (hi - 1)), std::abs(x - lo),
                                std::abs(x - (hi - 1))});
        CHECK(d <= 3);
      }
}

TEST_CASE("canny thinness: no same-direction neighbor outranks an edge pixel") {
  const CannyParams p{};
  const auto img = white_square(64, 32);
  const auto edges = canny(img, p);
  const auto grads = sobel_gradients(gaussian_smooth(to_luminance(img), p.sigma));
  for (int y = 1; y < 63; ++y)
    for (int x = 1; x < 63; ++x) {
      if (!edges.at(y, x)) continue;
      double angle = grads.orientation_at(y, x) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      int dx = 1, dy = 0;
      if (angle >= 22.5 && angle < 67.5) { dx = 1; dy = 1; }
      else if (angle >= 67.5 && angle < 112.5) { dx = 0; dy = 1; }
      else if (angle >= 112.5 && angle < 157.5) { dx = -1; dy = 1; }
      const float m = grads.magnitude.at(y, x, 0);
      CHECK(m >= grads.magnitude.at(y + dy, x + dx, 0));
      CHECK(m >= grads.magnitude.at(y - dy, x - dx, 0));
    }
}

TEST_CASE("canny hysteresis: every edge pixel is linked to a strong pixel") {
  const CannyParams p{};
  const auto img = testutil::smooth_image(48, 48, 1, 77);
  const auto edges = canny(img, p);
  const auto s = nms_surface(img, p);

  // flood from strong pixels across the returned edge set
  std::vector<std::uint8_t> reached(edges.data.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < edges.data.size(); ++i)
    if (edges.data[i] && s.nms[i] >= p.high * s.max_mag) {
      reached[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    const int cy = static_cast<int>(cur) / s.w, cx = static_cast<int>(cur) % s.w;
    for (int j = -1; j <= 1; ++j)
      for (int i = -1; i <= 1; ++i) {
        const int ny = cy + j, nx = cx + i;
        if (ny < 0 || ny >= s.h || nx < 0 || nx >= s.w) continue;
        const auto nidx = static_cast<std::size_t>(ny) * s.w + nx;
        if (edges.data[nidx] && !reached[nidx]) {
          reached[nidx] = 1;
          stack.push_back(nidx);
        }
      }
  }
  for (std::size_t i = 0; i < edges.data.size(); ++i)
    if (edges.data[i]) CHECK(reached[i] == 1);
}

TEST_CASE("canny threshold monotonicity") {
  const auto img = testutil::smooth_image(48, 48, 3, 99);
  CannyParams lo{1.4, 0.1, 0.2};
  CannyParams hi{1.4, 0.1, 0.35};
  const auto e_lo = canny(img, lo);
  const auto e_hi = canny(img, hi);
  for (std::size_t i = 0; i < e_lo.data.size(); ++i)
    CHECK(e_hi.data[i] <= e_lo.data[i]);  // raising high never adds edges
}

TEST_CASE("canny params validation") {
  CHECK_THROWS_AS(canny(ImageTensor(16, 16, 1, 0.1f), CannyParams{0.0, 0.1, 0.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(canny(ImageTensor(16, 16, 1, 0.1f), CannyParams{1.0, 0.3, 0.2}),
                  std::invalid_argument);
}
