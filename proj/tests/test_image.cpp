#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "defence/image.hpp"
#include "test_helpers.hpp"

using namespace defence;

TEST_CASE("apply_mask zeroes fence pixels and keeps the rest") {
  ImageTensor img(4, 4, 3, 0.5f);
  FenceMask full(4, 4, 1);
  for (float v : apply_mask(img, full).data) CHECK(v == 0.0f);

  FenceMask empty(4, 4, 0);
  CHECK(apply_mask(img, empty).data == img.data);
}

TEST_CASE("apply_mask elementwise definition on a 2x2 example") {
  ImageTensor img(2, 2, 1);
  img.at(0, 0, 0) = 0.2f;
  img.at(0, 1, 0) = 0.4f;
  img.at(1, 0, 0) = 0.6f;
  img.at(1, 1, 0) = 0.8f;
  FenceMask mask(2, 2);
  mask.at(0, 0) = 1;
  mask.at(1, 1) = 1;
  const auto out = apply_mask(img, mask);
  CHECK(out.at(0, 0, 0) == 0.0f);
  CHECK(out.at(0, 1, 0) == 0.4f);
  CHECK(out.at(1, 0, 0) == 0.6f);
  CHECK(out.at(1, 1, 0) == 0.0f);
}

TEST_CASE("apply_mask rejects mismatched dims") {
  CHECK_THROWS_AS(apply_mask(ImageTensor(4, 4, 3), FenceMask(4, 5)), std::invalid_argument);
}

TEST_CASE("apply_mask idempotence and complement partition") {
  const auto img = testutil::random_image(20, 17, 3, 11);
  const auto mask = testutil::random_mask(20, 17, 12);

  const auto once = apply_mask(img, mask);
  CHECK(apply_mask(once, mask).data == once.data);

  const auto rest = apply_mask(img, invert(mask));
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(once.data[i] + rest.data[i] == img.data[i]);
}

TEST_CASE("binarize_mask thresholding, boundary inclusive") {
  for (float v : binarize_mask(ImageTensor(3, 3, 1, 0.9f), 0.5f).data) CHECK(v == 1);
  for (float v : binarize_mask(ImageTensor(3, 3, 1, 0.1f), 0.5f).data) CHECK(v == 0);
  CHECK(binarize_mask(ImageTensor(1, 1, 1, 0.5f), 0.5f).at(0, 0) == 1);
}

TEST_CASE("binarize_mask validates inputs") {
  CHECK_THROWS_AS(binarize_mask(ImageTensor(3, 3, 3, 0.5f), 0.5f), std::invalid_argument);
  CHECK_THROWS_AS(binarize_mask(ImageTensor(3, 3, 1, 0.5f), 0.0f), std::invalid_argument);
  CHECK_THROWS_AS(binarize_mask(ImageTensor(3, 3, 1, 0.5f), 1.0f), std::invalid_argument);
}

TEST_CASE("binarize_mask is monotone in the threshold") {
  const auto soft = testutil::random_image(24, 24, 1, 5);
  const auto lo = binarize_mask(soft, 0.3f);
  const auto hi = binarize_mask(soft, 0.7f);
  for (std::size_t i = 0; i < lo.data.size(); ++i)
    CHECK(hi.data[i] <= lo.data[i]);  // raising the threshold never adds 1s
}

TEST_CASE("resize reaches training dims and keeps constants") {
  const auto out = resize_to_training_dims(testutil::random_image(512, 512, 3, 3));
  CHECK(out.height == 256);
  CHECK(out.width == 256);
  CHECK(out.channels == 3);

  const auto same = testutil::random_image(256, 256, 3, 4);
  CHECK(resize_to_training_dims(same).data == same.data);  // no-op is bit-identical

  const auto constant = resize_to_training_dims(ImageTensor(100, 73, 3, 0.7f));
  for (float v : constant.data) CHECK(v == doctest::Approx(0.7f).epsilon(1e-6));
}

TEST_CASE("resize output stays inside [0,1]") {
  const auto out = resize_bilinear(testutil::random_image(50, 40, 3, 6), 97, 33);
  for (float v : out.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("png round trip within 8-bit quantization") {
  const auto dir = testutil::fresh_temp_dir("defence_test_image");
  const auto img = testutil::random_image(64, 64, 3, 7);
  const auto path = (dir / "roundtrip.png").string();
  save_image(img, path);
  const auto back = load_image(path);
  CHECK(back.channels == 3);
  CHECK(testutil::max_abs_diff(img, back) <= 1.0f / 255.0f + 1e-6f);

  // second save of the already-quantized image reloads exactly
  save_image(back, path);
  CHECK(load_image(path).data == back.data);
}

TEST_CASE("single-channel png keeps one channel") {
  const auto dir = testutil::fresh_temp_dir("defence_test_image_gray");
  const auto path = (dir / "gray.png").string();
  save_image(testutil::random_image(32, 32, 1, 8), path);
  CHECK(load_image(path).channels == 1);
}

TEST_CASE("mask png round trip is exact") {
  const auto dir = testutil::fresh_temp_dir("defence_test_mask");
  const auto mask = testutil::random_mask(33, 47, 9);
  const auto path = (dir / "mask.png").string();
  save_mask(mask, path);
  CHECK(load_mask(path).data == mask.data);
}

TEST_CASE("missing or undecodable files raise io errors") {
  CHECK_THROWS_AS(load_image("/nonexistent/image.png"), std::runtime_error);
  const auto dir = testutil::fresh_temp_dir("defence_test_bad");
  const auto path = (dir / "bogus.png").string();
  std::ofstream(path) << "this is not a png";
  CHECK_THROWS_AS(load_image(path), std::runtime_error);
}

TEST_CASE("luminance uses bt601 weights") {
  ImageTensor img(1, 1, 3);
  img.at(0, 0, 0) = 1.0f;  // pure red
  CHECK(to_luminance(img).at(0, 0, 0) == doctest::Approx(0.299f));
  img.at(0, 0, 0) = 0.0f;
  img.at(0, 0, 1) = 1.0f;  // pure green
  CHECK(to_luminance(img).at(0, 0, 0) == doctest::Approx(0.587f));
}

TEST_CASE("mask iou counts overlap") {
  BinaryMask a(4, 4), b(4, 4);
  a.at(0, 0) = 1;
  a.at(0, 1) = 1;
  b.at(0, 1) = 1;
  b.at(0, 2) = 1;
  CHECK(mask_iou(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(mask_iou(BinaryMask(4, 4), BinaryMask(4, 4)) == 1.0);
}
