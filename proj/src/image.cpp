#include "defence/image.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace defence {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

ImageTensor::ImageTensor(int h, int w, int c, float fill) : height(h), width(w), channels(c) {
  require(h > 0 && w > 0, "ImageTensor: dims must be positive");
  require(c == 1 || c == 3 || c == 4, "ImageTensor: channels must be 1, 3 or 4");
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

BinaryMask::BinaryMask(int h, int w, std::uint8_t fill) : height(h), width(w) {
  require(h > 0 && w > 0, "BinaryMask: dims must be positive");
  require(fill == 0 || fill == 1, "BinaryMask: fill must be 0 or 1");
  data.assign(static_cast<std::size_t>(h) * w, fill);
}

ImageTensor apply_mask(const ImageTensor& image, const FenceMask& mask) {
  require(image.height == mask.height && image.width == mask.width,
          "apply_mask: image and mask spatial dims differ");
  ImageTensor out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (mask.at(y, x))
        for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = 0.0f;
  return out;
}

FenceMask binarize_mask(const ImageTensor& soft, float threshold) {
  require(soft.channels == 1, "binarize_mask: expects a single-channel map");
  require(threshold > 0.0f && threshold < 1.0f, "binarize_mask: threshold must be in (0,1)");
  FenceMask mask(soft.height, soft.width);
  for (std::size_t i = 0; i < soft.data.size(); ++i)
    mask.data[i] = soft.data[i] >= threshold ? 1 : 0;
  return mask;
}

BinaryMask invert(const BinaryMask& mask) {
  BinaryMask out = mask;
  for (auto& v : out.data) v = v ? 0 : 1;
  return out;
}

double coverage(const BinaryMask& mask) {
  if (mask.data.empty()) return 0.0;
  std::size_t on = 0;
  for (auto v : mask.data) on += v;
  return static_cast<double>(on) / static_cast<double>(mask.data.size());
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  require(a.height == b.height && a.width == b.width, "mask_iou: dims differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] & b.data[i];
    uni += a.data[i] | b.data[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ImageTensor resize_bilinear(const ImageTensor& image, int out_height, int out_width) {
  require(out_height > 0 && out_width > 0, "resize_bilinear: output dims must be positive");
  if (out_height == image.height && out_width == image.width) return image;

  ImageTensor out(out_height, out_width, image.channels);
  const double sy = static_cast<double>(image.height) / out_height;
  const double sx = static_cast<double>(image.width) / out_width;
  for (int y = 0; y < out_height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels; ++c) {
        const double top = image.at(y0, x0, c) * (1.0 - wx) + image.at(y0, x1, c) * wx;
        const double bot = image.at(y1, x0, c) * (1.0 - wx) + image.at(y1, x1, c) * wx;
        out.at(y, x, c) = static_cast<float>(std::clamp(top * (1.0 - wy) + bot * wy, 0.0, 1.0));
      }
    }
  }
  return out;
}

ImageTensor resize_to_training_dims(const ImageTensor& image) {
  return resize_bilinear(image, kTrainingSize, kTrainingSize);
}

ImageTensor to_luminance(const ImageTensor& image) {
  if (image.channels == 1) return image;
  ImageTensor out(image.height, image.width, 1);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      out.at(y, x, 0) = 0.299f * image.at(y, x, 0) + 0.587f * image.at(y, x, 1) +
                        0.114f * image.at(y, x, 2);
  return out;
}

namespace {

cv::Mat read_or_throw(const std::string& path, int flags) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("cannot read image, no such file: " + path);
  cv::Mat mat = cv::imread(path, flags);
  if (mat.empty())
    throw std::runtime_error("cannot decode image (unsupported or corrupt): " + path);
  return mat;
}

}  // namespace

ImageTensor load_image(const std::string& path) {
  cv::Mat mat = read_or_throw(path, cv::IMREAD_UNCHANGED);
  if (mat.channels() != 1 && mat.channels() != 3 && mat.channels() != 4)
    throw std::runtime_error("unsupported channel count in " + path);

  double scale = 1.0;
  if (mat.depth() == CV_8U) scale = 1.0 / 255.0;
  else if (mat.depth() == CV_16U) scale = 1.0 / 65535.0;
  else if (mat.depth() != CV_32F)
    throw std::runtime_error("unsupported pixel depth in " + path);
  cv::Mat f32;
  mat.convertTo(f32, CV_32F, scale);

  ImageTensor out(f32.rows, f32.cols, f32.channels());
  const int c = f32.channels();
  for (int y = 0; y < f32.rows; ++y) {
    const float* row = f32.ptr<float>(y);
    for (int x = 0; x < f32.cols; ++x)
      for (int k = 0; k < c; ++k) {
        // OpenCV stores BGR(A); flip to RGB(A) order.
        const int src = (c >= 3 && k < 3) ? 2 - k : k;
        out.at(y, x, k) = std::clamp(row[x * c + src], 0.0f, 1.0f);
      }
  }
  return out;
}

void save_image(const ImageTensor& image, const std::string& path) {
  const int c = image.channels;
  cv::Mat mat(image.height, image.width, CV_8UC(c));
  for (int y = 0; y < image.height; ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width; ++x)
      for (int k = 0; k < c; ++k) {
        const int dst = (c >= 3 && k < 3) ? 2 - k : k;
        const float v = std::clamp(image.at(y, x, k), 0.0f, 1.0f);
        row[x * c + dst] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  }
  if (!cv::imwrite(path, mat))
    throw std::runtime_error("cannot write image: " + path);
}

FenceMask load_mask(const std::string& path) {
  cv::Mat mat = read_or_throw(path, cv::IMREAD_GRAYSCALE);
  FenceMask mask(mat.rows, mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    const std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) mask.at(y, x) = row[x] >= 128 ? 1 : 0;
  }
  return mask;
}

void save_mask(const BinaryMask& mask, const std::string& path) {
  cv::Mat mat(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(y, x) ? 255 : 0;
  }
  if (!cv::imwrite(path, mat))
    throw std::runtime_error("cannot write mask: " + path);
}

}  // namespace defence
