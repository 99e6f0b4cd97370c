#include "defence/torch_bridge.hpp"

#include <stdexcept>

namespace defence {

torch::Tensor to_tensor(const ImageTensor& image, torch::ScalarType dtype) {
  auto t = torch::from_blob(const_cast<float*>(image.data.data()),
                            {image.height, image.width, image.channels}, torch::kFloat32);
  return t.permute({2, 0, 1}).unsqueeze(0).to(dtype).contiguous();
}

torch::Tensor to_tensor(const BinaryMask& mask, torch::ScalarType dtype) {
  auto t = torch::from_blob(const_cast<std::uint8_t*>(mask.data.data()),
                            {mask.height, mask.width}, torch::kUInt8);
  return t.unsqueeze(0).unsqueeze(0).to(dtype).contiguous();
}

ImageTensor image_from_tensor(const torch::Tensor& tensor) {
  torch::Tensor t = tensor;
  if (t.dim() == 4) {
    if (t.size(0) != 1) throw std::invalid_argument("image_from_tensor: batch must be 1");
    t = t.squeeze(0);
  }
  if (t.dim() != 3) throw std::invalid_argument("image_from_tensor: expected CHW tensor");
  t = t.detach().clamp(0, 1).to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  ImageTensor out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)),
                  static_cast<int>(t.size(2)));
  std::memcpy(out.data.data(), t.data_ptr<float>(), out.data.size() * sizeof(float));
  return out;
}

BinaryMask mask_from_tensor(const torch::Tensor& tensor, float threshold) {
  torch::Tensor t = tensor.detach().to(torch::kFloat32).squeeze();
  if (t.dim() != 2) throw std::invalid_argument("mask_from_tensor: expected a single-channel map");
  t = t.contiguous();
  BinaryMask mask(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)));
  const float* p = t.data_ptr<float>();
  for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = p[i] >= threshold ? 1 : 0;
  return mask;
}

}  // namespace defence
