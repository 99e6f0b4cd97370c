#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "defence/canny.hpp"
#include "defence/fencegen.hpp"
#include "defence/image.hpp"
#include "defence/losses.hpp"
#include "defence/pipeline.hpp"
#include "defence/torch_bridge.hpp"
#include "defence/train.hpp"

namespace py = pybind11;
using namespace defence;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ImageTensor image_from_array(const FloatArray& arr) {
  const auto info = arr.request();
  if (info.ndim != 2 && info.ndim != 3)
    throw std::invalid_argument("expected an (H,W) or (H,W,C) float array");
  const int h = static_cast<int>(info.shape[0]);
  const int w = static_cast<int>(info.shape[1]);
  const int c = info.ndim == 2 ? 1 : static_cast<int>(info.shape[2]);
  ImageTensor img(h, w, c);
  std::memcpy(img.data.data(), info.ptr, img.data.size() * sizeof(float));
  return img;
}

FloatArray array_from_image(const ImageTensor& img) {
  FloatArray arr({img.height, img.width, img.channels});
  std::memcpy(arr.mutable_data(), img.data.data(), img.data.size() * sizeof(float));
  return arr;
}

BinaryMask mask_from_array(const MaskArray& arr) {
  const auto info = arr.request();
  if (info.ndim != 2) throw std::invalid_argument("expected an (H,W) uint8 mask array");
  BinaryMask mask(static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]));
  const auto* p = static_cast<const std::uint8_t*>(info.ptr);
  for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = p[i] ? 1 : 0;
  return mask;
}

MaskArray array_from_mask(const BinaryMask& mask) {
  MaskArray arr({mask.height, mask.width});
  std::memcpy(arr.mutable_data(), mask.data.data(), mask.data.size());
  return arr;
}

torch::Tensor tensor_from_array(const FloatArray& arr) {
  return to_tensor(image_from_array(arr), torch::kFloat64);
}

std::vector<torch::Tensor> tensors_from_arrays(const std::vector<FloatArray>& arrays) {
  std::vector<torch::Tensor> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(tensor_from_array(a));
  return out;
}

train::TrainingConfig config_from_path(const std::string& path) {
  return path.empty() ? train::TrainingConfig{} : train::TrainingConfig::load(path);
}

nets::FeatureExtractor extractor_from_args(const std::string& vgg_weights) {
  nets::FeatureExtractorSpec spec;
  if (!vgg_weights.empty()) {
    spec.kind = nets::ExtractorKind::PretrainedVgg19;
    spec.tap_layers = {1, 2, 3, 4, 5};
    spec.weights_path = vgg_weights;
  }
  return nets::build_feature_extractor(spec);
}

py::dict dict_from_result(const train::TrainResult& result) {
  py::dict d;
  d["tag"] = result.tag;
  d["steps"] = result.steps;
  d["epochs"] = result.history.size();
  d["final_loss"] = result.history.empty() ? 0.0 : result.history.back();
  return d;
}

py::dict dict_from_metrics(const pipeline::PairMetrics& m) {
  py::dict d;
  d["ssim"] = m.ssim;
  d["psnr"] = m.psnr;
  d["l1"] = m.l1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Image de-fencing toolkit: fence synthesis, training, inference, evaluation";

  // imagecore
  m.def("load_image", [](const std::string& p) { return array_from_image(load_image(p)); },
        py::arg("path"));
  m.def("save_image",
        [](const FloatArray& img, const std::string& p) { save_image(image_from_array(img), p); },
        py::arg("image"), py::arg("path"));
  m.def("load_mask", [](const std::string& p) { return array_from_mask(load_mask(p)); },
        py::arg("path"));
  m.def("save_mask",
        [](const MaskArray& mask, const std::string& p) { save_mask(mask_from_array(mask), p); },
        py::arg("mask"), py::arg("path"));
  m.def("apply_mask",
        [](const FloatArray& img, const MaskArray& mask) {
          return array_from_image(apply_mask(image_from_array(img), mask_from_array(mask)));
        },
        py::arg("image"), py::arg("mask"), "Zero out mask=1 pixels (Hadamard masking)");
  m.def("binarize_mask",
        [](const FloatArray& soft, float threshold) {
          return array_from_mask(binarize_mask(image_from_array(soft), threshold));
        },
        py::arg("soft"), py::arg("threshold") = 0.5f);
  m.def("invert_mask",
        [](const MaskArray& mask) { return array_from_mask(invert(mask_from_array(mask))); },
        py::arg("mask"));
  m.def("coverage", [](const MaskArray& mask) { return coverage(mask_from_array(mask)); },
        py::arg("mask"));
  m.def("mask_iou",
        [](const MaskArray& a, const MaskArray& b) {
          return mask_iou(mask_from_array(a), mask_from_array(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("resize",
        [](const FloatArray& img, int height, int width) {
          return array_from_image(resize_bilinear(image_from_array(img), height, width));
        },
        py::arg("image"), py::arg("height"), py::arg("width"));
  m.def("resize_to_training_dims",
        [](const FloatArray& img) {
          return array_from_image(resize_to_training_dims(image_from_array(img)));
        },
        py::arg("image"));
  m.def("to_luminance",
        [](const FloatArray& img) { return array_from_image(to_luminance(image_from_array(img))); },
        py::arg("image"));

  // canny
  m.def("canny",
        [](const FloatArray& img, double sigma, double low, double high) {
          return array_from_mask(canny(image_from_array(img), CannyParams{sigma, low, high}));
        },
        py::arg("image"), py::arg("sigma") = 1.4, py::arg("low") = 0.1, py::arg("high") = 0.2,
        "From-scratch Canny edge detection; thresholds are fractions of the max gradient");
  m.def("gaussian_smooth",
        [](const FloatArray& img, double sigma) {
          return array_from_image(gaussian_smooth(image_from_array(img), sigma));
        },
        py::arg("image"), py::arg("sigma"));

  // losses
  m.def("l1_loss",
        [](const FloatArray& a, const FloatArray& b) {
          return loss::l1_loss(tensor_from_array(a), tensor_from_array(b)).item<double>();
        },
        py::arg("a"), py::arg("b"));
  m.def("ssim_map",
        [](const FloatArray& x, const FloatArray& y) {
          return array_from_image(loss::ssim_map(image_from_array(x), image_from_array(y)));
        },
        py::arg("x"), py::arg("y"));
  m.def("ssim_loss",
        [](const FloatArray& x, const FloatArray& y) {
          return loss::ssim_loss(image_from_array(x), image_from_array(y));
        },
        py::arg("x"), py::arg("y"));
  m.def("ssim_mean",
        [](const FloatArray& x, const FloatArray& y) {
          return loss::ssim_mean(image_from_array(x), image_from_array(y));
        },
        py::arg("x"), py::arg("y"));
  m.def("adversarial_loss_discriminator",
        [](const FloatArray& real, const FloatArray& fake) {
          return loss::adversarial_loss_discriminator(tensor_from_array(real),
                                                      tensor_from_array(fake))
              .item<double>();
        },
        py::arg("real_scores"), py::arg("fake_scores"));
  m.def("adversarial_loss_generator",
        [](const FloatArray& fake) {
          return loss::adversarial_loss_generator(tensor_from_array(fake)).item<double>();
        },
        py::arg("fake_scores"));
  m.def("gram_matrix",
        [](const FloatArray& act) {
          auto g = loss::gram_matrix(tensor_from_array(act).squeeze(0)).contiguous();
          py::array_t<double> out({g.size(0), g.size(1)});
          std::memcpy(out.mutable_data(), g.data_ptr<double>(),
                      static_cast<std::size_t>(g.numel()) * sizeof(double));
          return out;
        },
        py::arg("activation"), "Channel gram matrix of an (H,W,C) activation");
  m.def("style_loss",
        [](const std::vector<FloatArray>& pred, const std::vector<FloatArray>& gt) {
          return loss::style_loss(tensors_from_arrays(pred), tensors_from_arrays(gt))
              .item<double>();
        },
        py::arg("acts_pred"), py::arg("acts_gt"));
  m.def("perceptual_loss",
        [](const std::vector<FloatArray>& pred, const std::vector<FloatArray>& gt) {
          return loss::perceptual_loss(tensors_from_arrays(pred), tensors_from_arrays(gt))
              .item<double>();
        },
        py::arg("acts_pred"), py::arg("acts_gt"));
  m.def("total_stage1_loss",
        [](double adv, double l1) { return loss::total_stage1_loss(adv, l1); }, py::arg("adv"),
        py::arg("l1"));
  m.def("total_stage2_loss",
        [](double adv, double l1, double perc, double style, double ssim) {
          const auto b = loss::total_stage2_loss(adv, l1, perc, style, ssim);
          py::dict d;
          d["adv"] = b.adv;
          d["l1"] = b.l1;
          d["perc"] = b.perc;
          d["style"] = b.style;
          d["ssim"] = b.ssim;
          d["total"] = b.total;
          return d;
        },
        py::arg("adv"), py::arg("l1"), py::arg("perc"), py::arg("style"), py::arg("ssim"));

  // fence synthesis
  m.def("build_synthetic_dataset",
        [](const std::string& corpus, const std::string& out, std::uint64_t seed,
           const std::string& config_path) {
          const auto cfg =
              config_path.empty() ? fence::FenceConfig{} : fence::FenceConfig::load(config_path);
          const auto manifest = fence::build_synthetic_dataset(corpus, cfg, out, seed);
          std::vector<std::string> ids;
          ids.reserve(manifest.entries.size());
          for (const auto& e : manifest.entries) ids.push_back(e.id);
          return ids;
        },
        py::arg("corpus_dir"), py::arg("out_dir"), py::arg("seed") = 0,
        py::arg("config_path") = "");
  m.def("random_fence_mask",
        [](int height, int width, std::uint64_t seed, const std::string& config_path) {
          const auto cfg =
              config_path.empty() ? fence::FenceConfig{} : fence::FenceConfig::load(config_path);
          return array_from_mask(fence::rasterize_fence(fence::sample_lattice(cfg, seed), height, width));
        },
        py::arg("height"), py::arg("width"), py::arg("seed") = 0, py::arg("config_path") = "",
        "Sample a lattice spec and rasterize it");
  m.def("composite",
        [](const FloatArray& clean, const MaskArray& mask, std::array<float, 3> color,
           float jitter) {
          fence::Appearance app{color, jitter};
          return array_from_image(
              fence::composite(image_from_array(clean), mask_from_array(mask), app));
        },
        py::arg("clean"), py::arg("mask"), py::arg("color"), py::arg("brightness_jitter") = 0.0f);

  // training
  m.def("train_mask_generator",
        [](const std::string& data_dir, const std::string& out_tag, const std::string& config_path) {
          return dict_from_result(train::train_mask_generator(
              fence::load_dataset(data_dir), config_from_path(config_path), out_tag));
        },
        py::arg("data_dir"), py::arg("out_tag"), py::arg("config_path") = "");
  m.def("train_recovering_network",
        [](const std::string& data_dir, const std::string& out_tag, const std::string& config_path,
           const std::string& vgg_weights) {
          auto extractor = extractor_from_args(vgg_weights);
          return dict_from_result(train::train_recovering_network(
              fence::load_dataset(data_dir), config_from_path(config_path), extractor, out_tag));
        },
        py::arg("data_dir"), py::arg("out_tag"), py::arg("config_path") = "",
        py::arg("vgg_weights") = "");
  m.def("train_single_stage",
        [](const std::string& data_dir, const std::string& out_tag, const std::string& config_path,
           const std::string& vgg_weights) {
          auto extractor = extractor_from_args(vgg_weights);
          return dict_from_result(train::train_single_stage(
              fence::load_dataset(data_dir), config_from_path(config_path), extractor, out_tag));
        },
        py::arg("data_dir"), py::arg("out_tag"), py::arg("config_path") = "",
        py::arg("vgg_weights") = "");

  // inference + evaluation
  m.def("defence_two_stage",
        [](const FloatArray& img, const std::string& ckpt_mask, const std::string& ckpt_recover) {
          return array_from_image(
              pipeline::defence_two_stage(image_from_array(img), ckpt_mask, ckpt_recover));
        },
        py::arg("image"), py::arg("ckpt_mask"), py::arg("ckpt_recover"));
  m.def("defence_single_stage",
        [](const FloatArray& img, const std::string& ckpt, double sigma, double low, double high) {
          return array_from_image(pipeline::defence_single_stage(
              image_from_array(img), ckpt, CannyParams{sigma, low, high}));
        },
        py::arg("image"), py::arg("ckpt"), py::arg("canny_sigma") = 1.4,
        py::arg("canny_low") = 0.1, py::arg("canny_high") = 0.2);
  m.def("pair_metrics",
        [](const FloatArray& pred, const FloatArray& gt) {
          return dict_from_metrics(
              pipeline::pair_metrics(image_from_array(pred), image_from_array(gt)));
        },
        py::arg("pred"), py::arg("gt"));
  m.def("evaluate",
        [](const std::string& pred_dir, const std::string& gt_dir) {
          const auto report = pipeline::evaluate(pred_dir, gt_dir);
          py::dict d;
          py::list items;
          for (const auto& item : report.items) {
            py::dict e = dict_from_metrics(item.metrics);
            e["name"] = item.name;
            items.append(e);
          }
          d["items"] = items;
          d["means"] = dict_from_metrics(report.means);
          d["missing"] = report.missing;
          return d;
        },
        py::arg("pred_dir"), py::arg("gt_dir"));
  m.def("write_report",
        [](const std::string& pred_dir, const std::string& gt_dir, const std::string& path) {
          pipeline::write_report(pipeline::evaluate(pred_dir, gt_dir), path);
        },
        py::arg("pred_dir"), py::arg("gt_dir"), py::arg("path"));
}
