#include "defence/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "defence/losses.hpp"
#include "defence/torch_bridge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace defence::pipeline {

namespace {

void require_channels(const nets::UNetGenerator& g, int in, int out, const std::string& role) {
  if (g->spec().in_channels != in || g->spec().out_channels != out)
    throw std::runtime_error("checkpoint does not fit the " + role + " role (expected " +
                             std::to_string(in) + "->" + std::to_string(out) + " channels)");
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

PairMetrics pair_metrics(const ImageTensor& pred, const ImageTensor& gt) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("pair_metrics: shape mismatch");
  PairMetrics m;
  m.ssim = loss::ssim_mean(pred, gt);
  m.l1 = loss::l1_distance(pred, gt);
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - gt.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.data.size());
  m.psnr = mse <= 0.0 ? 99.0 : std::min(99.0, 10.0 * std::log10(1.0 / mse));
  return m;
}

ImageTensor two_stage_forward(const ImageTensor& image, nets::UNetGenerator& mask_generator,
                              nets::UNetGenerator& recovery_generator) {
  require_channels(mask_generator, 3, 1, "mask generator");
  require_channels(recovery_generator, 3, 3, "recovery generator");
  torch::NoGradGuard guard;
  mask_generator->eval();
  recovery_generator->eval();

  const ImageTensor soft = image_from_tensor(mask_generator->forward(to_tensor(image)));
  const FenceMask mask = binarize_mask(soft, 0.5f);
  const ImageTensor masked = apply_mask(image, mask);
  return image_from_tensor(recovery_generator->forward(to_tensor(masked)));
}

ImageTensor single_stage_forward(const ImageTensor& image, nets::UNetGenerator& generator,
                                 const CannyParams& params) {
  require_channels(generator, generator->spec().in_channels == 3 ? 3 : 4, 3,
                   "single-stage generator");
  torch::NoGradGuard guard;
  generator->eval();

  torch::Tensor input = to_tensor(image);
  if (generator->spec().in_channels == 4) {
    const EdgeMap edges = canny(image, params);
    input = torch::cat({input, to_tensor(edges)}, 1);
  }
  return image_from_tensor(generator->forward(input));
}

ImageTensor defence_two_stage(const ImageTensor& image, const std::string& ckpt_mask,
                              const std::string& ckpt_recover) {
  const ImageTensor resized = resize_to_training_dims(image);
  auto [g1, m1] = nets::load_generator_checkpoint(ckpt_mask);
  auto [g2, m2] = nets::load_generator_checkpoint(ckpt_recover);
  return two_stage_forward(resized, g1, g2);
}

ImageTensor defence_single_stage(const ImageTensor& image, const std::string& ckpt,
                                 const CannyParams& params) {
  const ImageTensor resized = resize_to_training_dims(image);
  auto [g, manifest] = nets::load_generator_checkpoint(ckpt);
  return single_stage_forward(resized, g, params);
}

EvalReport evaluate(const std::string& pred_dir, const std::string& gt_dir) {
  if (!fs::is_directory(pred_dir)) throw std::runtime_error("no such directory: " + pred_dir);
  if (!fs::is_directory(gt_dir)) throw std::runtime_error("no such directory: " + gt_dir);

  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(pred_dir))
    if (e.is_regular_file() && is_image_file(e.path())) names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.is_regular_file() && is_image_file(e.path())) names.insert(e.path().filename().string());

  EvalReport report;
  for (const auto& name : names) {
    const fs::path pred_path = fs::path(pred_dir) / name;
    const fs::path gt_path = fs::path(gt_dir) / name;
    if (!fs::exists(pred_path) || !fs::exists(gt_path)) {
      report.missing.push_back(name);
      continue;
    }
    try {
      const ImageTensor pred = load_image(pred_path.string());
      const ImageTensor gt = load_image(gt_path.string());
      report.items.push_back({name, pair_metrics(pred, gt)});
    } catch (const std::exception&) {
      report.missing.push_back(name);
    }
  }
  if (report.items.empty())
    throw std::runtime_error("no comparable image pairs between " + pred_dir + " and " + gt_dir);

  for (const auto& item : report.items) {
    report.means.ssim += item.metrics.ssim;
    report.means.psnr += item.metrics.psnr;
    report.means.l1 += item.metrics.l1;
  }
  const double n = static_cast<double>(report.items.size());
  report.means.ssim /= n;
  report.means.psnr /= n;
  report.means.l1 /= n;
  return report;
}

void write_report(const EvalReport& report, const std::string& path) {
  json j;
  j["items"] = json::array();
  for (const auto& item : report.items)
    j["items"].push_back({{"name", item.name},
                          {"ssim", item.metrics.ssim},
                          {"psnr", item.metrics.psnr},
                          {"l1", item.metrics.l1}});
  j["means"] = {{"ssim", report.means.ssim}, {"psnr", report.means.psnr}, {"l1", report.means.l1}};
  j["missing"] = report.missing;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace defence::pipeline
