#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "defence/canny.hpp"
#include "defence/fencegen.hpp"
#include "defence/image.hpp"
#include "defence/pipeline.hpp"
#include "defence/train.hpp"

using namespace defence;

namespace {

train::TrainingConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return {};
  return train::TrainingConfig::load(path);
}

fence::FenceConfig load_fence_config_or_default(const std::string& path) {
  if (path.empty()) return {};
  return fence::FenceConfig::load(path);
}

nets::FeatureExtractor make_extractor(const std::string& vgg_weights) {
  nets::FeatureExtractorSpec spec;
  if (!vgg_weights.empty()) {
    spec.kind = nets::ExtractorKind::PretrainedVgg19;
    spec.tap_layers = {1, 2, 3, 4, 5};
    spec.weights_path = vgg_weights;
  }
  return nets::build_feature_extractor(spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"defence: image de-fencing toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Build a synthetic fenced dataset from clean images");
  std::string corpus, fence_cfg_path, out_dir;
  std::uint64_t seed = 0;
  synth->add_option("--corpus", corpus, "Directory of clean source images")->required();
  synth->add_option("--config", fence_cfg_path, "Fence sampling config file");
  synth->add_option("--out", out_dir, "Output dataset directory")->required();
  synth->add_option("--seed", seed, "Global seed");

  // train-*
  std::string data_dir, train_cfg_path, out_tag, vgg_weights;
  auto add_train_opts = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "Dataset directory (from `defence synth`)")->required();
    cmd->add_option("--config", train_cfg_path, "Training config file");
    cmd->add_option("--out", out_tag, "Checkpoint tag (writes TAG.ckpt/.json/.csv)")->required();
  };
  auto* train_mask = app.add_subcommand("train-mask", "Train the fence mask generator");
  add_train_opts(train_mask);
  auto* train_recover = app.add_subcommand("train-recover", "Train the image recovering network");
  add_train_opts(train_recover);
  train_recover->add_option("--vgg-weights", vgg_weights, "Use VGG-19 feature weights from file");
  auto* train_single = app.add_subcommand("train-single", "Train the single-stage network");
  add_train_opts(train_single);
  train_single->add_option("--vgg-weights", vgg_weights, "Use VGG-19 feature weights from file");

  // run
  auto* run = app.add_subcommand("run", "De-fence one image");
  std::string mode = "two-stage", in_path, ckpt_arg, out_path;
  CannyParams canny_params;
  run->add_option("--mode", mode, "two-stage | single")
      ->check(CLI::IsMember({"two-stage", "single"}));
  run->add_option("--in", in_path, "Input image")->required();
  run->add_option("--ckpt", ckpt_arg, "Checkpoint tag (two-stage: MASK_TAG,RECOVER_TAG)")->required();
  run->add_option("--out", out_path, "Output image")->required();
  run->add_option("--canny-sigma", canny_params.sigma, "Edge channel Gaussian sigma");
  run->add_option("--canny-low", canny_params.low, "Edge channel low threshold");
  run->add_option("--canny-high", canny_params.high, "Edge channel high threshold");

  // canny
  auto* canny_cmd = app.add_subcommand("canny", "Write the Canny edge map of an image");
  std::string canny_in, canny_out;
  CannyParams canny_cli;
  canny_cmd->add_option("--in", canny_in, "Input image")->required();
  canny_cmd->add_option("--out", canny_out, "Output edge map PNG")->required();
  canny_cmd->add_option("--sigma", canny_cli.sigma, "Gaussian sigma");
  canny_cmd->add_option("--low", canny_cli.low, "Low threshold (fraction of max gradient)");
  canny_cmd->add_option("--high", canny_cli.high, "High threshold (fraction of max gradient)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  std::string pred_dir, gt_dir, report_path;
  eval_cmd->add_option("--pred", pred_dir, "Predictions directory")->required();
  eval_cmd->add_option("--gt", gt_dir, "Ground-truth directory")->required();
  eval_cmd->add_option("--report", report_path, "Output JSON report")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto manifest =
          fence::build_synthetic_dataset(corpus, load_fence_config_or_default(fence_cfg_path),
                                         out_dir, seed);
      std::cout << "wrote " << manifest.entries.size() << " samples to " << out_dir << "\n";
    } else if (train_mask->parsed()) {
      const auto dataset = fence::load_dataset(data_dir);
      const auto result =
          train::train_mask_generator(dataset, load_config_or_default(train_cfg_path), out_tag);
      std::cout << "trained " << result.steps << " steps over " << result.history.size()
                << " epochs -> " << result.tag << ".ckpt\n";
    } else if (train_recover->parsed() || train_single->parsed()) {
      const auto dataset = fence::load_dataset(data_dir);
      const auto config = load_config_or_default(train_cfg_path);
      auto extractor = make_extractor(vgg_weights);
      const auto result = train_recover->parsed()
                              ? train::train_recovering_network(dataset, config, extractor, out_tag)
                              : train::train_single_stage(dataset, config, extractor, out_tag);
      std::cout << "trained " << result.steps << " steps over " << result.history.size()
                << " epochs -> " << result.tag << ".ckpt\n";
    } else if (run->parsed()) {
      const ImageTensor input = load_image(in_path);
      ImageTensor output;
      if (mode == "two-stage") {
        const auto comma = ckpt_arg.find(',');
        if (comma == std::string::npos)
          throw std::runtime_error("two-stage mode needs --ckpt MASK_TAG,RECOVER_TAG");
        output = pipeline::defence_two_stage(input, ckpt_arg.substr(0, comma),
                                             ckpt_arg.substr(comma + 1));
      } else {
        output = pipeline::defence_single_stage(input, ckpt_arg, canny_params);
      }
      save_image(output, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (canny_cmd->parsed()) {
      save_mask(canny(load_image(canny_in), canny_cli), canny_out);
      std::cout << "wrote " << canny_out << "\n";
    } else if (eval_cmd->parsed()) {
      const auto report = pipeline::evaluate(pred_dir, gt_dir);
      pipeline::write_report(report, report_path);
      std::cout << "evaluated " << report.items.size() << " pairs (mean ssim "
                << report.means.ssim << ", mean psnr " << report.means.psnr << " dB)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
