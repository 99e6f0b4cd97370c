#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "defence/image.hpp"

namespace defence::fence {

enum class Pattern { Bars, Rect, Diamond };

std::string pattern_name(Pattern p);
Pattern pattern_from_name(const std::string& name);

struct Appearance {
  std::array<float, 3> color{0.2f, 0.2f, 0.2f};  // RGB in [0,1]
  float brightness_jitter = 0.0f;                // >= 0, already sampled
};

/// Parameters of one procedural fence lattice. The homography maps lattice
/// coordinates to image coordinates about the image center; the lattice
/// phase offset is folded into its affine part.
struct LatticeSpec {
  Pattern pattern = Pattern::Bars;
  double spacing = 16.0;     // pixels, >= 4
  double wire_width = 2.0;   // pixels, >= 1, < spacing
  double rotation_deg = 0.0;
  std::array<double, 9> homography{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  Appearance appearance;

  void validate() const;  // throws std::invalid_argument
};

/// Sampling ranges for sample_lattice. Loaded from a key = value(s) text
/// config; every field has a workable default.
struct FenceConfig {
  std::vector<Pattern> patterns{Pattern::Bars, Pattern::Rect, Pattern::Diamond};
  double spacing_min = 12.0, spacing_max = 32.0;
  double wire_min = 2.0, wire_max = 5.0;
  double rotation_min = -35.0, rotation_max = 35.0;
  double perspective = 3e-4;  // max |h31|,|h32|
  std::array<float, 3> color_min{0.05f, 0.05f, 0.05f};
  std::array<float, 3> color_max{0.45f, 0.45f, 0.45f};
  double jitter_max = 0.25;

  static FenceConfig load(const std::string& path);
  void validate() const;  // throws std::invalid_argument on infeasible ranges
};

struct TrainingTriple {
  ImageTensor clean;
  FenceMask mask;
  ImageTensor fenced;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  struct Entry {
    std::string id;
    std::uint64_t seed = 0;
    LatticeSpec lattice;
  };
  std::vector<Entry> entries;
};

/// Stable 64-bit seed for one sample, independent of scheduling order.
std::uint64_t sample_seed(std::uint64_t global_seed, const std::string& sample_id);

/// Draw a lattice spec from the config ranges. Deterministic given seed;
/// rejects combinations whose estimated coverage exceeds 0.6.
LatticeSpec sample_lattice(const FenceConfig& config, std::uint64_t seed);

/// Render the lattice into a binary mask: anti-aliased coverage thresholded
/// at 0.5. Pure function of (spec, dims); dims must be >= 16.
FenceMask rasterize_fence(const LatticeSpec& spec, int height, int width);

/// Paint the fence color (brightened by the jitter factor, clamped) over
/// mask=1 pixels; mask=0 pixels pass through untouched.
ImageTensor composite(const ImageTensor& clean, const FenceMask& mask,
                      const Appearance& appearance);

/// Build `<out>/<id>/{clean.png,mask.png,fenced.png}` triples plus
/// manifest.json from every readable image under corpus_dir. Corrupt
/// sources are skipped with a warning; an empty corpus is an error.
DatasetManifest build_synthetic_dataset(const std::string& corpus_dir,
                                        const FenceConfig& config,
                                        const std::string& out_dir,
                                        std::uint64_t seed);

DatasetManifest load_manifest(const std::string& dataset_dir);
void save_manifest(const DatasetManifest& manifest, const std::string& dataset_dir);

/// Load every triple of a dataset directory written by build_synthetic_dataset.
std::vector<TrainingTriple> load_dataset(const std::string& dataset_dir);

}  // namespace defence::fence
