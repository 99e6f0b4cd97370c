#include "defence/fencegen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace defence::fence {

namespace {

constexpr double kMaxCoverage = 0.6;

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a_seed() { return 14695981039346656037ULL; }

// 53-bit uniform in [0,1); avoids distribution objects so the stream is
// identical across standard library implementations.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next() {
    // splitmix64
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + u01() * (hi - lo); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

double coverage_estimate(Pattern p, double wire, double spacing) {
  const double r = wire / spacing;
  if (p == Pattern::Bars) return r;
  return 2.0 * r - r * r;  // two wire families
}

double min_coverage_estimate(const FenceConfig& c) {
  const bool has_bars =
      std::find(c.patterns.begin(), c.patterns.end(), Pattern::Bars) != c.patterns.end();
  const double r = c.wire_min / c.spacing_max;
  return has_bars ? r : 2.0 * r - r * r;
}

struct Mat3 {
  std::array<double, 9> m;
  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }
  Mat3 inverse() const {
    const double d = det();
    Mat3 inv{};
    inv.m = {(m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
             (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
             (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
             (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
             (m[0] * m[4] - m[1] * m[3]) / d};
    return inv;
  }
};

double wire_distance(double v, double spacing) {
  double m = std::fmod(v, spacing);
  if (m < 0.0) m += spacing;
  return std::min(m, spacing - m);
}

double lattice_distance(Pattern p, double lx, double ly, double spacing) {
  switch (p) {
    case Pattern::Bars:
      return wire_distance(lx, spacing);
    case Pattern::Rect:
      return std::min(wire_distance(lx, spacing), wire_distance(ly, spacing));
    case Pattern::Diamond: {
      const double u = (lx + ly) / std::numbers::sqrt2;
      const double v = (lx - ly) / std::numbers::sqrt2;
      return std::min(wire_distance(u, spacing), wire_distance(v, spacing));
    }
  }
  return 0.0;
}

std::string sanitize_id(const std::string& stem) {
  std::string out;
  for (char ch : stem)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return out;
}

json lattice_to_json(const LatticeSpec& s) {
  return json{{"pattern", pattern_name(s.pattern)},
              {"spacing", s.spacing},
              {"wire_width", s.wire_width},
              {"rotation", s.rotation_deg},
              {"homography", s.homography},
              {"color", s.appearance.color},
              {"brightness_jitter", s.appearance.brightness_jitter}};
}

LatticeSpec lattice_from_json(const json& j) {
  LatticeSpec s;
  s.pattern = pattern_from_name(j.at("pattern").get<std::string>());
  s.spacing = j.at("spacing").get<double>();
  s.wire_width = j.at("wire_width").get<double>();
  s.rotation_deg = j.at("rotation").get<double>();
  s.homography = j.at("homography").get<std::array<double, 9>>();
  s.appearance.color = j.at("color").get<std::array<float, 3>>();
  s.appearance.brightness_jitter = j.at("brightness_jitter").get<float>();
  return s;
}

}  // namespace

std::string pattern_name(Pattern p) {
  switch (p) {
    case Pattern::Bars: return "bars";
    case Pattern::Rect: return "rect";
    case Pattern::Diamond: return "diamond";
  }
  return "bars";
}

Pattern pattern_from_name(const std::string& name) {
  if (name == "bars") return Pattern::Bars;
  if (name == "rect") return Pattern::Rect;
  if (name == "diamond") return Pattern::Diamond;
  throw std::invalid_argument("unknown fence pattern: " + name);
}

void LatticeSpec::validate() const {
  if (spacing < 4.0) throw std::invalid_argument("lattice: spacing must be >= 4");
  if (wire_width < 1.0) throw std::invalid_argument("lattice: wire_width must be >= 1");
  if (wire_width >= spacing) throw std::invalid_argument("lattice: wire_width must be < spacing");
  Mat3 h{homography};
  if (std::abs(h.det()) <= 1e-9) throw std::invalid_argument("lattice: homography is singular");
  for (float c : appearance.color)
    if (c < 0.0f || c > 1.0f) throw std::invalid_argument("lattice: color outside [0,1]");
  if (appearance.brightness_jitter < 0.0f)
    throw std::invalid_argument("lattice: brightness_jitter must be >= 0");
}

void FenceConfig::validate() const {
  if (patterns.empty()) throw std::invalid_argument("fence config: no patterns enabled");
  if (spacing_min < 4.0) throw std::invalid_argument("fence config: spacing must be >= 4");
  if (spacing_min > spacing_max || wire_min > wire_max || rotation_min > rotation_max)
    throw std::invalid_argument("fence config: empty range");
  if (wire_min < 1.0) throw std::invalid_argument("fence config: wire_width must be >= 1");
  if (wire_min > spacing_max - 1.0)
    throw std::invalid_argument("fence config: min wire_width >= max spacing, no feasible lattice");
  if (perspective < 0.0) throw std::invalid_argument("fence config: perspective must be >= 0");
  if (jitter_max < 0.0) throw std::invalid_argument("fence config: brightness_jitter must be >= 0");
  for (int i = 0; i < 3; ++i) {
    if (color_min[i] < 0.0f || color_max[i] > 1.0f || color_min[i] > color_max[i])
      throw std::invalid_argument("fence config: color range outside [0,1]");
  }
  if (min_coverage_estimate(*this) > kMaxCoverage)
    throw std::invalid_argument("fence config: every lattice in range exceeds coverage 0.6");
}

FenceConfig FenceConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read fence config: " + path);
  FenceConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    if (key.empty()) continue;
    std::istringstream vals(line.substr(eq + 1));
    auto num = [&](double& slot) {
      if (!(vals >> slot))
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected number");
    };
    if (key == "patterns") {
      cfg.patterns.clear();
      std::string name;
      while (vals >> name) cfg.patterns.push_back(pattern_from_name(name));
    } else if (key == "spacing") {
      num(cfg.spacing_min); num(cfg.spacing_max);
    } else if (key == "wire_width") {
      num(cfg.wire_min); num(cfg.wire_max);
    } else if (key == "rotation") {
      num(cfg.rotation_min); num(cfg.rotation_max);
    } else if (key == "perspective") {
      num(cfg.perspective);
    } else if (key == "color_min" || key == "color_max") {
      auto& slot = key == "color_min" ? cfg.color_min : cfg.color_max;
      for (int i = 0; i < 3; ++i) {
        double v; num(v);
        slot[i] = static_cast<float>(v);
      }
    } else if (key == "brightness_jitter") {
      num(cfg.jitter_max);
    } else {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::uint64_t sample_seed(std::uint64_t global_seed, const std::string& sample_id) {
  std::uint64_t h = fnv1a(fnv1a_seed(), &global_seed, sizeof(global_seed));
  return fnv1a(h, sample_id.data(), sample_id.size());
}

LatticeSpec sample_lattice(const FenceConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    LatticeSpec spec;
    spec.pattern = config.patterns[rng.index(config.patterns.size())];
    spec.spacing = rng.uniform(config.spacing_min, config.spacing_max);
    const double wire_hi = std::min(config.wire_max, spec.spacing - 1.0);
    if (config.wire_min > wire_hi) continue;
    spec.wire_width = rng.uniform(config.wire_min, wire_hi);
    spec.rotation_deg = rng.uniform(config.rotation_min, config.rotation_max);
    const double tx = rng.uniform(0.0, spec.spacing);
    const double ty = rng.uniform(0.0, spec.spacing);
    const double p1 = rng.uniform(-config.perspective, config.perspective);
    const double p2 = rng.uniform(-config.perspective, config.perspective);
    spec.homography = {1, 0, tx, 0, 1, ty, p1, p2, 1};
    for (int i = 0; i < 3; ++i)
      spec.appearance.color[i] =
          static_cast<float>(rng.uniform(config.color_min[i], config.color_max[i]));
    spec.appearance.brightness_jitter = static_cast<float>(rng.uniform(0.0, config.jitter_max));
    if (coverage_estimate(spec.pattern, spec.wire_width, spec.spacing) > kMaxCoverage) continue;
    spec.validate();
    return spec;
  }
  throw std::runtime_error("sample_lattice: no lattice within coverage bound after 1000 draws");
}

FenceMask rasterize_fence(const LatticeSpec& spec, int height, int width) {
  spec.validate();
  if (height < 16 || width < 16)
    throw std::invalid_argument("rasterize_fence: dims must be >= 16");

  const Mat3 hinv = Mat3{spec.homography}.inverse();
  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(-theta), st = std::sin(-theta);
  const double cx = width / 2.0, cy = height / 2.0;
  const double half_wire = spec.wire_width / 2.0;

  FenceMask mask(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double px = (x + 0.5) - cx;
      const double py = (y + 0.5) - cy;
      const double w = hinv.m[6] * px + hinv.m[7] * py + hinv.m[8];
      const double qx = (hinv.m[0] * px + hinv.m[1] * py + hinv.m[2]) / w;
      const double qy = (hinv.m[3] * px + hinv.m[4] * py + hinv.m[5]) / w;
      const double lx = ct * qx - st * qy;
      const double ly = st * qx + ct * qy;
      const double dist = lattice_distance(spec.pattern, lx, ly, spec.spacing);
      // one-lattice-unit anti-alias ramp; thresholding at 0.5 keeps the
      // mask strictly binary and equivalent to dist <= wire/2
      const double alpha = std::clamp(0.5 + (half_wire - dist), 0.0, 1.0);
      mask.at(y, x) = alpha >= 0.5 ? 1 : 0;
    }
  return mask;
}

ImageTensor composite(const ImageTensor& clean, const FenceMask& mask,
                      const Appearance& appearance) {
  if (clean.height != mask.height || clean.width != mask.width)
    throw std::invalid_argument("composite: image and mask spatial dims differ");
  std::array<float, 3> color{};
  for (int i = 0; i < 3; ++i)
    color[i] = std::clamp(appearance.color[i] * (1.0f + appearance.brightness_jitter), 0.0f, 1.0f);
  ImageTensor out = clean;
  for (int y = 0; y < clean.height; ++y)
    for (int x = 0; x < clean.width; ++x)
      if (mask.at(y, x))
        for (int c = 0; c < clean.channels; ++c) out.at(y, x, c) = color[c % 3];
  return out;
}

namespace {

ImageTensor quantize8(const ImageTensor& img) {
  ImageTensor out = img;
  for (auto& v : out.data)
    v = std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
  return out;
}

}  // namespace

DatasetManifest build_synthetic_dataset(const std::string& corpus_dir, const FenceConfig& config,
                                        const std::string& out_dir, std::uint64_t seed) {
  config.validate();
  if (!fs::is_directory(corpus_dir))
    throw std::runtime_error("corpus dir does not exist: " + corpus_dir);

  std::vector<fs::path> sources;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") sources.push_back(entry.path());
  }
  std::sort(sources.begin(), sources.end());
  if (sources.empty()) throw std::runtime_error("no images found in corpus: " + corpus_dir);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output dir: " + out_dir);

  DatasetManifest manifest;
  manifest.seed = seed;
  int index = 0;
  for (const auto& src : sources) {
    char prefix[8];
    std::snprintf(prefix, sizeof(prefix), "%03d_", index);
    const std::string id = prefix + sanitize_id(src.stem().string());
    ++index;

    ImageTensor clean;
    try {
      clean = quantize8(resize_to_training_dims(load_image(src.string())));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << src << ": " << e.what() << "\n";
      continue;
    }

    const std::uint64_t sseed = sample_seed(seed, id);
    LatticeSpec spec;
    FenceMask mask;
    bool ok = false;
    for (std::uint64_t attempt = 0; attempt < 16 && !ok; ++attempt) {
      spec = sample_lattice(config, fnv1a(sseed, &attempt, sizeof(attempt)));
      mask = rasterize_fence(spec, clean.height, clean.width);
      const double cov = coverage(mask);
      ok = cov > 0.0 && cov <= kMaxCoverage;
    }
    if (!ok) throw std::runtime_error("could not rasterize an in-bounds fence for " + id);

    const ImageTensor fenced = composite(clean, mask, spec.appearance);
    const fs::path dir = fs::path(out_dir) / id;
    fs::create_directories(dir);
    save_image(clean, (dir / "clean.png").string());
    save_mask(mask, (dir / "mask.png").string());
    save_image(fenced, (dir / "fenced.png").string());
    manifest.entries.push_back({id, sseed, spec});
  }
  if (manifest.entries.empty())
    throw std::runtime_error("no readable images in corpus: " + corpus_dir);

  save_manifest(manifest, out_dir);
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& dataset_dir) {
  json j;
  j["seed"] = manifest.seed;
  j["samples"] = json::array();
  for (const auto& e : manifest.entries)
    j["samples"].push_back({{"id", e.id}, {"seed", e.seed}, {"lattice", lattice_to_json(e.lattice)}});
  std::ofstream out(fs::path(dataset_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest under " + dataset_dir);
  out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& dataset_dir) {
  std::ifstream in(fs::path(dataset_dir) / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json under " + dataset_dir);
  json j = json::parse(in);
  DatasetManifest manifest;
  manifest.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& s : j.at("samples")) {
    manifest.entries.push_back({s.at("id").get<std::string>(), s.at("seed").get<std::uint64_t>(),
                                lattice_from_json(s.at("lattice"))});
  }
  return manifest;
}

std::vector<TrainingTriple> load_dataset(const std::string& dataset_dir) {
  const DatasetManifest manifest = load_manifest(dataset_dir);
  std::vector<TrainingTriple> triples;
  triples.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    const fs::path dir = fs::path(dataset_dir) / e.id;
    TrainingTriple t;
    t.clean = load_image((dir / "clean.png").string());
    t.mask = load_mask((dir / "mask.png").string());
    t.fenced = load_image((dir / "fenced.png").string());
    if (!t.clean.same_shape(t.fenced) || t.clean.height != t.mask.height ||
        t.clean.width != t.mask.width)
      throw std::runtime_error("inconsistent triple dims for sample " + e.id);
    triples.push_back(std::move(t));
  }
  return triples;
}

}  // namespace defence::fence
