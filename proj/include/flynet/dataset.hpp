#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "flynet/error.hpp"
#include "flynet/image_io.hpp"
#include "flynet/rng.hpp"

namespace flynet {

/// A preprocessed 32x64 grayscale frame, row-major, values in [0, 1].
struct Frame {
  static constexpr std::size_t kHeight = 32;
  static constexpr std::size_t kWidth = 64;
  static constexpr std::size_t kSize = kHeight * kWidth;

  std::vector<double> pixels = std::vector<double>(kSize, 0.0);

  double& at(std::size_t row, std::size_t col) { return pixels[row * kWidth + col]; }
  double at(std::size_t row, std::size_t col) const { return pixels[row * kWidth + col]; }

  bool operator==(const Frame&) const = default;
};

/// An ordered image sequence from one pass along a route.
struct Traverse {
  std::string name;
  std::vector<Frame> frames;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return frames.size(); }

  bool operator==(const Traverse&) const = default;
};

enum class Appearance { none, mild, extreme };

inline const char* to_string(Appearance a) {
  switch (a) {
    case Appearance::none: return "none";
    case Appearance::mild: return "mild";
    case Appearance::extreme: return "extreme";
  }
  return "?";
}

inline Appearance parse_appearance(const std::string& s) {
  if (s == "none") return Appearance::none;
  if (s == "mild") return Appearance::mild;
  if (s == "extreme") return Appearance::extreme;
  throw ConfigError("unknown appearance '" + s + "' (expected none, mild or extreme)");
}

struct SynthConfig {
  std::size_t num_places = 200;
  std::uint64_t seed = 0;
  Appearance appearance = Appearance::extreme;
  int viewpoint_jitter_px = 0;
  double noise_sigma = 0.05;
  int occluder_count = 0;

  void validate() const {
    if (num_places < 1) throw ConfigError("dataset.num_places must be >= 1");
    if (viewpoint_jitter_px < 0) throw ConfigError("dataset.viewpoint_jitter_px must be >= 0");
    if (!(noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma must be >= 0");
    if (occluder_count < 0) throw ConfigError("dataset.occluder_count must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Preprocessing

/// ITU-R 601 luma of an 8-bit image, kept in [0, 255] as doubles.
inline std::vector<double> to_grayscale(const Image& img) {
  std::vector<double> gray(img.width * img.height);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    if (img.channels == 1) {
      gray[i] = img.data[i];
    } else {
      const auto* p = &img.data[i * img.channels];
      gray[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  }
  return gray;
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
inline std::vector<double> resize_bilinear(const std::vector<double>& src, std::size_t src_w,
                                           std::size_t src_h, std::size_t dst_w,
                                           std::size_t dst_h) {
  std::vector<double> dst(dst_w * dst_h);
  const double sx = static_cast<double>(src_w) / static_cast<double>(dst_w);
  const double sy = static_cast<double>(src_h) / static_cast<double>(dst_h);
  const auto coord = [](std::size_t d, double scale, std::size_t limit) {
    double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(limit - 1));
    const auto i0 = static_cast<std::size_t>(s);
    const auto i1 = std::min(i0 + 1, limit - 1);
    return std::tuple{i0, i1, s - static_cast<double>(i0)};
  };
  for (std::size_t y = 0; y < dst_h; ++y) {
    const auto [y0, y1, fy] = coord(y, sy, src_h);
    for (std::size_t x = 0; x < dst_w; ++x) {
      const auto [x0, x1, fx] = coord(x, sx, src_w);
      const double top = src[y0 * src_w + x0] * (1 - fx) + src[y0 * src_w + x1] * fx;
      const double bottom = src[y1 * src_w + x0] * (1 - fx) + src[y1 * src_w + x1] * fx;
      dst[y * dst_w + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return dst;
}

/// Grayscale -> bilinear resize to 32x64 -> scale to [0, 1].
inline Frame preprocess_image(const Image& img) {
  if (img.width == 0 || img.height == 0) throw DataError("image has zero extent");
  if (img.data.size() != img.width * img.height * img.channels)
    throw DataError("image buffer size does not match its dimensions");
  const auto gray = to_grayscale(img);
  auto small = resize_bilinear(gray, img.width, img.height, Frame::kWidth, Frame::kHeight);
  Frame f;
  for (std::size_t i = 0; i < Frame::kSize; ++i) f.pixels[i] = std::clamp(small[i] / 255.0, 0.0, 1.0);
  return f;
}

/// Loads every image file in `dir` (sorted by filename) as one traverse with
/// labels 0..N-1. Files without an image extension are ignored; an image file
/// that fails to decode is an error.
inline Traverse ingest_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    if (has_image_extension(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("no images found in '" + dir.string() + "'");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  Traverse t;
  t.name = dir.filename().string();
  t.frames.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    t.frames.push_back(preprocess_image(decode_image(files[i])));
    t.labels.push_back(i);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Synthetic traverses

namespace detail {

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// One octave of bilinear-smoothstep value noise on a `spacing`-pixel lattice.
inline void add_value_noise(std::vector<double>& strip, std::size_t width, std::size_t height,
                            std::size_t spacing, double amplitude, std::uint64_t seed) {
  const std::size_t lw = width / spacing + 2;
  const std::size_t lh = height / spacing + 2;
  Rng rng(seed);
  std::vector<double> lattice(lw * lh);
  for (auto& v : lattice) v = rng.uniform();
  const double inv = 1.0 / static_cast<double>(spacing);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t gy = y / spacing;
    const double ty = smoothstep(static_cast<double>(y % spacing) * inv);
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t gx = x / spacing;
      const double tx = smoothstep(static_cast<double>(x % spacing) * inv);
      const double a = lattice[gy * lw + gx];
      const double b = lattice[gy * lw + gx + 1];
      const double c = lattice[(gy + 1) * lw + gx];
      const double d = lattice[(gy + 1) * lw + gx + 1];
      const double top = a + (b - a) * tx;
      const double bottom = c + (d - c) * tx;
      strip[y * width + x] += amplitude * (top + (bottom - top) * ty);
    }
  }
}

inline Frame window(const std::vector<double>& strip, std::size_t strip_width, std::size_t x0) {
  Frame f;
  for (std::size_t y = 0; y < Frame::kHeight; ++y)
    for (std::size_t x = 0; x < Frame::kWidth; ++x) f.at(y, x) = strip[y * strip_width + x0 + x];
  return f;
}

}  // namespace detail

/// Lattice spacings and weights of the two noise octaves.
inline constexpr std::size_t kCoarseSpacing = 8;
inline constexpr std::size_t kFineSpacing = 4;
inline constexpr double kFineAmplitude = 0.5;

/// Seeded two-octave value-noise panorama of height 32, values in [0, 1].
inline std::vector<double> make_panorama(std::size_t width, std::uint64_t seed) {
  std::vector<double> strip(width * Frame::kHeight, 0.0);
  detail::add_value_noise(strip, width, Frame::kHeight, kCoarseSpacing, 1.0, derive_seed(seed, 1));
  detail::add_value_noise(strip, width, Frame::kHeight, kFineSpacing, kFineAmplitude,
                          derive_seed(seed, 2));
  for (auto& v : strip) v /= (1.0 + kFineAmplitude);
  return strip;
}

/// Applies a day-to-dusk (mild) or day-to-night (extreme) appearance change
/// in place. Draws noise and occluders from `rng`.
inline void apply_appearance(Frame& f, Appearance appearance, double noise_sigma,
                             int occluder_count, Rng& rng) {
  if (appearance == Appearance::none) return;
  const bool extreme = appearance == Appearance::extreme;
  const double gamma = extreme ? 3.0 : 1.3;
  const double gain = extreme ? 0.6 : 1.0;
  for (auto& v : f.pixels) v = gain * std::pow(v, gamma);
  if (extreme) {
    for (int k = 0; k < occluder_count; ++k) {
      const auto w = static_cast<std::size_t>(rng.between(8, 24));
      const auto h = static_cast<std::size_t>(rng.between(6, 16));
      const auto x0 = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(Frame::kWidth - w)));
      const auto y0 = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(Frame::kHeight - h)));
      for (std::size_t y = y0; y < y0 + h; ++y)
        for (std::size_t x = x0; x < x0 + w; ++x) f.at(y, x) = 0.02;
    }
  }
  if (noise_sigma > 0.0)
    for (auto& v : f.pixels) v += noise_sigma * rng.normal();
  for (auto& v : f.pixels) v = std::clamp(v, 0.0, 1.0);
}

/// Reference traverse = one 32x64 window per place sliding with stride 1
/// over a seeded panorama; query = the same windows under the configured
/// appearance change and viewpoint jitter. Ground truth is the identity.
inline std::pair<Traverse, Traverse> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t width = cfg.num_places + Frame::kWidth;
  const auto strip = make_panorama(width, cfg.seed);
  const std::size_t max_x = width - Frame::kWidth;

  Traverse ref{"reference", {}, {}};
  Traverse query{std::string("query-") + to_string(cfg.appearance), {}, {}};
  Rng jitter_rng(derive_seed(cfg.seed, 5));
  Rng appearance_rng(derive_seed(cfg.seed, 3));
  for (std::size_t i = 0; i < cfg.num_places; ++i) {
    ref.frames.push_back(detail::window(strip, width, i));
    ref.labels.push_back(i);

    std::int64_t x = static_cast<std::int64_t>(i);
    if (cfg.viewpoint_jitter_px > 0) x += jitter_rng.between(-cfg.viewpoint_jitter_px, cfg.viewpoint_jitter_px);
    x = std::clamp<std::int64_t>(x, 0, static_cast<std::int64_t>(max_x));
    Frame q = detail::window(strip, width, static_cast<std::size_t>(x));
    apply_appearance(q, cfg.appearance, cfg.noise_sigma, cfg.occluder_count, appearance_rng);
    query.frames.push_back(std::move(q));
    query.labels.push_back(i);
  }
  return {std::move(ref), std::move(query)};
}

inline std::vector<std::uint8_t> quantize(const Frame& f) {
  std::vector<std::uint8_t> out(Frame::kSize);
  for (std::size_t i = 0; i < Frame::kSize; ++i)
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(f.pixels[i], 0.0, 1.0) * 255.0));
  return out;
}

/// Writes one PGM per frame (000000.pgm, 000001.pgm, ...).
inline void export_traverse(const std::filesystem::path& dir, const Traverse& t,
                            const std::string& comment = {}) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "%06zu.pgm", i);
    write_pgm(dir / name, Frame::kWidth, Frame::kHeight, quantize(t.frames[i]), comment);
  }
}

/// `query_index,reference_index` rows; an optional leading `# comment` line.
inline void write_ground_truth(const std::filesystem::path& path,
                               const std::vector<std::size_t>& query_to_ref,
                               const std::string& comment = {}) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "query_index,reference_index\n";
  for (std::size_t q = 0; q < query_to_ref.size(); ++q) out << q << "," << query_to_ref[q] << "\n";
}

inline std::vector<std::size_t> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground truth '" + path.string() + "'");
  std::vector<std::size_t> gt;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#' || line.rfind("query_index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(path.string() + ": malformed row '" + line + "'");
    try {
      const auto q = std::stoul(line.substr(0, comma));
      const auto r = std::stoul(line.substr(comma + 1));
      if (q != gt.size()) throw DataError(path.string() + ": query indices must be 0..N-1 in order");
      gt.push_back(r);
    } catch (const std::invalid_argument&) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  if (gt.empty()) throw DataError(path.string() + ": no ground truth rows");
  return gt;
}

}  // namespace flynet
