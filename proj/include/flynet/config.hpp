#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flynet/binary_io.hpp"
#include "flynet/cann.hpp"
#include "flynet/classifier.hpp"
#include "flynet/dataset.hpp"
#include "flynet/encoder.hpp"
#include "flynet/error.hpp"
#include "flynet/eval.hpp"
#include "flynet/rnn.hpp"
#include "flynet/seqslam.hpp"

namespace flynet {

enum class FilterKind { none, seqslam, rnn, cann };

inline const char* to_string(FilterKind f) {
  switch (f) {
    case FilterKind::none: return "none";
    case FilterKind::seqslam: return "seqslam";
    case FilterKind::rnn: return "rnn";
    case FilterKind::cann: return "cann";
  }
  return "?";
}

inline FilterKind parse_filter(const std::string& s) {
  if (s == "none") return FilterKind::none;
  if (s == "seqslam") return FilterKind::seqslam;
  if (s == "rnn") return FilterKind::rnn;
  if (s == "cann") return FilterKind::cann;
  throw ConfigError("unknown filter '" + s + "' (expected none, seqslam, rnn or cann)");
}

/// Display name used in reports ("FlyNet", "FlyNet+CANN", ...).
inline std::string method_name(FilterKind f) {
  switch (f) {
    case FilterKind::none: return "FlyNet";
    case FilterKind::seqslam: return "FlyNet+SeqSLAM";
    case FilterKind::rnn: return "FlyNet+RNN";
    case FilterKind::cann: return "FlyNet+CANN";
  }
  return "?";
}

/// Every stage's settings. Per-stage seeds left unset are derived from the
/// master `seed`.
struct PipelineConfig {
  std::uint64_t seed = 42;
  FilterKind filter = FilterKind::cann;
  SynthConfig dataset;
  EncoderConfig encoder;
  TrainConfig train;
  SeqSlamConfig seqslam;
  RnnTrainConfig rnn;
  CannConfig cann;
  Tolerance tolerance{5};

  std::optional<std::uint64_t> dataset_seed, encoder_seed, train_seed, rnn_seed;

  SynthConfig resolved_dataset() const {
    auto c = dataset;
    c.seed = dataset_seed.value_or(derive_seed(seed, 100));
    return c;
  }
  EncoderConfig resolved_encoder() const {
    auto c = encoder;
    c.seed = encoder_seed.value_or(derive_seed(seed, 101));
    return c;
  }
  TrainConfig resolved_train() const {
    auto c = train;
    c.seed = train_seed.value_or(derive_seed(seed, 102));
    return c;
  }
  RnnTrainConfig resolved_rnn() const {
    auto c = rnn;
    c.seed = rnn_seed.value_or(derive_seed(seed, 103));
    return c;
  }
  /// CANN sized for `places` reference places.
  CannConfig resolved_cann(std::size_t places) const {
    auto c = cann;
    c.num_units = places + 2;
    return c;
  }

  void validate() const {
    resolved_dataset().validate();
    resolved_encoder().validate();
    resolved_train().validate();
    seqslam.validate();
    resolved_rnn().validate();
    if (!(cann.kernel_sigma > 0.0)) throw ConfigError("cann.kernel_sigma must be > 0");
    if (!(cann.input_gain > 0.0)) throw ConfigError("cann.input_gain must be > 0");
    if (!(cann.inhibition >= 0.0)) throw ConfigError("cann.inhibition must be >= 0");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

inline double parse_real(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  if (used != text.size()) throw ConfigError("invalid value '" + text + "' for " + key);
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

inline std::string show(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

inline std::vector<Field> fields(PipelineConfig& c) {
  std::vector<Field> f;
  const auto size_field = [&f](std::string key, auto& ref) {
    f.push_back({key, [&ref, key](const std::string& v) { ref = parse_number<std::remove_reference_t<decltype(ref)>>(key, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  const auto real_field = [&f](std::string key, double& ref) {
    f.push_back({key, [&ref, key](const std::string& v) { ref = parse_real(key, v); }, [&ref] { return show(ref); }});
  };
  const auto seed_field = [&f](std::string key, std::optional<std::uint64_t>& ref) {
    f.push_back({key,
                 [&ref, key](const std::string& v) {
                   if (v == "auto") ref.reset();
                   else ref = parse_number<std::uint64_t>(key, v);
                 },
                 [&ref] { return ref ? std::to_string(*ref) : std::string("auto"); }});
  };

  size_field("seed", c.seed);
  f.push_back({"filter", [&c](const std::string& v) { c.filter = parse_filter(v); },
               [&c] { return std::string(to_string(c.filter)); }});

  size_field("dataset.num_places", c.dataset.num_places);
  seed_field("dataset.seed", c.dataset_seed);
  f.push_back({"dataset.appearance", [&c](const std::string& v) { c.dataset.appearance = parse_appearance(v); },
               [&c] { return std::string(to_string(c.dataset.appearance)); }});
  size_field("dataset.viewpoint_jitter_px", c.dataset.viewpoint_jitter_px);
  real_field("dataset.noise_sigma", c.dataset.noise_sigma);
  size_field("dataset.occluder_count", c.dataset.occluder_count);

  size_field("encoder.output_dim", c.encoder.output_dim);
  real_field("encoder.sampling_ratio", c.encoder.sampling_ratio);
  real_field("encoder.wta_fraction", c.encoder.wta_fraction);
  seed_field("encoder.seed", c.encoder_seed);

  real_field("train.learning_rate", c.train.adam.learning_rate);
  real_field("train.beta1", c.train.adam.beta1);
  real_field("train.beta2", c.train.adam.beta2);
  real_field("train.eps", c.train.adam.eps);
  size_field("train.epochs", c.train.epochs);
  size_field("train.batch_size", c.train.batch_size);
  seed_field("train.seed", c.train_seed);

  size_field("seqslam.ds", c.seqslam.sequence_length);
  real_field("seqslam.vmin", c.seqslam.v_min);
  real_field("seqslam.vmax", c.seqslam.v_max);
  real_field("seqslam.vstep", c.seqslam.v_step);
  size_field("seqslam.enhance_window", c.seqslam.enhance_window);
  real_field("seqslam.threshold", c.seqslam.threshold);
  size_field("seqslam.uniqueness_window", c.seqslam.uniqueness_window);
  f.push_back({"seqslam.source", [&c](const std::string& v) { c.seqslam.source = parse_matrix_source(v); },
               [&c] { return std::string(to_string(c.seqslam.source)); }});

  size_field("rnn.hidden", c.rnn.hidden);
  real_field("rnn.learning_rate", c.rnn.adam.learning_rate);
  real_field("rnn.beta1", c.rnn.adam.beta1);
  real_field("rnn.beta2", c.rnn.adam.beta2);
  real_field("rnn.eps", c.rnn.adam.eps);
  size_field("rnn.epochs", c.rnn.epochs);
  size_field("rnn.bptt_len", c.rnn.bptt_len);
  real_field("rnn.grad_clip", c.rnn.grad_clip);
  size_field("rnn.augment_copies", c.rnn.augment_copies);
  real_field("rnn.augment_noise", c.rnn.augment_noise);
  seed_field("rnn.seed", c.rnn_seed);

  size_field("cann.kernel_radius", c.cann.kernel_radius);
  real_field("cann.kernel_sigma", c.cann.kernel_sigma);
  real_field("cann.input_gain", c.cann.input_gain);
  real_field("cann.inhibition", c.cann.inhibition);
  size_field("cann.shift_per_step", c.cann.shift_per_step);
  f.push_back({"cann.wraparound", [&c](const std::string& v) { c.cann.wraparound = parse_bool("cann.wraparound", v); },
               [&c] { return std::string(c.cann.wraparound ? "true" : "false"); }});

  size_field("eval.tolerance", c.tolerance.frames);
  return f;
}

}  // namespace detail

/// Applies one `key = value` assignment; unknown keys are rejected.
inline void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (auto& field : detail::fields(cfg)) {
    if (field.key == key) {
      field.set(value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Parses `key = value` lines; '#' starts a comment.
inline PipelineConfig parse_config(const std::string& text, PipelineConfig cfg = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical `key = value` listing of every setting, in fixed order.
inline std::string config_to_text(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  std::string out;
  for (auto& field : detail::fields(copy)) out += field.key + " = " + field.get() + "\n";
  return out;
}

inline std::string config_hash(const PipelineConfig& cfg) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << io::fnv1a64(config_to_text(cfg));
  return os.str();
}

}  // namespace flynet
