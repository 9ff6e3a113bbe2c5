#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "flynet/classifier.hpp"
#include "flynet/error.hpp"
#include "flynet/match.hpp"

namespace flynet {

/// One-dimensional continuous attractor over place units. Unit 0 and unit
/// R+1 are padding; place p lives on unit p+1.
struct CannConfig {
  std::size_t num_units = 1002;
  std::size_t kernel_radius = 3;
  double kernel_sigma = 1.5;
  double input_gain = 0.5;
  double inhibition = 1.0;
  std::size_t shift_per_step = 1;
  bool wraparound = false;

  static CannConfig for_places(std::size_t places) {
    CannConfig c;
    c.num_units = places + 2;
    return c;
  }

  std::size_t places() const noexcept { return num_units - 2; }

  void validate() const {
    if (num_units < 2 * kernel_radius + 1) throw ConfigError("cann.num_units must be >= 2*kernel_radius+1");
    if (num_units < 3) throw ConfigError("cann needs at least one place unit");
    if (!(kernel_sigma > 0.0)) throw ConfigError("cann.kernel_sigma must be > 0");
    if (!(input_gain > 0.0)) throw ConfigError("cann.input_gain must be > 0");
    if (!(inhibition >= 0.0)) throw ConfigError("cann.inhibition must be >= 0");
  }

  /// Normalized Gaussian excitation weights w_d for d = -r..r.
  std::vector<double> kernel() const {
    std::vector<double> w(2 * kernel_radius + 1);
    const auto r = static_cast<double>(kernel_radius);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = static_cast<double>(i) - r;
      w[i] = std::exp(-d * d / (2.0 * kernel_sigma * kernel_sigma));
    }
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= s;
    return w;
  }
};

struct CannState {
  std::vector<double> activity;

  double total() const { return std::accumulate(activity.begin(), activity.end(), 0.0); }
};

namespace detail {

inline void normalize(std::vector<double>& a) {
  const double s = std::accumulate(a.begin(), a.end(), 0.0);
  for (auto& v : a) v /= s;
}

// Place scores laid onto units (pads zero), summing to one. Falls back to
// uniform over place units when the scores carry no mass.
inline std::vector<double> injected_input(std::span<const double> scores, const CannConfig& cfg) {
  if (scores.size() != cfg.places())
    throw DataError("cann input has " + std::to_string(scores.size()) + " places, network has " +
                    std::to_string(cfg.places()));
  std::vector<double> in(cfg.num_units, 0.0);
  double total = 0.0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    const double v = std::max(0.0, scores[p]);
    in[p + 1] = v;
    total += v;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(in.begin() + 1, in.end() - 1, 1.0);
    total = static_cast<double>(cfg.places());
  }
  for (auto& v : in) v /= total;
  return in;
}

}  // namespace detail

inline CannState cann_init(const CannConfig& cfg, std::span<const double> first_input) {
  cfg.validate();
  return {detail::injected_input(first_input, cfg)};
}

inline CannState cann_init(const CannConfig& cfg, const ScoreVector& first_input) {
  return cann_init(cfg, std::span<const double>(first_input.scores));
}

/// One update: shift-and-copy, local excitation, input injection, global
/// inhibition, renormalization. If inhibition silences every unit the state
/// restarts from the injected input.
inline CannState cann_step(const CannState& state, std::span<const double> input, const CannConfig& cfg) {
  const std::size_t n = cfg.num_units;
  if (state.activity.size() != n) throw DataError("cann state size does not match config");
  const auto in = detail::injected_input(input, cfg);

  std::vector<double> shifted(n, 0.0);
  const std::size_t s = cfg.shift_per_step;
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.wraparound) shifted[(i + s) % n] = state.activity[i];
    else if (i + s < n) shifted[i + s] = state.activity[i];
  }

  const auto w = cfg.kernel();
  const auto r = static_cast<std::ptrdiff_t>(cfg.kernel_radius);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  std::vector<double> a(n, 0.0);
  for (std::ptrdiff_t i = 0; i <= last; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t d = -r; d <= r; ++d) {
      std::ptrdiff_t j = i + d;
      if (cfg.wraparound) j = ((j % (last + 1)) + last + 1) % (last + 1);
      else j = std::clamp<std::ptrdiff_t>(j, 0, last);
      acc += shifted[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(d + r)];
    }
    a[static_cast<std::size_t>(i)] = acc + cfg.input_gain * in[static_cast<std::size_t>(i)];
  }

  const double cut = cfg.inhibition * std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  double total = 0.0;
  for (auto& v : a) {
    v = std::max(0.0, v - cut);
    total += v;
  }
  if (!(total > 0.0)) return {in};
  for (auto& v : a) v /= total;
  return {std::move(a)};
}

inline CannState cann_step(const CannState& state, const ScoreVector& input, const CannConfig& cfg) {
  return cann_step(state, std::span<const double>(input.scores), cfg);
}

/// Peak over place units: (place index, activity).
inline PlaceMatch cann_readout(const CannState& state) {
  const auto first = state.activity.begin() + 1;
  const auto last = state.activity.end() - 1;
  const auto it = std::max_element(first, last);
  return {static_cast<std::size_t>(it - first), *it};
}

/// Filters a query score sequence; one readout per frame. If `trace` is set
/// every state is appended to it as `step,unit,activity` rows.
inline std::vector<PlaceMatch> cann_run(std::span<const ScoreVector> queries, const CannConfig& cfg,
                                        std::ostream* trace = nullptr) {
  cfg.validate();
  std::vector<PlaceMatch> out;
  if (queries.empty()) throw DataError("cann_run needs a nonempty query sequence");
  out.reserve(queries.size());
  if (trace) *trace << "step,unit,activity\n";
  CannState state;
  for (std::size_t t = 0; t < queries.size(); ++t) {
    state = t == 0 ? cann_init(cfg, queries[0]) : cann_step(state, queries[t], cfg);
    out.push_back(cann_readout(state));
    if (trace)
      for (std::size_t u = 0; u < state.activity.size(); ++u) *trace << t << ',' << u << ',' << state.activity[u] << '\n';
  }
  return out;
}

}  // namespace flynet
