#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flynet/classifier.hpp"
#include "flynet/encoder.hpp"
#include "flynet/error.hpp"
#include "flynet/match.hpp"

namespace flynet {

enum class MatrixSource { scores, hamming };

inline MatrixSource parse_matrix_source(const std::string& s) {
  if (s == "scores") return MatrixSource::scores;
  if (s == "hamming") return MatrixSource::hamming;
  throw ConfigError("unknown difference matrix source '" + s + "' (expected scores or hamming)");
}

inline const char* to_string(MatrixSource s) { return s == MatrixSource::scores ? "scores" : "hamming"; }

/// Reference x query dissimilarities (row = reference place, column = query).
struct DifferenceMatrix {
  Eigen::MatrixXd d;
  MatrixSource source = MatrixSource::scores;

  Eigen::Index references() const noexcept { return d.rows(); }
  Eigen::Index queries() const noexcept { return d.cols(); }
};

struct SeqSlamConfig {
  std::size_t sequence_length = 20;
  double v_min = 0.8;
  double v_max = 1.2;
  double v_step = 0.1;
  std::size_t enhance_window = 10;
  double threshold = 1.0;
  // Rows within +-uniqueness_window of the best are excluded when looking
  // for the runner-up in the uniqueness test.
  std::size_t uniqueness_window = 10;
  MatrixSource source = MatrixSource::scores;

  void validate() const {
    if (sequence_length < 2) throw ConfigError("seqslam.ds must be >= 2");
    if (!(v_min <= v_max)) throw ConfigError("seqslam.vmin must be <= seqslam.vmax");
    if (!(v_step > 0.0)) throw ConfigError("seqslam.vstep must be > 0");
    if (enhance_window < 2) throw ConfigError("seqslam.enhance_window must be >= 2");
    if (!(threshold > 0.0)) throw ConfigError("seqslam.threshold must be > 0");
  }

  std::vector<double> velocities() const {
    std::vector<double> v;
    const auto steps = static_cast<std::size_t>(std::floor((v_max - v_min) / v_step + 1e-9));
    for (std::size_t i = 0; i <= steps; ++i) v.push_back(v_min + static_cast<double>(i) * v_step);
    return v;
  }
};

using FeatureList = std::variant<std::vector<BinaryDescriptor>, std::vector<ScoreVector>>;

/// d[r][q] = 1 - scores_q[r].
inline DifferenceMatrix difference_matrix(std::span<const ScoreVector> queries) {
  if (queries.empty()) throw DataError("difference matrix needs at least one query");
  const auto r = static_cast<Eigen::Index>(queries.front().size());
  if (r == 0) throw DataError("difference matrix needs at least one reference place");
  DifferenceMatrix m{Eigen::MatrixXd(r, static_cast<Eigen::Index>(queries.size())), MatrixSource::scores};
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (static_cast<Eigen::Index>(queries[q].size()) != r) throw DataError("score vectors differ in length");
    for (Eigen::Index i = 0; i < r; ++i)
      m.d(i, static_cast<Eigen::Index>(q)) = 1.0 - queries[q].scores[static_cast<std::size_t>(i)];
  }
  return m;
}

/// d[r][q] = 1 - hamming_similarity(ref_r, query_q).
inline DifferenceMatrix difference_matrix(std::span<const BinaryDescriptor> refs,
                                          std::span<const BinaryDescriptor> queries) {
  if (refs.empty() || queries.empty()) throw DataError("difference matrix needs nonempty feature lists");
  DifferenceMatrix m{Eigen::MatrixXd(static_cast<Eigen::Index>(refs.size()), static_cast<Eigen::Index>(queries.size())),
                     MatrixSource::hamming};
  for (std::size_t q = 0; q < queries.size(); ++q)
    for (std::size_t r = 0; r < refs.size(); ++r)
      m.d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = 1.0 - hamming_similarity(refs[r], queries[q]);
  return m;
}

/// Dispatches on the requested source; scores mode ignores `refs`.
inline DifferenceMatrix difference_matrix(const FeatureList& refs, const FeatureList& queries, MatrixSource source) {
  if (source == MatrixSource::scores) {
    const auto* q = std::get_if<std::vector<ScoreVector>>(&queries);
    if (!q) throw DataError("scores-mode difference matrix needs score vectors for the queries");
    return difference_matrix(std::span<const ScoreVector>(*q));
  }
  const auto* r = std::get_if<std::vector<BinaryDescriptor>>(&refs);
  const auto* q = std::get_if<std::vector<BinaryDescriptor>>(&queries);
  if (!r || !q) throw DataError("hamming-mode difference matrix needs binary descriptors");
  return difference_matrix(std::span<const BinaryDescriptor>(*r), std::span<const BinaryDescriptor>(*q));
}

/// Local contrast normalization down each column: (d - mean) / (std + 1e-12)
/// over the `window` rows centred on the entry, truncated at the edges.
inline DifferenceMatrix contrast_enhance(const DifferenceMatrix& m, std::size_t window) {
  if (window < 2) throw ConfigError("contrast enhancement window must be >= 2");
  const Eigen::Index rows = m.d.rows();
  const auto half = static_cast<Eigen::Index>(window / 2);
  const auto w = static_cast<Eigen::Index>(window);
  DifferenceMatrix out{Eigen::MatrixXd(rows, m.d.cols()), m.source};
  for (Eigen::Index c = 0; c < m.d.cols(); ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, r - half);
      const Eigen::Index hi = std::min<Eigen::Index>(rows, r - half + w);
      const auto seg = m.d.col(c).segment(lo, hi - lo);
      // A flat window's mean is exact; summation rounding would otherwise be
      // blown up by the 1e-12 denominator.
      const double mean = seg.minCoeff() == seg.maxCoeff() ? seg(0) : seg.mean();
      const double var = (seg.array() - mean).square().mean();
      out.d(r, c) = (m.d(r, c) - mean) / (std::sqrt(var) + 1e-12);
    }
  }
  return out;
}

/// Cost of the straight trajectory ending at (row, q) with slope v.
inline double trajectory_cost(const Eigen::MatrixXd& d, Eigen::Index row, Eigen::Index q, double v,
                              std::size_t length) {
  const Eigen::Index rows = d.rows();
  double cost = 0.0;
  for (std::size_t t = 0; t < length; ++t) {
    const double pos = static_cast<double>(row) - v * static_cast<double>(t);
    const auto r = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(pos)), 0, rows - 1);
    cost += d(r, q - static_cast<Eigen::Index>(t));
  }
  return cost;
}

struct SequenceMatch {
  std::vector<PlaceMatch> matches;
  Eigen::MatrixXd costs;  // R x Q best trajectory cost; NaN for warm-up columns
};

/// Linear trajectory search over an enhanced difference matrix. For every
/// query column q >= ds-1 the best reference row minimizes the cost over the
/// velocity sweep; the returned score is the negated cost. The first ds-1
/// queries are unmatchable.
///
/// Uniqueness test: with floor = ds * min(D), the match is kept when
/// (best - floor) / (second - floor) <= threshold, where `second` is the
/// lowest cost outside +-uniqueness_window rows of the best. Any threshold
/// >= 1 keeps every match.
inline SequenceMatch match_sequences(const DifferenceMatrix& enhanced, const SeqSlamConfig& cfg) {
  cfg.validate();
  const Eigen::Index rows = enhanced.d.rows();
  const Eigen::Index cols = enhanced.d.cols();
  const auto ds = static_cast<Eigen::Index>(cfg.sequence_length);
  if (cols < ds)
    throw ConfigError("sequence length " + std::to_string(ds) + " exceeds the " + std::to_string(cols) +
                      " query frames; use a shorter seqslam.ds");
  if (rows < 1) throw DataError("difference matrix has no reference rows");
  const auto velocities = cfg.velocities();
  const double floor = static_cast<double>(ds) * enhanced.d.minCoeff();

  SequenceMatch out;
  out.costs = Eigen::MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
  out.matches.assign(static_cast<std::size_t>(cols), PlaceMatch::unmatchable());
  for (Eigen::Index q = ds - 1; q < cols; ++q) {
    Eigen::Index best_row = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < rows; ++r) {
      double cost = std::numeric_limits<double>::infinity();
      for (double v : velocities) cost = std::min(cost, trajectory_cost(enhanced.d, r, q, v, cfg.sequence_length));
      out.costs(r, q) = cost;
      if (cost < best) {
        best = cost;
        best_row = r;
      }
    }
    if (cfg.threshold < 1.0) {
      const auto win = static_cast<Eigen::Index>(cfg.uniqueness_window);
      double second = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rows; ++r)
        if (r < best_row - win || r > best_row + win) second = std::min(second, out.costs(r, q));
      const double denom = second - floor;
      const bool unique = std::isinf(second) || (denom > 0.0 && (best - floor) / denom <= cfg.threshold);
      if (!unique) continue;
    }
    out.matches[static_cast<std::size_t>(q)] = {static_cast<std::size_t>(best_row), -best};
  }
  return out;
}

/// Full pipeline: enhance, then search.
inline std::vector<PlaceMatch> seqslam(const DifferenceMatrix& raw, const SeqSlamConfig& cfg) {
  return match_sequences(contrast_enhance(raw, cfg.enhance_window), cfg).matches;
}

}  // namespace flynet
