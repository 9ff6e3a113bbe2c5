#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "flynet/error.hpp"
#include "flynet/match.hpp"

namespace flynet {

struct MatchRecord {
  std::size_t query_index = 0;
  std::optional<std::size_t> predicted;  // empty = unmatchable
  double score = 0.0;
  std::size_t ground_truth = 0;
};

/// Frame-index tolerance around the ground truth (inclusive).
struct Tolerance {
  std::size_t frames = 0;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // thresholds descending, recall nondecreasing
};

inline bool is_correct(const MatchRecord& rec, Tolerance tol) {
  if (!rec.predicted) return false;
  const auto p = *rec.predicted;
  const auto g = rec.ground_truth;
  return (p > g ? p - g : g - p) <= tol.frames;
}

/// Pairs filter outputs with ground truth (query i <-> gt[i]).
inline std::vector<MatchRecord> make_records(std::span<const PlaceMatch> matches, std::span<const std::size_t> gt) {
  if (matches.size() != gt.size())
    throw DataError("have " + std::to_string(matches.size()) + " matches but " + std::to_string(gt.size()) +
                    " ground truth entries");
  std::vector<MatchRecord> recs;
  recs.reserve(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) recs.push_back({i, matches[i].ref, matches[i].score, gt[i]});
  return recs;
}

/// Threshold sweep over the distinct scores of matchable records, highest
/// first. At threshold t the attempted matches are those with score >= t;
/// precision = TP / attempted, recall = TP / all records.
inline PrCurve pr_curve(std::span<const MatchRecord> records, Tolerance tol) {
  if (records.empty()) throw DataError("pr_curve needs at least one record");
  struct Scored {
    double score;
    bool correct;
  };
  std::vector<Scored> scored;
  for (const auto& r : records)
    if (r.predicted && std::isfinite(r.score)) scored.push_back({r.score, is_correct(r, tol)});
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  PrCurve curve;
  const auto total = static_cast<double>(records.size());
  std::size_t tp = 0;
  std::size_t attempted = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const double t = scored[i].score;
    for (; i < scored.size() && scored[i].score == t; ++i) {
      ++attempted;
      tp += scored[i].correct;
    }
    curve.points.push_back({static_cast<double>(tp) / total,
                            static_cast<double>(tp) / static_cast<double>(attempted), t});
  }
  return curve;
}

/// Trapezoidal area under precision(recall), anchored at (0, first precision).
inline double auc(const PrCurve& curve) {
  if (curve.points.empty()) return 0.0;
  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.points.size() + 1);
  pts.emplace_back(0.0, curve.points.front().precision);
  for (const auto& p : curve.points) pts.emplace_back(p.recall, p.precision);
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) * 0.5;
  return area;
}

/// Fraction of records whose prediction is within tolerance (abstentions
/// count as wrong).
inline double match_accuracy(std::span<const MatchRecord> records, Tolerance tol) {
  if (records.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : records) ok += is_correct(r, tol);
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

struct TimingReport {
  double feature_s = 0.0;
  double match_s = 0.0;
  double avg_query_s = 0.0;
};

/// avg_query_s = (feature_s + match_s) / queries.
inline TimingReport timing_report(double feature_s, double match_s, std::size_t queries) {
  return {feature_s, match_s, queries == 0 ? 0.0 : (feature_s + match_s) / static_cast<double>(queries)};
}

// ---------------------------------------------------------------------------
// Report files

struct SummaryRow {
  std::string method;
  double auc = 0.0;
  std::optional<TimingReport> timing;  // omitted from deterministic runs
  std::size_t layers = 0;
  std::size_t params = 0;
  std::size_t neurons = 0;
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::ofstream open_report(const std::filesystem::path& path, const std::string& comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  if (!comment.empty()) out << "# " << comment << "\n";
  return out;
}

/// threshold,precision,recall
inline void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve, const std::string& comment = {}) {
  auto out = open_report(path, comment);
  out << "threshold,precision,recall\n";
  for (const auto& p : curve.points)
    out << format_double(p.threshold) << ',' << format_double(p.precision) << ',' << format_double(p.recall) << '\n';
}

/// method,auc,feature_s,match_s,avg_query_s,layers,params,neurons. Timing
/// columns are left empty for rows without timing.
inline void write_summary_csv(const std::filesystem::path& path, std::span<const SummaryRow> rows,
                              const std::string& comment = {}) {
  auto out = open_report(path, comment);
  out << "method,auc,feature_s,match_s,avg_query_s,layers,params,neurons\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_double(r.auc) << ',';
    if (r.timing)
      out << format_double(r.timing->feature_s) << ',' << format_double(r.timing->match_s) << ','
          << format_double(r.timing->avg_query_s);
    else
      out << ",,";
    out << ',' << r.layers << ',' << r.params << ',' << r.neurons << '\n';
  }
}

/// query_index,predicted_ref,score,ground_truth (predicted -1 = unmatchable).
inline void write_matches_csv(const std::filesystem::path& path, std::span<const MatchRecord> records,
                              const std::string& comment = {}) {
  auto out = open_report(path, comment);
  out << "query_index,predicted_ref,score,ground_truth\n";
  for (const auto& r : records) {
    out << r.query_index << ',';
    if (r.predicted) out << *r.predicted;
    else out << -1;
    out << ',' << format_double(r.score) << ',' << r.ground_truth << '\n';
  }
}

inline std::vector<MatchRecord> read_matches_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open matches file '" + path.string() + "'");
  std::vector<MatchRecord> recs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#' || line.rfind("query_index", 0) == 0) continue;
    std::istringstream row(line);
    std::string q, p, s, g;
    if (!std::getline(row, q, ',') || !std::getline(row, p, ',') || !std::getline(row, s, ',') ||
        !std::getline(row, g, ','))
      throw DataError(path.string() + ": malformed row '" + line + "'");
    try {
      MatchRecord r;
      r.query_index = std::stoul(q);
      const long pred = std::stol(p);
      if (pred >= 0) r.predicted = static_cast<std::size_t>(pred);
      r.score = std::strtod(s.c_str(), nullptr);
      r.ground_truth = std::stoul(g);
      recs.push_back(r);
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  if (recs.empty()) throw DataError(path.string() + ": no match records");
  return recs;
}

/// Minimal SVG line plot of one or more PR curves.
inline void write_pr_svg(const std::filesystem::path& path,
                         std::span<const std::pair<std::string, PrCurve>> curves, const std::string& comment = {}) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  constexpr double W = 480, H = 360, M = 40;
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  if (!comment.empty()) out << "<!-- " << comment << " -->\n";
  out << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\">recall</text>\n";
  out << "<text x=\"12\" y=\"" << H / 2 << "\" transform=\"rotate(-90 12 " << H / 2
      << ")\" text-anchor=\"middle\">precision</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto* color = colors[c % std::size(colors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& p : curves[c].second.points)
      out << std::fixed << std::setprecision(2) << M + p.recall * (W - 2 * M) << ','
          << H - M - p.precision * (H - 2 * M) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << W - M - 4 << "\" y=\"" << M + 16 * (c + 1) << "\" text-anchor=\"end\" fill=\"" << color
        << "\">" << curves[c].first << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace flynet
