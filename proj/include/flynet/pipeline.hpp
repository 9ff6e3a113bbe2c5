#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flynet/cann.hpp"
#include "flynet/classifier.hpp"
#include "flynet/config.hpp"
#include "flynet/dataset.hpp"
#include "flynet/encoder.hpp"
#include "flynet/eval.hpp"
#include "flynet/formats.hpp"
#include "flynet/rnn.hpp"
#include "flynet/seqslam.hpp"

namespace flynet {

/// Reference and query traverses plus the query -> reference ground truth.
struct TraversePair {
  Traverse reference;
  Traverse query;
  std::vector<std::size_t> ground_truth;
};

inline bool is_synthetic_source(const std::string& s) { return s.rfind("synthetic:", 0) == 0; }

/// Resolves `synthetic:` or a directory for each side. A directory query
/// without `ground_truth_csv` is matched against the identity alignment.
inline TraversePair load_sources(const PipelineConfig& cfg, const std::string& ref_source,
                                 const std::string& query_source,
                                 const std::optional<std::filesystem::path>& ground_truth_csv = {}) {
  TraversePair pair;
  std::optional<std::pair<Traverse, Traverse>> synth;
  const auto synthetic = [&]() -> std::pair<Traverse, Traverse>& {
    if (!synth) synth = generate_synthetic(cfg.resolved_dataset());
    return *synth;
  };
  pair.reference = is_synthetic_source(ref_source) ? synthetic().first : ingest_directory(ref_source);
  pair.query = is_synthetic_source(query_source) ? synthetic().second : ingest_directory(query_source);
  if (ground_truth_csv) {
    pair.ground_truth = read_ground_truth(*ground_truth_csv);
  } else {
    pair.ground_truth.resize(pair.query.size());
    for (std::size_t i = 0; i < pair.ground_truth.size(); ++i) pair.ground_truth[i] = pair.query.labels[i];
  }
  if (pair.ground_truth.size() != pair.query.size())
    throw DataError("ground truth has " + std::to_string(pair.ground_truth.size()) + " rows for " +
                    std::to_string(pair.query.size()) + " query frames");
  return pair;
}

/// Shared single-frame stage: projection, codes, trained head, query scores.
struct Workspace {
  PipelineConfig cfg;
  TraversePair data;
  EncoderConfig encoder;
  ProjectionMatrix projection;
  std::vector<BinaryDescriptor> ref_codes;
  std::vector<BinaryDescriptor> query_codes;
  FitResult head;
  std::vector<ScoreVector> query_scores;
  double feature_s = 0.0;
  double train_s = 0.0;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace detail

inline Workspace prepare(const PipelineConfig& cfg, TraversePair data) {
  cfg.validate();
  Workspace ws{cfg, std::move(data), cfg.resolved_encoder(), {}, {}, {}, {}, {}, 0.0, 0.0};
  if (ws.data.reference.size() == 0) throw DataError("reference traverse is empty");
  if (ws.data.query.size() == 0) throw DataError("query traverse is empty");

  auto t0 = detail::Clock::now();
  ws.projection = build_projection(ws.encoder);
  ws.ref_codes = encode_traverse(ws.projection, ws.data.reference, ws.encoder);
  ws.query_codes = encode_traverse(ws.projection, ws.data.query, ws.encoder);
  ws.feature_s = detail::seconds_since(t0);

  t0 = detail::Clock::now();
  ws.head = fit(ws.ref_codes, ws.data.reference.labels, cfg.resolved_train(), ws.data.reference.size());
  ws.train_s = detail::seconds_since(t0);

  t0 = detail::Clock::now();
  ws.query_scores = forward_all(ws.head.head, ws.query_codes);
  ws.feature_s += detail::seconds_since(t0);
  return ws;
}

/// Score sequences used to train the recurrent filter: the clean reference
/// traverse plus `augment_copies` mildly altered copies of it. Copy k gets
/// sensor noise (k+1) * augment_noise, so the copies range from easy to about
/// as unreliable as a hard query pass.
inline std::vector<LabeledSequence> rnn_training_set(const Workspace& ws) {
  const auto rcfg = ws.cfg.resolved_rnn();
  std::vector<LabeledSequence> data;
  data.push_back({to_sequence(forward_all(ws.head.head, ws.ref_codes)), ws.data.reference.labels});
  for (std::size_t copy = 0; copy < rcfg.augment_copies; ++copy) {
    Rng rng(derive_seed(rcfg.seed, 1000 + copy));
    std::vector<BinaryDescriptor> codes;
    codes.reserve(ws.data.reference.size());
    const double noise = rcfg.augment_noise * static_cast<double>(copy + 1);
    for (auto frame : ws.data.reference.frames) {
      apply_appearance(frame, Appearance::mild, noise, 0, rng);
      codes.push_back(encode(ws.projection, frame, ws.encoder));
    }
    data.push_back({to_sequence(forward_all(ws.head.head, codes)), ws.data.reference.labels});
  }
  return data;
}

struct FilterOutput {
  std::vector<PlaceMatch> matches;
  double match_s = 0.0;
  std::optional<DifferenceMatrix> difference;  // seqslam only
  std::optional<RnnModel> rnn;                 // rnn only
};

/// Runs one temporal filter (or none) over the query scores.
inline FilterOutput run_filter(const Workspace& ws, FilterKind filter, std::ostream* cann_trace = nullptr) {
  FilterOutput out;
  const std::size_t places = ws.data.reference.size();
  if (filter == FilterKind::rnn) {
    const auto data = rnn_training_set(ws);
    out.rnn = fit_rnn(data, ws.cfg.resolved_rnn()).model;
  }
  const auto t0 = detail::Clock::now();
  switch (filter) {
    case FilterKind::none:
      for (const auto& s : ws.query_scores) out.matches.push_back({s.argmax, s.max()});
      break;
    case FilterKind::seqslam: {
      out.difference = ws.cfg.seqslam.source == MatrixSource::scores
                           ? difference_matrix(std::span<const ScoreVector>(ws.query_scores))
                           : difference_matrix(std::span<const BinaryDescriptor>(ws.ref_codes),
                                               std::span<const BinaryDescriptor>(ws.query_codes));
      out.matches = seqslam(*out.difference, ws.cfg.seqslam);
      break;
    }
    case FilterKind::rnn:
      out.matches = rnn_match(*out.rnn, to_sequence(ws.query_scores), ws.cfg.rnn.bptt_len);
      break;
    case FilterKind::cann:
      out.matches = cann_run(ws.query_scores, ws.cfg.resolved_cann(places), cann_trace);
      break;
  }
  out.match_s = detail::seconds_since(t0);
  if (!std::all_of(out.matches.begin(), out.matches.end(),
                   [](const PlaceMatch& m) { return !m.ref || !std::isnan(m.score); }))
    throw NumericError("filter produced NaN match scores");
  return out;
}

struct Evaluation {
  std::vector<MatchRecord> records;
  PrCurve curve;
  double auc = 0.0;
  double accuracy = 0.0;
};

inline Evaluation evaluate(std::span<const PlaceMatch> matches, std::span<const std::size_t> gt, Tolerance tol) {
  Evaluation e;
  e.records = make_records(matches, gt);
  e.curve = pr_curve(e.records, tol);
  e.auc = auc(e.curve);
  e.accuracy = match_accuracy(e.records, tol);
  return e;
}

inline ModelKind model_kind(FilterKind f) {
  switch (f) {
    case FilterKind::rnn: return ModelKind::flynet_rnn;
    case FilterKind::cann: return ModelKind::flynet_cann;
    default: return ModelKind::flynet;
  }
}

/// Footprint at the run's actual dimensions. SeqSLAM adds no neurons or
/// parameters to FlyNet.
inline Footprint run_footprint(const PipelineConfig& cfg, std::size_t places, FilterKind f) {
  FootprintDims d;
  d.code_bits = cfg.encoder.output_dim;
  d.places = places;
  d.rnn_hidden = cfg.rnn.hidden;
  d.cann_units = places + 2;
  d.cann_kernel_width = 2 * cfg.cann.kernel_radius + 1;
  return count_footprint(model_kind(f), d);
}

struct RunOptions {
  bool record_timing = false;
  bool cann_trace = false;
  std::optional<std::filesystem::path> ground_truth_csv;
};

struct RunResult {
  SummaryRow summary;
  Evaluation evaluation;
  std::vector<std::filesystem::path> artifacts;
};

/// Writes the artifacts of one filter run into `out_dir`.
inline RunResult write_run(const Workspace& ws, FilterKind filter, const FilterOutput& fo,
                           const std::filesystem::path& out_dir, const RunOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string stamp = "config_hash=" + config_hash(ws.cfg);
  RunResult res;
  res.evaluation = evaluate(fo.matches, ws.data.ground_truth, ws.cfg.tolerance);
  const auto fp = run_footprint(ws.cfg, ws.data.reference.size(), filter);
  res.summary = {method_name(filter), res.evaluation.auc, std::nullopt, fp.layers, fp.params, fp.neurons};
  if (opt.record_timing) res.summary.timing = timing_report(ws.feature_s, fo.match_s, ws.data.query.size());

  const auto add = [&](const fs::path& p) { res.artifacts.push_back(p); };
  {
    std::ofstream cfg_out(out_dir / "config.txt", std::ios::trunc);
    cfg_out << "# " << stamp << "\n" << config_to_text(ws.cfg);
    add(out_dir / "config.txt");
  }
  const auto desc_file = [&](const std::vector<BinaryDescriptor>& codes) {
    return io::DescriptorFile{static_cast<std::uint32_t>(ws.encoder.input_dim),
                              static_cast<std::uint32_t>(ws.encoder.output_dim), ws.encoder.seed, codes};
  };
  io::save_descriptors(out_dir / "reference.fnad", desc_file(ws.ref_codes));
  add(out_dir / "reference.fnad");
  io::save_descriptors(out_dir / "query.fnad", desc_file(ws.query_codes));
  add(out_dir / "query.fnad");
  io::save_head(out_dir / "head.fnhd", ws.head.head);
  add(out_dir / "head.fnhd");
  if (fo.rnn) {
    io::save_rnn(out_dir / "rnn.fnrn", *fo.rnn);
    add(out_dir / "rnn.fnrn");
  }
  if (fo.difference) {
    io::save_difference_matrix(out_dir / "difference.dmat", *fo.difference);
    add(out_dir / "difference.dmat");
  }
  write_matches_csv(out_dir / "matches.csv", res.evaluation.records, stamp);
  add(out_dir / "matches.csv");
  write_pr_csv(out_dir / "pr.csv", res.evaluation.curve, stamp);
  add(out_dir / "pr.csv");
  write_summary_csv(out_dir / "summary.csv", std::span<const SummaryRow>(&res.summary, 1), stamp);
  add(out_dir / "summary.csv");
  const std::pair<std::string, PrCurve> curve{res.summary.method, res.evaluation.curve};
  write_pr_svg(out_dir / "pr.svg", std::span(&curve, 1), stamp);
  add(out_dir / "pr.svg");

  // Binary formats have no comment field; the manifest ties them to the config.
  std::ofstream manifest(out_dir / "manifest.txt", std::ios::trunc);
  manifest << stamp << "\n";
  for (const auto& p : res.artifacts) manifest << p.filename().string() << "\n";
  return res;
}

/// End to end: load -> encode -> train -> filter -> evaluate -> write.
inline RunResult run_pipeline(const PipelineConfig& cfg, const std::string& ref_source,
                              const std::string& query_source, const std::filesystem::path& out_dir,
                              const RunOptions& opt = {}) {
  auto ws = prepare(cfg, load_sources(cfg, ref_source, query_source, opt.ground_truth_csv));
  std::optional<std::ofstream> trace;
  if (opt.cann_trace && cfg.filter == FilterKind::cann) {
    std::filesystem::create_directories(out_dir);
    trace.emplace(out_dir / "cann_trace.csv", std::ios::trunc);
  }
  const auto fo = run_filter(ws, cfg.filter, trace ? &*trace : nullptr);
  return write_run(ws, cfg.filter, fo, out_dir, opt);
}

}  // namespace flynet
