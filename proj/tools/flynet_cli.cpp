// flynet command-line driver.
//
//   flynet generate  --out DIR                         synthetic pair as PGM + ground truth
//   flynet encode    --source SRC --out FILE.fnad
//   flynet train     --source SRC --out FILE.fnhd
//   flynet match     --reference SRC --query SRC --out DIR [--head FILE.fnhd]
//   flynet eval      --matches FILE.csv --out DIR
//   flynet footprint [--out FILE.csv]
//   flynet bench     --reference SRC --query SRC --out DIR
//   flynet run       --reference SRC --query SRC --out DIR
//
// SRC is an image directory or `synthetic:` (`synthetic:query` selects the
// query side where only one source is taken).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "flynet.hpp"

namespace fs = std::filesystem;
using namespace flynet;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string filter;
  std::vector<std::string> overrides;
  std::string out;
};

PipelineConfig load(const Common& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.filter.empty()) cfg.filter = parse_filter(c.filter);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

std::string stamp(const PipelineConfig& cfg) { return "config_hash=" + config_hash(cfg); }

// Binary formats carry no comment field, so each gets a one-line sidecar.
void write_sidecar(const fs::path& file, const PipelineConfig& cfg) {
  std::ofstream out(file.string() + ".manifest", std::ios::trunc);
  out << stamp(cfg) << "\n" << file.filename().string() << "\n";
}

Traverse single_source(const PipelineConfig& cfg, const std::string& src) {
  if (!is_synthetic_source(src)) return ingest_directory(src);
  auto [ref, query] = generate_synthetic(cfg.resolved_dataset());
  return src == "synthetic:query" ? query : ref;
}

void print_summary(const SummaryRow& r) {
  std::printf("%-16s auc=%.4f layers=%zu params=%zu neurons=%zu", r.method.c_str(), r.auc, r.layers, r.params,
              r.neurons);
  if (r.timing) std::printf(" avg_query_s=%.6f", r.timing->avg_query_s);
  std::printf("\n");
}

int cmd_generate(const Common& c) {
  const auto cfg = load(c);
  const fs::path out = c.out;
  const auto [ref, query] = generate_synthetic(cfg.resolved_dataset());
  export_traverse(out / "reference", ref, stamp(cfg));
  export_traverse(out / "query", query, stamp(cfg));
  write_ground_truth(out / "ground_truth.csv", query.labels, stamp(cfg));
  std::printf("wrote %zu reference and %zu query frames to %s\n", ref.size(), query.size(), out.c_str());
  return 0;
}

int cmd_encode(const Common& c, const std::string& source) {
  const auto cfg = load(c);
  const auto enc = cfg.resolved_encoder();
  const auto t = single_source(cfg, source);
  const auto codes = encode_traverse(build_projection(enc), t, enc);
  const fs::path out = c.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::save_descriptors(out, {static_cast<std::uint32_t>(enc.input_dim), static_cast<std::uint32_t>(enc.output_dim),
                             enc.seed, codes});
  write_sidecar(out, cfg);
  std::printf("encoded %zu frames -> %s\n", codes.size(), out.c_str());
  return 0;
}

int cmd_train(const Common& c, const std::string& source) {
  const auto cfg = load(c);
  const auto enc = cfg.resolved_encoder();
  const auto t = single_source(cfg, source);
  const auto codes = encode_traverse(build_projection(enc), t, enc);
  const auto res = fit(codes, t.labels, cfg.resolved_train(), t.size());
  const fs::path out = c.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::save_head(out, res.head);
  write_sidecar(out, cfg);
  std::printf("trained %zu places, final loss %.6f, accuracy %.4f -> %s\n", t.size(), res.epoch_loss.back(),
              res.epoch_accuracy.back(), out.c_str());
  return 0;
}

int cmd_match(const Common& c, const std::string& ref, const std::string& query, const std::string& gt,
              const std::string& head_path) {
  const auto cfg = load(c);
  auto data = load_sources(cfg, ref, query, gt.empty() ? std::nullopt : std::optional<fs::path>(gt));
  auto ws = prepare(cfg, std::move(data));
  if (!head_path.empty()) {
    ws.head.head = io::load_head(head_path);
    if (ws.head.head.places() != ws.data.reference.size() || ws.head.head.code_bits() != ws.encoder.output_dim)
      throw DataError("head '" + head_path + "' does not fit this reference traverse");
    ws.query_scores = forward_all(ws.head.head, ws.query_codes);
  }
  const auto fo = run_filter(ws, cfg.filter);
  const fs::path out = c.out;
  fs::create_directories(out);
  write_matches_csv(out / "matches.csv", make_records(fo.matches, ws.data.ground_truth), stamp(cfg));
  if (fo.difference) {
    io::save_difference_matrix(out / "difference.dmat", *fo.difference);
    write_sidecar(out / "difference.dmat", cfg);
  }
  std::printf("%s: %zu queries matched -> %s\n", method_name(cfg.filter).c_str(), fo.matches.size(),
              (out / "matches.csv").c_str());
  return 0;
}

int cmd_eval(const Common& c, const std::string& matches_path) {
  const auto cfg = load(c);
  const auto records = read_matches_csv(matches_path);
  const auto curve = pr_curve(records, cfg.tolerance);
  const fs::path out = c.out;
  fs::create_directories(out);
  const auto fp = run_footprint(cfg, cfg.dataset.num_places, cfg.filter);
  const SummaryRow row{method_name(cfg.filter), auc(curve), std::nullopt, fp.layers, fp.params, fp.neurons};
  write_pr_csv(out / "pr.csv", curve, stamp(cfg));
  write_summary_csv(out / "summary.csv", std::span(&row, 1), stamp(cfg));
  const std::pair<std::string, PrCurve> named{row.method, curve};
  write_pr_svg(out / "pr.svg", std::span(&named, 1), stamp(cfg));
  std::printf("auc=%.6f accuracy=%.4f records=%zu\n", row.auc, match_accuracy(records, cfg.tolerance),
              records.size());
  return 0;
}

int cmd_footprint(const Common& c, std::size_t places) {
  const auto cfg = load(c);
  FootprintDims d;
  d.code_bits = cfg.encoder.output_dim;
  d.places = places;
  d.rnn_hidden = cfg.rnn.hidden;
  d.cann_units = places + 2;
  d.cann_kernel_width = 2 * cfg.cann.kernel_radius + 1;
  std::optional<std::ofstream> csv;
  if (!c.out.empty()) {
    csv.emplace(c.out, std::ios::trunc);
    if (!*csv) throw DataError("cannot open '" + c.out + "' for writing");
    *csv << "# " << stamp(cfg) << "\nmodel,layers,params,weights_only,all_params,neurons\n";
  }
  std::printf("%-12s %6s %10s %12s %10s %8s\n", "model", "layers", "params", "weights_only", "all_params",
              "neurons");
  for (auto kind : {ModelKind::flynet, ModelKind::flynet_rnn, ModelKind::flynet_cann}) {
    const auto f = count_footprint(kind, d);
    std::printf("%-12s %6zu %10zu %12zu %10zu %8zu\n", to_string(kind), f.layers, f.params, f.weights_only,
                f.all_params, f.neurons);
    if (csv)
      *csv << to_string(kind) << ',' << f.layers << ',' << f.params << ',' << f.weights_only << ',' << f.all_params
           << ',' << f.neurons << '\n';
  }
  return 0;
}

int cmd_bench(const Common& c, const std::string& ref, const std::string& query, const std::string& gt) {
  const auto cfg = load(c);
  const auto ws = prepare(cfg, load_sources(cfg, ref, query, gt.empty() ? std::nullopt : std::optional<fs::path>(gt)));
  const fs::path out = c.out;
  std::vector<SummaryRow> rows;
  std::vector<std::pair<std::string, PrCurve>> curves;
  for (auto f : {FilterKind::none, FilterKind::seqslam, FilterKind::rnn, FilterKind::cann}) {
    const auto fo = run_filter(ws, f);
    RunOptions opt;
    opt.record_timing = true;
    const auto res = write_run(ws, f, fo, out / to_string(f), opt);
    rows.push_back(res.summary);
    curves.emplace_back(res.summary.method, res.evaluation.curve);
    print_summary(res.summary);
  }
  write_summary_csv(out / "summary.csv", rows, stamp(cfg));
  write_pr_svg(out / "pr.svg", curves, stamp(cfg));
  return 0;
}

int cmd_run(const Common& c, const std::string& ref, const std::string& query, const std::string& gt, bool timing,
            bool trace) {
  const auto cfg = load(c);
  RunOptions opt;
  opt.record_timing = timing;
  opt.cann_trace = trace;
  if (!gt.empty()) opt.ground_truth_csv = gt;
  const auto res = run_pipeline(cfg, ref, query, c.out, opt);
  print_summary(res.summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FlyNet visual place recognition toolkit"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", c.seed, "master seed (overrides the config)");
  app.add_option("--set", c.overrides, "extra key=value overrides, applied last");

  std::string source = "synthetic:", ref = "synthetic:", query = "synthetic:", gt, head, matches;
  bool timing = false, trace = false;
  std::size_t places = 1000;

  const auto add_out = [&](CLI::App* sub, bool required = true) {
    auto* o = sub->add_option("--out", c.out, "output path");
    if (required) o->required();
  };
  const auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--reference", ref, "reference images (directory or synthetic:)");
    sub->add_option("--query", query, "query images (directory or synthetic:)");
    sub->add_option("--ground-truth", gt, "query_index,reference_index CSV");
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic reference/query pair");
  add_out(gen);
  auto* enc = app.add_subcommand("encode", "encode a traverse into binary descriptors");
  enc->add_option("--source", source, "image directory, synthetic: or synthetic:query");
  add_out(enc);
  auto* tr = app.add_subcommand("train", "fit the place classifier on a traverse");
  tr->add_option("--source", source, "image directory or synthetic:");
  add_out(tr);
  auto* mt = app.add_subcommand("match", "match a query traverse against a reference");
  add_pair(mt);
  mt->add_option("--filter", c.filter, "none, seqslam, rnn or cann");
  mt->add_option("--head", head, "trained head (.fnhd) instead of retraining");
  add_out(mt);
  auto* ev = app.add_subcommand("eval", "precision-recall and AUC of a matches file");
  ev->add_option("--matches", matches, "matches.csv from `match` or `run`")->required()->check(CLI::ExistingFile);
  ev->add_option("--filter", c.filter, "method the matches came from (for the report)");
  add_out(ev);
  auto* fp = app.add_subcommand("footprint", "layer, parameter and neuron counts");
  fp->add_option("--places", places, "number of reference places");
  add_out(fp, false);
  auto* bn = app.add_subcommand("bench", "all filters on one pair, with timing");
  add_pair(bn);
  add_out(bn);
  auto* rn = app.add_subcommand("run", "end-to-end run of one filter");
  add_pair(rn);
  rn->add_option("--filter", c.filter, "none, seqslam, rnn or cann");
  rn->add_flag("--timing", timing, "record wall-clock timing in summary.csv");
  rn->add_flag("--cann-trace", trace, "write per-step CANN activity to cann_trace.csv");
  add_out(rn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_generate(c);
    if (*enc) return cmd_encode(c, source);
    if (*tr) return cmd_train(c, source);
    if (*mt) return cmd_match(c, ref, query, gt, head);
    if (*ev) return cmd_eval(c, matches);
    if (*fp) return cmd_footprint(c, places);
    if (*bn) return cmd_bench(c, ref, query, gt);
    if (*rn) return cmd_run(c, ref, query, gt, timing, trace);
  } catch (const flynet::Error& e) {
    std::fprintf(stderr, "flynet: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "flynet: %s\n", e.what());
    return 1;
  }
  return 0;
}
