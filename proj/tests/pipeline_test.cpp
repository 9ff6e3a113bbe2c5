#include <gtest/gtest.h>

#include "flynet/pipeline.hpp"
#include "test_util.hpp"

using namespace flynet;

namespace {

PipelineConfig small(std::size_t places, Appearance a, double noise, int occluders) {
  PipelineConfig c;
  c.seed = 5;
  c.dataset.num_places = places;
  c.dataset.appearance = a;
  c.dataset.noise_sigma = noise;
  c.dataset.occluder_count = occluders;
  return c;
}

double auc_of(const Workspace& ws, FilterKind f) {
  const auto fo = run_filter(ws, f);
  return evaluate(fo.matches, ws.data.ground_truth, ws.cfg.tolerance).auc;
}

}  // namespace

TEST(Pipeline, IdenticalTraversesMatchPerfectly) {
  const auto cfg = small(60, Appearance::none, 0.0, 0);
  const auto ws = prepare(cfg, load_sources(cfg, "synthetic:", "synthetic:"));
  EXPECT_DOUBLE_EQ(auc_of(ws, FilterKind::none), 1.0);
  EXPECT_DOUBLE_EQ(auc_of(ws, FilterKind::cann), 1.0);
}

TEST(Pipeline, SequenceFiltersHelpUnderHeavyChange) {
  auto cfg = small(120, Appearance::extreme, 0.15, 3);
  cfg.seqslam.enhance_window = 30;
  const auto ws = prepare(cfg, load_sources(cfg, "synthetic:", "synthetic:"));
  const double none = auc_of(ws, FilterKind::none);
  EXPECT_GT(auc_of(ws, FilterKind::cann), none + 0.15);
  EXPECT_GT(auc_of(ws, FilterKind::seqslam), none);
}

TEST(Pipeline, RnnAtLeastMatchesSingleFrameOn100Places) {
  auto cfg = load_config(FLYNET_SOURCE_DIR "/configs/synthetic_extreme.cfg");
  cfg.dataset.num_places = 100;
  const auto ws = prepare(cfg, load_sources(cfg, "synthetic:", "synthetic:"));
  EXPECT_GE(auc_of(ws, FilterKind::rnn), auc_of(ws, FilterKind::none));
}

TEST(Pipeline, SmallRnnRunWritesModel) {
  auto cfg = small(30, Appearance::mild, 0.05, 0);
  cfg.filter = FilterKind::rnn;
  cfg.rnn.hidden = 16;
  cfg.rnn.epochs = 2;
  cfg.rnn.augment_copies = 1;
  test::TempDir dir;
  const auto res = run_pipeline(cfg, "synthetic:", "synthetic:", dir.path());
  ASSERT_TRUE(std::filesystem::exists(dir / "rnn.fnrn"));
  const auto m = io::load_rnn(dir / "rnn.fnrn");
  EXPECT_EQ(m.hidden(), 16u);
  EXPECT_EQ(m.places(), 30u);
  EXPECT_EQ(res.summary.method, "FlyNet+RNN");
  EXPECT_EQ(res.summary.params, count_footprint(ModelKind::flynet_rnn, {64, 30, 16, 32, 7}).params);
}

TEST(Pipeline, RnnTrainingSetShape) {
  auto cfg = small(20, Appearance::mild, 0.05, 0);
  cfg.rnn.augment_copies = 3;
  const auto ws = prepare(cfg, load_sources(cfg, "synthetic:", "synthetic:"));
  const auto data = rnn_training_set(ws);
  ASSERT_EQ(data.size(), 4u);
  for (const auto& s : data) {
    EXPECT_EQ(s.inputs.rows(), 20);
    EXPECT_EQ(s.inputs.cols(), 20);
    EXPECT_EQ(s.labels, ws.data.reference.labels);
  }
  // Noisier copies drift further from the clean reference scores.
  const double d1 = (data[1].inputs - data[0].inputs).norm();
  const double d3 = (data[3].inputs - data[0].inputs).norm();
  EXPECT_GT(d1, 0.0);
  EXPECT_GT(d3, d1);
}

TEST(Pipeline, ArtifactsAreDeterministic) {
  auto cfg = small(40, Appearance::extreme, 0.1, 1);
  test::TempDir a, b;
  run_pipeline(cfg, "synthetic:", "synthetic:", a.path());
  run_pipeline(cfg, "synthetic:", "synthetic:", b.path());
  for (const char* f : {"summary.csv", "matches.csv", "pr.csv", "pr.svg", "reference.fnad", "query.fnad",
                        "head.fnhd", "config.txt", "manifest.txt"})
    EXPECT_EQ(test::slurp(a / f), test::slurp(b / f)) << f;
  EXPECT_NE(test::slurp(a / "summary.csv").find("# config_hash=" + config_hash(cfg)), std::string::npos);
}

TEST(Pipeline, SeedChangesArtifacts) {
  auto cfg = small(20, Appearance::mild, 0.05, 0);
  test::TempDir a, b;
  run_pipeline(cfg, "synthetic:", "synthetic:", a.path());
  cfg.seed = 6;
  run_pipeline(cfg, "synthetic:", "synthetic:", b.path());
  EXPECT_NE(test::slurp(a / "query.fnad"), test::slurp(b / "query.fnad"));
}

TEST(Pipeline, TimingOnlyWhenRequested) {
  auto cfg = small(20, Appearance::mild, 0.05, 0);
  test::TempDir dir;
  EXPECT_FALSE(run_pipeline(cfg, "synthetic:", "synthetic:", dir.path()).summary.timing);
  RunOptions opt;
  opt.record_timing = true;
  const auto res = run_pipeline(cfg, "synthetic:", "synthetic:", dir.path(), opt);
  ASSERT_TRUE(res.summary.timing);
  EXPECT_GT(res.summary.timing->feature_s, 0.0);
}

TEST(Pipeline, SeqslamAndCannTraceArtifacts) {
  auto cfg = small(25, Appearance::mild, 0.05, 0);
  test::TempDir dir;
  cfg.filter = FilterKind::seqslam;
  run_pipeline(cfg, "synthetic:", "synthetic:", dir / "s");
  EXPECT_EQ(io::load_difference_matrix(dir / "s" / "difference.dmat").rows(), 25);
  cfg.filter = FilterKind::cann;
  RunOptions opt;
  opt.cann_trace = true;
  run_pipeline(cfg, "synthetic:", "synthetic:", dir / "c", opt);
  EXPECT_TRUE(std::filesystem::exists(dir / "c" / "cann_trace.csv"));
}

TEST(Pipeline, DirectorySourcesWithGroundTruth) {
  auto cfg = small(15, Appearance::mild, 0.05, 0);
  test::TempDir dir;
  const auto [ref, query] = generate_synthetic(cfg.resolved_dataset());
  export_traverse(dir / "ref", ref);
  export_traverse(dir / "query", query);
  std::vector<std::size_t> gt(15);
  for (std::size_t i = 0; i < 15; ++i) gt[i] = i;
  write_ground_truth(dir / "gt.csv", gt);
  const auto pair = load_sources(cfg, (dir / "ref").string(), (dir / "query").string(), dir / "gt.csv");
  EXPECT_EQ(pair.reference.size(), 15u);
  EXPECT_EQ(pair.ground_truth, gt);

  gt.pop_back();
  write_ground_truth(dir / "short.csv", gt);
  EXPECT_THROW(load_sources(cfg, (dir / "ref").string(), (dir / "query").string(), dir / "short.csv"), DataError);
  EXPECT_THROW(load_sources(cfg, (dir / "nowhere").string(), "synthetic:"), DataError);
}

TEST(Pipeline, FootprintFollowsRunDimensions) {
  PipelineConfig cfg;
  const auto none = run_footprint(cfg, 1000, FilterKind::none);
  EXPECT_EQ(none.params, 64u * 1000 + 1000);
  EXPECT_EQ(run_footprint(cfg, 1000, FilterKind::seqslam).params, none.params);
  EXPECT_GT(run_footprint(cfg, 1000, FilterKind::cann).neurons, none.neurons);
}
