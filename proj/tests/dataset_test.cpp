#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <fstream>

#include "flynet/dataset.hpp"
#include "test_util.hpp"

using namespace flynet;

namespace {

// Written independently of the library: sample at ((d + 0.5) * S / D - 0.5),
// clamp into the source, blend the four neighbours.
double bilinear_at(const std::vector<double>& src, int sw, int sh, int dw, int dh, int x, int y) {
  auto pos = [](int d, int s_len, int d_len) {
    double p = (d + 0.5) * s_len / d_len - 0.5;
    if (p < 0) p = 0;
    if (p > s_len - 1) p = s_len - 1;
    return p;
  };
  const double px = pos(x, sw, dw), py = pos(y, sh, dh);
  const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
  const int x1 = std::min(x0 + 1, sw - 1), y1 = std::min(y0 + 1, sh - 1);
  const double ax = px - x0, ay = py - y0;
  auto at = [&](int xx, int yy) { return src[static_cast<std::size_t>(yy * sw + xx)]; };
  return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x1, y0)) + ay * ((1 - ax) * at(x0, y1) + ax * at(x1, y1));
}

Image solid_rgb(std::size_t w, std::size_t h, std::uint8_t v) {
  return {w, h, 3, std::vector<std::uint8_t>(w * h * 3, v)};
}

void write_png(const std::filesystem::path& path, std::size_t w, std::size_t h, std::uint8_t value) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> px(w * h, value);
  ASSERT_NE(png_image_write_to_file(&img, path.c_str(), 0, px.data(), 0, nullptr), 0);
}

double mean_abs_diff(const Traverse& a, const Traverse& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < Frame::kSize; ++k) s += std::abs(a.frames[i].pixels[k] - b.frames[i].pixels[k]);
  return s / static_cast<double>(a.size() * Frame::kSize);
}

}  // namespace

TEST(Preprocess, WhiteImageIsAllOnes) {
  const auto f = preprocess_image(solid_rgb(1280, 960, 255));
  for (double v : f.pixels) ASSERT_DOUBLE_EQ(v, 1.0);
}

TEST(Preprocess, MidGray) {
  const auto f = preprocess_image(solid_rgb(100, 50, 128));
  for (double v : f.pixels) ASSERT_NEAR(v, 128.0 / 255.0, 1e-12);
}

TEST(Preprocess, BilinearHandCases) {
  // 2x2 -> 1x1 samples the centre: plain average.
  const std::vector<double> src{0, 255, 255, 0};
  EXPECT_DOUBLE_EQ(resize_bilinear(src, 2, 2, 1, 1)[0], 127.5);
  // 2x2 -> 4x4: outer samples clamp to the corners, inner ones sit a
  // quarter pixel in.
  const auto up = resize_bilinear(src, 2, 2, 4, 4);
  EXPECT_DOUBLE_EQ(up[0], 0.0);
  EXPECT_DOUBLE_EQ(up[3], 255.0);
  EXPECT_DOUBLE_EQ(up[1], 0.25 * 255.0);
  EXPECT_DOUBLE_EQ(up[5], 0.75 * 0.75 * 0 + 0.75 * 0.25 * 255 + 0.25 * 0.75 * 255 + 0.25 * 0.25 * 0);
}

TEST(Preprocess, CheckerboardMatchesReferenceResampler) {
  const std::size_t w = 128, h = 64;
  Image img{w, h, 1, std::vector<std::uint8_t>(w * h)};
  std::vector<double> gray(w * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint8_t v = ((x / 5 + y / 3) % 2) ? 255 : 0;
      img.data[y * w + x] = v;
      gray[y * w + x] = v;
    }
  const auto f = preprocess_image(img);
  for (int y = 0; y < static_cast<int>(Frame::kHeight); ++y)
    for (int x = 0; x < static_cast<int>(Frame::kWidth); ++x)
      ASSERT_NEAR(f.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)),
                  bilinear_at(gray, 128, 64, 64, 32, x, y) / 255.0, 1e-12)
          << "at " << x << "," << y;
}

TEST(Preprocess, RgbUsesLumaWeights) {
  Image img{1, 1, 3, {255, 0, 0}};
  EXPECT_NEAR(preprocess_image(img).pixels[0], 0.299, 1e-12);
}

TEST(Preprocess, RejectsInconsistentBuffer) {
  Image img{4, 4, 3, std::vector<std::uint8_t>(10)};
  EXPECT_THROW(preprocess_image(img), DataError);
}

TEST(Ingest, OrdersByFilename) {
  test::TempDir dir;
  write_png(dir / "002.png", 40, 20, 200);
  write_png(dir / "000.png", 40, 20, 0);
  write_png(dir / "001.png", 40, 20, 100);
  std::ofstream(dir / "notes.txt") << "not an image";
  const auto t = ingest_directory(dir.path());
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.labels, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_NEAR(t.frames[0].pixels[0], 0.0, 1e-12);
  EXPECT_NEAR(t.frames[1].pixels[0], 100.0 / 255.0, 1e-12);
  EXPECT_NEAR(t.frames[2].pixels[0], 200.0 / 255.0, 1e-12);
}

TEST(Ingest, EmptyDirectoryIsAnError) {
  test::TempDir dir;
  EXPECT_THROW(ingest_directory(dir.path()), DataError);
  EXPECT_THROW(ingest_directory(dir / "missing"), DataError);
}

TEST(Ingest, CorruptImageNamesTheFile) {
  test::TempDir dir;
  std::ofstream(dir / "000.png") << "garbage";
  try {
    ingest_directory(dir.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("000.png"), std::string::npos);
  }
}

TEST(Ingest, ThousandFrameTraverse) {
  test::TempDir dir;
  Traverse t;
  for (std::size_t i = 0; i < 1000; ++i) {
    Frame f;
    f.pixels.assign(Frame::kSize, static_cast<double>(i % 256) / 255.0);
    t.frames.push_back(f);
    t.labels.push_back(i);
  }
  export_traverse(dir.path(), t);
  const auto back = ingest_directory(dir.path());
  ASSERT_EQ(back.size(), 1000u);
  EXPECT_NEAR(back.frames[999].pixels[0], t.frames[999].pixels[0], 1e-12);
}

TEST(Synthetic, Deterministic) {
  SynthConfig cfg;
  cfg.num_places = 200;
  cfg.seed = 7;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  ASSERT_EQ(a.first.size(), 200u);
  ASSERT_EQ(a.second.size(), 200u);
  for (std::size_t i = 0; i < 200; ++i) {
    ASSERT_EQ(a.first.frames[i].pixels, b.first.frames[i].pixels);
    ASSERT_EQ(a.second.frames[i].pixels, b.second.frames[i].pixels);
  }
}

TEST(Synthetic, NoAppearanceChangeGivesIdenticalQuery) {
  SynthConfig cfg;
  cfg.num_places = 50;
  cfg.appearance = Appearance::none;
  cfg.viewpoint_jitter_px = 0;
  const auto [ref, query] = generate_synthetic(cfg);
  for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_EQ(ref.frames[i].pixels, query.frames[i].pixels);
}

TEST(Synthetic, ExtremeDiffersMoreThanMild) {
  SynthConfig cfg;
  cfg.num_places = 100;
  cfg.seed = 3;
  cfg.appearance = Appearance::mild;
  const auto mild = generate_synthetic(cfg);
  cfg.appearance = Appearance::extreme;
  const auto extreme = generate_synthetic(cfg);
  EXPECT_EQ(mild.first.frames[0].pixels, extreme.first.frames[0].pixels);
  EXPECT_GT(mean_abs_diff(extreme.first, extreme.second), mean_abs_diff(mild.first, mild.second));
}

TEST(Synthetic, PixelsStayInUnitRange) {
  SynthConfig cfg;
  cfg.num_places = 30;
  cfg.noise_sigma = 0.5;
  cfg.occluder_count = 4;
  cfg.viewpoint_jitter_px = 3;
  const auto [ref, query] = generate_synthetic(cfg);
  for (const auto* t : {&ref, &query})
    for (const auto& f : t->frames)
      for (double v : f.pixels) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
}

TEST(Synthetic, ExportRoundTripsThroughPgm) {
  test::TempDir dir;
  SynthConfig cfg;
  cfg.num_places = 5;
  const auto [ref, query] = generate_synthetic(cfg);
  export_traverse(dir / "ref", ref, "config_hash=abc");
  const auto back = ingest_directory(dir / "ref");
  ASSERT_EQ(back.size(), 5u);
  for (std::size_t k = 0; k < Frame::kSize; ++k)
    ASSERT_NEAR(back.frames[2].pixels[k], ref.frames[2].pixels[k], 0.5 / 255.0 + 1e-12);
  EXPECT_NE(test::slurp(dir / "ref" / "000000.pgm").find("config_hash=abc"), std::string::npos);
}

TEST(Synthetic, GroundTruthRoundTrip) {
  test::TempDir dir;
  const std::vector<std::size_t> gt{0, 1, 1, 3};
  write_ground_truth(dir / "gt.csv", gt, "config_hash=1");
  EXPECT_EQ(read_ground_truth(dir / "gt.csv"), gt);
  std::ofstream(dir / "bad.csv") << "query_index,reference_index\n1,0\n";
  EXPECT_THROW(read_ground_truth(dir / "bad.csv"), DataError);
}

TEST(Synthetic, InvalidConfigRejected) {
  SynthConfig cfg;
  cfg.num_places = 0;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
  EXPECT_THROW(parse_appearance("night"), ConfigError);
}
