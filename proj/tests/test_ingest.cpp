#include <cmath>

#include "doctest.h"
#include "patchmine/ingest.hpp"
#include "test_util.hpp"

using namespace patchmine;

namespace {

VideoSequence make_sequence(std::vector<Frame> frames) {
  VideoSequence seq;
  seq.video_id = "test";
  seq.frames = std::move(frames);
  for (int i = 0; i < static_cast<int>(seq.frames.size()); ++i) seq.retained_indices.push_back(i);
  return seq;
}

Frame negated(const Frame& f) {
  ImageRGB inv = f.rgb;
  for (auto& v : inv.data) v = static_cast<std::uint8_t>(255 - v);
  return Frame::from_rgb(std::move(inv));
}

}  // namespace

TEST_CASE("load_sequence orders frames by numeric stem") {
  const auto dir = testutil::fresh_dir("ingest") / "load_order";
  std::filesystem::create_directories(dir);
  // Write deliberately unordered, with non-uniform padding: 2 < 010 < 100.
  write_png(ImageRGB::filled(8, 8, 100, 0, 0), dir / "100.png");
  write_png(ImageRGB::filled(8, 8, 10, 0, 0), dir / "010.png");
  write_png(ImageRGB::filled(8, 8, 2, 0, 0), dir / "2.png");
  const VideoSequence seq = load_sequence(dir);
  REQUIRE(seq.frames.size() == 3);
  CHECK(seq.video_id == "load_order");
  CHECK(seq.frames[0].rgb.pixel(0, 0)[0] == 2);
  CHECK(seq.frames[1].rgb.pixel(0, 0)[0] == 10);
  CHECK(seq.frames[2].rgb.pixel(0, 0)[0] == 100);
  CHECK(seq.retained_indices == std::vector<int>{0, 1, 2});
}

TEST_CASE("load_sequence names a corrupt file") {
  const auto dir = testutil::fresh_dir("load_corrupt");
  for (int i = 0; i < 3; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "%03d.png", i);
    write_png(ImageRGB::filled(8, 8, 50, 50, 50), dir / name);
  }
  {
    std::ofstream out(dir / "001.png", std::ios::binary | std::ios::trunc);
    out << "garbage";
  }
  CHECK_THROWS_WITH_AS(load_sequence(dir), doctest::Contains("001.png"), IoError);
}

TEST_CASE("load_sequence rejects an empty directory") {
  const auto dir = testutil::fresh_dir("load_empty");
  CHECK_THROWS_AS(load_sequence(dir), IoError);
}

TEST_CASE("load_sequence accepts mixed frame sizes") {
  const auto dir = testutil::fresh_dir("load_mixed");
  write_png(ImageRGB::filled(16, 8, 1, 1, 1), dir / "000.png");
  write_png(ImageRGB::filled(8, 16, 2, 2, 2), dir / "001.png");
  const VideoSequence seq = load_sequence(dir);
  REQUIRE(seq.frames.size() == 2);
  CHECK(seq.frames[0].width == 16);
  CHECK(seq.frames[1].width == 8);
}

TEST_CASE("pearson correlation of a frame with itself is 1") {
  const Frame f = testutil::noise_frame(80, 60, 12);
  const auto r = pearson_correlation(f, f);
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pearson correlation with the photographic negative is -1") {
  const Frame f = testutil::noise_frame(80, 60, 13);
  const auto r = pearson_correlation(f, negated(f));
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("pearson correlation of a flat frame is undefined") {
  const Frame flat = testutil::plain_frame(32, 32, 128);
  const Frame tex = testutil::noise_frame(32, 32, 14);
  CHECK_FALSE(pearson_correlation(flat, tex).has_value());
  CHECK_FALSE(pearson_correlation(tex, flat).has_value());
}

TEST_CASE("independent noise frames decorrelate") {
  // 100 independent pairs: with 64x64 = 4096 samples the coefficient's
  // standard error is ~0.016, so |r| < 0.1 is a >6-sigma bound.
  for (std::uint32_t i = 0; i < 100; ++i) {
    const Frame a = testutil::noise_frame(64, 64, 1000 + 2 * i);
    const Frame b = testutil::noise_frame(64, 64, 1001 + 2 * i);
    const auto r = pearson_correlation(a, b);
    REQUIRE(r.has_value());
    CHECK(std::abs(*r) < 0.1);
  }
}

TEST_CASE("mean intensity of black, white and half frames") {
  CHECK(mean_intensity(testutil::plain_frame(16, 16, 0)) == doctest::Approx(0.0));
  CHECK(mean_intensity(testutil::plain_frame(16, 16, 255)) == doctest::Approx(255.0));
  CHECK(mean_intensity(testutil::two_value_frame(16, 16, 0, 255)) == doctest::Approx(127.5));
}

TEST_CASE("gate predicates implement closed intensity and strict correlation") {
  const FilterParams p;
  CHECK(passes_intensity_gate(50.0, p));
  CHECK(passes_intensity_gate(200.0, p));
  CHECK_FALSE(passes_intensity_gate(49.999, p));
  CHECK_FALSE(passes_intensity_gate(200.001, p));
  CHECK_FALSE(passes_correlation_gate(0.1, p));
  CHECK(passes_correlation_gate(0.1 + 1e-9, p));
  CHECK_FALSE(passes_correlation_gate(std::nullopt, p));
}

TEST_CASE("identical textured frames are all retained") {
  const Frame a = testutil::noise_frame(64, 64, 21, 60, 190);
  const FilterResult res = filter_frames(make_sequence({a, a, a, a, a}));
  CHECK(res.sequence.frames.size() == 5);
  CHECK(res.report.removals.empty());
  CHECK_FALSE(res.report.rejected);
}

TEST_CASE("a scene-cut frame is removed and scanning resumes from the survivor") {
  const Frame a = testutil::noise_frame(64, 64, 22, 60, 190);
  const Frame cut = testutil::noise_frame(64, 64, 23, 60, 190);  // independent content
  REQUIRE(std::abs(*pearson_correlation(a, cut)) < 0.1);
  const FilterResult res = filter_frames(make_sequence({a, a, cut, a}));
  REQUIRE(res.sequence.frames.size() == 3);
  CHECK(res.sequence.retained_indices == std::vector<int>{0, 1, 3});
  REQUIRE(res.report.removals.size() == 1);
  CHECK(res.report.removals[0].frame_index == 2);
  CHECK(res.report.removals[0].reason == "correlation");
  CHECK(res.report.removals[0].value <= 0.1);
}

TEST_CASE("all-black video is rejected on the intensity gate") {
  const Frame black = testutil::plain_frame(64, 64, 0);
  const FilterResult res = filter_frames(make_sequence({black, black, black}));
  CHECK(res.sequence.frames.empty());
  CHECK(res.report.rejected);
  REQUIRE(res.report.removals.size() == 3);
  for (const auto& rem : res.report.removals) {
    CHECK(rem.reason == "intensity");
    CHECK(rem.value == doctest::Approx(0.0));
  }
}

TEST_CASE("intensity gate runs before the correlation gate") {
  // Middle frame is too bright; the frames around it correlate perfectly,
  // so after the intensity removal no correlation removal may fire.
  const Frame a = testutil::noise_frame(64, 64, 24, 60, 190);
  const Frame bright = testutil::plain_frame(64, 64, 230);
  const FilterResult res = filter_frames(make_sequence({a, bright, a}));
  REQUIRE(res.sequence.frames.size() == 2);
  CHECK(res.sequence.retained_indices == std::vector<int>{0, 2});
  REQUIRE(res.report.removals.size() == 1);
  CHECK(res.report.removals[0].reason == "intensity");
}

TEST_CASE("an undefined correlation fails the gate") {
  // A flat mid-gray frame passes the intensity gate but has zero variance,
  // so the pair correlation is undefined and the later frame is dropped.
  const Frame a = testutil::noise_frame(64, 64, 25, 60, 190);
  const Frame flat = testutil::plain_frame(64, 64, 128);
  const FilterResult res = filter_frames(make_sequence({a, flat, a}));
  REQUIRE(res.sequence.frames.size() == 2);
  CHECK(res.sequence.retained_indices == std::vector<int>{0, 2});
  REQUIRE(res.report.removals.size() == 1);
  CHECK(res.report.removals[0].frame_index == 1);
  CHECK(res.report.removals[0].reason == "correlation");
  CHECK_FALSE(res.report.removals[0].value_defined);
}

TEST_CASE("filtering is idempotent") {
  std::vector<Frame> frames;
  for (std::uint32_t i = 0; i < 6; ++i) {
    frames.push_back(i == 2 ? testutil::plain_frame(64, 64, 10)
                            : testutil::noise_frame(64, 64, 26 + (i % 2), 60, 190));
  }
  const FilterResult once = filter_frames(make_sequence(frames));
  const FilterResult twice = filter_frames(once.sequence);
  REQUIRE(once.sequence.frames.size() == twice.sequence.frames.size());
  CHECK(twice.report.removals.empty());
  CHECK(once.sequence.retained_indices == twice.sequence.retained_indices);
}

TEST_CASE("every retained consecutive pair passes both gates") {
  std::mt19937 rng(99);
  std::vector<Frame> frames;
  for (int i = 0; i < 8; ++i) {
    const std::uint32_t seed = rng() % 4;  // few distinct contents -> some correlated pairs
    frames.push_back(testutil::noise_frame(64, 64, seed, 60, 190));
  }
  const FilterParams params;
  const FilterResult res = filter_frames(make_sequence(frames), params);
  const auto& kept = res.sequence.frames;
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
    CHECK(passes_intensity_gate(mean_intensity(kept[i]), params));
    CHECK(passes_correlation_gate(pearson_correlation(kept[i], kept[i + 1]), params));
  }
}
