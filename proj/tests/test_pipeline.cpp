#include <fstream>
#include <sstream>

#include "doctest.h"
#include "patchmine/pipeline.hpp"
#include "patchmine/synth.hpp"
#include "test_util.hpp"

using namespace patchmine;

namespace {

/// Small moving textured square over a plain background; mines quickly.
SynthVideoSpec mover_spec(const std::string& id, int dx, int dy) {
  SynthVideoSpec s;
  s.video_id = id;
  s.width = 96;
  s.height = 80;
  s.n_frames = 4;
  s.object = {24, 20, 7};
  s.start_x = 10;
  s.start_y = 12;
  s.dx = dx;
  s.dy = dy;
  return s;
}

std::filesystem::path make_video(const std::string& dir_tag, const SynthVideoSpec& spec) {
  const auto root = testutil::fresh_dir(dir_tag);
  generate_synthetic_video(spec, root);
  return root / spec.video_id;
}

RunConfig fast_config() {
  RunConfig c;
  c.resize_patches = false;
  return c;
}

void write_black_video(const std::filesystem::path& dir) {
  testutil::write_video(dir, {testutil::plain_frame(96, 80, 0), testutil::plain_frame(96, 80, 0),
                              testutil::plain_frame(96, 80, 0)});
}

bool same_record(const PatchRecord& a, const PatchRecord& b) {
  return a.video_id == b.video_id && a.frame_index == b.frame_index && a.box == b.box &&
         a.role == b.role && a.s_a == b.s_a && a.s_m == b.s_m && a.s == b.s &&
         a.cluster_score == b.cluster_score && a.source == b.source;
}

}  // namespace

TEST_CASE("config files parse keys, comments and blank lines") {
  const auto dir = testutil::fresh_dir("pipe_config");
  {
    std::ofstream out(dir / "run.cfg");
    out << "# mining run\n"
        << "input_root = /data/in\n"
        << "output_root=/data/out\n"
        << "\n"
        << "top_k = 9\n"
        << "corr_threshold = 0.25\n"
        << "resize_patches = false\n"
        << "include_seed_term = yes\n"
        << "workers = 3\n"
        << "external_flow_root =\n";
  }
  const RunConfig c = load_run_config(dir / "run.cfg");
  CHECK(c.input_root == "/data/in");
  CHECK(c.output_root == "/data/out");
  CHECK(c.top_k == 9);
  CHECK(c.filter.corr_threshold == 0.25);
  CHECK(c.resize_patches == false);
  CHECK(c.cluster.include_seed_term == true);
  CHECK(c.workers == 3);
  CHECK(!c.external_flow_root.has_value());  // empty value leaves it unset
  // Untouched keys keep their defaults.
  CHECK(c.bg_pool == 100);
  CHECK(c.flow.alpha == 15.0f);
}

TEST_CASE("config errors carry the offending key, value or line") {
  const auto dir = testutil::fresh_dir("pipe_config_bad");
  RunConfig c;
  CHECK_THROWS_WITH_AS(apply_config_entry(c, "topk", "3"), doctest::Contains("unknown config key"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(apply_config_entry(c, "top_k", "banana"),
                       doctest::Contains("invalid value for config key top_k"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(apply_config_entry(c, "flow_alpha", "1.5x"), doctest::Contains("'1.5x'"),
                       std::invalid_argument);

  {
    std::ofstream out(dir / "bad.cfg");
    out << "top_k = 5\n\nthis line has no equals\n";
  }
  CHECK_THROWS_WITH_AS(load_run_config(dir / "bad.cfg"), doctest::Contains("line 3"),
                       std::invalid_argument);
  CHECK_THROWS_AS(load_run_config(dir / "absent.cfg"), IoError);
}

TEST_CASE("the config echo is sorted and omits the worker count") {
  RunConfig c;
  c.workers = 7;
  c.input_root = "in";
  c.output_root = "out";
  const auto lines = c.echo();
  CHECK(std::is_sorted(lines.begin(), lines.end()));
  for (const auto& line : lines) {
    CHECK(line.find("workers") == std::string::npos);
  }
  const auto has = [&](const std::string& entry) {
    return std::find(lines.begin(), lines.end(), entry) != lines.end();
  };
  CHECK(has("top_k=15"));
  CHECK(has("bg_pool=100"));
  CHECK(has("corr_threshold=0.1"));
  CHECK(has("include_seed_term=false"));
  CHECK(has("input_root=in"));

  // Optional roots appear once set.
  c.external_flow_root = "flows";
  CHECK(std::find(c.echo().begin(), c.echo().end(), "external_flow_root=flows") != c.echo().end());
}

TEST_CASE("mine_video produces one fg and one bg record per frame") {
  const SynthVideoSpec spec = mover_spec("mv", 2, 1);
  const auto video_dir = make_video("pipe_mine_one", spec);
  const RunConfig config = fast_config();

  const VideoResult r = mine_video(config, video_dir);
  REQUIRE(r.mined);
  CHECK(r.video_id == "mv");
  CHECK(r.skip_reason.empty());
  REQUIRE(r.records.size() == 8);  // 4 frames x (FG + BG)
  REQUIRE(r.patches.size() == 8);

  for (int t = 0; t < 4; ++t) {
    const PatchRecord& fg = r.records[2 * t];
    const PatchRecord& bg = r.records[2 * t + 1];
    CHECK(fg.frame_index == t);
    CHECK(bg.frame_index == t);
    CHECK(fg.role == PatchRole::FG);
    CHECK(bg.role == PatchRole::BG);
    CHECK(fg.cluster_score.has_value());
    CHECK(!bg.cluster_score.has_value());
    CHECK(fg.box != bg.box);
    // The textured square is the only structure: FG must at least touch it.
    CHECK(iou(fg.box, {10 + 2 * t, 12 + t, 24, 20}) > 0.1);
    // Patches keep native box dimensions when resizing is off.
    CHECK(r.patches[2 * t].width == fg.box.w);
    CHECK(r.patches[2 * t].height == fg.box.h);
  }

  // All FG records share the winning cluster's score.
  for (int t = 1; t < 4; ++t) {
    CHECK(r.records[2 * t].cluster_score == r.records[0].cluster_score);
  }
}

TEST_CASE("patch resizing follows the configured dimensions") {
  const SynthVideoSpec spec = mover_spec("rz", 2, 0);
  const auto video_dir = make_video("pipe_resize", spec);
  RunConfig config;
  config.resize_patches = true;
  config.resize_w = 64;
  config.resize_h = 48;
  const VideoResult r = mine_video(config, video_dir);
  REQUIRE(r.mined);
  for (const ImageRGB& p : r.patches) {
    CHECK(p.width == 64);
    CHECK(p.height == 48);
  }
}

TEST_CASE("videos that filter to nothing are skipped with a reason") {
  const auto root = testutil::fresh_dir("pipe_skip");
  write_black_video(root / "black");
  const VideoResult r = mine_video(fast_config(), root / "black");
  CHECK(!r.mined);
  CHECK(r.skip_reason == "all frames removed by filtering");
  CHECK(r.records.empty());

  // A two-frame video whose second frame fails the intensity gate leaves a
  // single frame: not enough to mine.
  testutil::write_video(root / "short",
                        {testutil::square_frame(96, 80, 10, 12, 24, 7),
                         testutil::plain_frame(96, 80, 255)});
  const VideoResult s = mine_video(fast_config(), root / "short");
  CHECK(!s.mined);
  CHECK(s.skip_reason == "fewer than two frames after filtering");

  const VideoResult missing = mine_video(fast_config(), root / "does_not_exist");
  CHECK(!missing.mined);
  CHECK(!missing.skip_reason.empty());
}

TEST_CASE("external flow files reproduce the built-in result exactly") {
  const SynthVideoSpec spec = mover_spec("xf", 2, 0);
  const auto video_dir = make_video("pipe_extflow", spec);
  const RunConfig base = fast_config();
  const VideoResult builtin = mine_video(base, video_dir);
  REQUIRE(builtin.mined);

  // Write the same fields the pipeline would compute: forward pairs, with the
  // last frame reusing its predecessor in reverse.
  const auto ext_root = testutil::fresh_dir("pipe_extflow_files");
  const VideoSequence video = filter_frames(load_sequence(video_dir), base.filter).sequence;
  const std::size_t n = video.frames.size();
  REQUIRE(n == 4);
  std::filesystem::create_directories(ext_root / "xf");
  char name[48];
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t q = p + 1 < n ? p + 1 : n - 2;
    const FlowField flow = compute_flow(video.frames[p], video.frames[q], base.flow);
    std::snprintf(name, sizeof name, "flow_%04d_%04d.pmf", video.retained_indices[p],
                  video.retained_indices[q]);
    write_flow_file(flow, ext_root / "xf" / name);
  }

  RunConfig with_ext = base;
  with_ext.external_flow_root = ext_root;
  const VideoResult external = mine_video(with_ext, video_dir);
  REQUIRE(external.mined);
  REQUIRE(external.records.size() == builtin.records.size());
  for (std::size_t i = 0; i < builtin.records.size(); ++i) {
    CHECK(same_record(external.records[i], builtin.records[i]));
  }
}

TEST_CASE("external flow with wrong dimensions skips the video") {
  const SynthVideoSpec spec = mover_spec("xb", 2, 0);
  const auto video_dir = make_video("pipe_extflow_bad", spec);
  const auto ext_root = testutil::fresh_dir("pipe_extflow_bad_files");
  std::filesystem::create_directories(ext_root / "xb");
  FlowField wrong;
  wrong.width = 32;
  wrong.height = 32;
  wrong.u = ImageF::zeros(32, 32);
  wrong.v = ImageF::zeros(32, 32);
  write_flow_file(wrong, ext_root / "xb" / "flow_0000_0001.pmf");

  RunConfig config = fast_config();
  config.external_flow_root = ext_root;
  const VideoResult r = mine_video(config, video_dir);
  CHECK(!r.mined);
  CHECK(r.skip_reason.find("external flow") != std::string::npos);
  CHECK(r.skip_reason.find("32x32") != std::string::npos);
}

TEST_CASE("external embeddings reproduce the built-in result exactly") {
  const SynthVideoSpec spec = mover_spec("xe", 2, 0);
  const auto video_dir = make_video("pipe_extemb", spec);
  const RunConfig base = fast_config();
  const VideoResult builtin = mine_video(base, video_dir);
  REQUIRE(builtin.mined);

  // Rebuild the top-k pools the same way the pipeline does and embed them
  // with the built-in embedder; the pipeline must then produce identical
  // records from the file.
  const VideoSequence video = filter_frames(load_sequence(video_dir), base.filter).sequence;
  const std::size_t n = video.frames.size();
  ExternalEmbeddings ext;
  ext.dim = base.embedding.dim;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t q = p + 1 < n ? p + 1 : n - 2;
    const FlowField flow = compute_flow(video.frames[p], video.frames[q], base.flow);
    const EdgeMap rgb_em = compute_edge_map(video.frames[p]);
    const EdgeMap flow_em = compute_edge_map(flow_magnitude_image(flow));
    const ProposalSet full =
        cross_score(generate_proposals(rgb_em, base.proposals),
                    generate_proposals(flow_em, base.proposals), rgb_em, flow_em,
                    video.retained_indices[p], base.proposals.objectness);
    for (const Proposal& pr : top_k(full, base.top_k).proposals) {
      ext.table[{pr.frame_index, pr.box}] = embed_patch(video.frames[p], pr.box, base.embedding);
    }
  }
  const auto ext_file = testutil::fresh_dir("pipe_extemb_files") / "emb.pme";
  write_external_embeddings(ext, ext_file);

  RunConfig with_ext = base;
  with_ext.external_embeddings = ext_file;
  const VideoResult external = mine_video(with_ext, video_dir);
  REQUIRE(external.mined);
  REQUIRE(external.records.size() == builtin.records.size());
  for (std::size_t i = 0; i < builtin.records.size(); ++i) {
    CHECK(same_record(external.records[i], builtin.records[i]));
  }
}

TEST_CASE("missing external embeddings skip the video and name the proposals") {
  const SynthVideoSpec spec = mover_spec("xm", 2, 0);
  const auto video_dir = make_video("pipe_extemb_missing", spec);

  ExternalEmbeddings ext;
  ext.dim = 2048;
  Embedding one;
  one.values.assign(2048, 0.0f);
  one.values[0] = 1.0f;
  ext.table[{0, {0, 0, 8, 8}}] = one;
  const auto ext_file = testutil::fresh_dir("pipe_extemb_missing_files") / "emb.pme";
  write_external_embeddings(ext, ext_file);

  RunConfig config = fast_config();
  config.external_embeddings = ext_file;
  const VideoResult r = mine_video(config, video_dir);
  CHECK(!r.mined);
  CHECK(r.skip_reason.find("external embeddings missing") != std::string::npos);
  CHECK(r.skip_reason.find("xm:") != std::string::npos);
}

TEST_CASE("run_mine exports the dataset and explains every skip") {
  const auto input = testutil::fresh_dir("pipe_run_in");
  generate_synthetic_video(mover_spec("a", 2, 0), input);
  write_black_video(input / "b");
  generate_synthetic_video(mover_spec("c", 0, 2), input);

  RunConfig config = fast_config();
  config.input_root = input;
  config.output_root = testutil::fresh_dir("pipe_run_out");

  const MineSummary summary = run_mine(config);
  CHECK(summary.videos_mined == 2);
  CHECK(summary.videos_skipped == 1);
  CHECK(summary.dataset.fg_count == 8);
  CHECK(summary.dataset.bg_count == 8);

  const auto records = read_manifest(summary.manifest_path);
  REQUIRE(records.size() == 16);
  CHECK(records.front().video_id == "a");
  CHECK(records.back().video_id == "c");
  for (const auto& rec : records) {
    CHECK(rec.video_id != "b");
    CHECK(std::filesystem::exists(config.output_root / rec.file));
  }

  const std::string report = testutil::read_file(summary.report_path);
  CHECK(report.find("[config]") != std::string::npos);
  CHECK(report.find("video=a status=mined patches=8") != std::string::npos);
  CHECK(report.find("video=b status=skipped reason=all frames removed by filtering") !=
        std::string::npos);
  CHECK(report.find("[dataset]") != std::string::npos);
  CHECK(report.find("workers") == std::string::npos);
}

TEST_CASE("run_mine writes the report then raises when nothing was mined") {
  const auto input = testutil::fresh_dir("pipe_run_empty_in");
  write_black_video(input / "only");
  RunConfig config = fast_config();
  config.input_root = input;
  config.output_root = testutil::fresh_dir("pipe_run_empty_out");

  CHECK_THROWS_WITH_AS(run_mine(config), doctest::Contains("no videos mined"), NoOutputError);
  CHECK(std::filesystem::exists(config.output_root / "report.txt"));
  CHECK(!std::filesystem::exists(config.output_root / "manifest.jsonl"));

  RunConfig bad = fast_config();
  bad.input_root = input / "nope";
  bad.output_root = config.output_root;
  CHECK_THROWS_AS(run_mine(bad), IoError);
}

TEST_CASE("worker count changes nothing in the output bytes") {
  const auto input = testutil::fresh_dir("pipe_workers_in");
  generate_synthetic_video(mover_spec("a", 2, 0), input);
  generate_synthetic_video(mover_spec("b", 0, 2), input);
  write_black_video(input / "z");

  RunConfig one = fast_config();
  one.input_root = input;
  one.output_root = testutil::fresh_dir("pipe_workers_out1");
  one.workers = 1;
  run_mine(one);

  RunConfig many = one;
  many.output_root = testutil::fresh_dir("pipe_workers_out2");
  many.workers = 2;
  run_mine(many);

  CHECK(testutil::read_file(one.output_root / "manifest.jsonl") ==
        testutil::read_file(many.output_root / "manifest.jsonl"));
  CHECK(testutil::read_file(one.output_root / "labels.txt") ==
        testutil::read_file(many.output_root / "labels.txt"));

  // The reports echo output_root, which differs by construction; everything
  // else must match byte for byte.
  const auto strip_root_line = [](const std::filesystem::path& p) {
    std::istringstream in(testutil::read_file(p));
    std::string line, kept;
    while (std::getline(in, line)) {
      if (line.rfind("output_root=", 0) == 0) continue;
      kept += line;
      kept += '\n';
    }
    return kept;
  };
  CHECK(strip_root_line(one.output_root / "report.txt") ==
        strip_root_line(many.output_root / "report.txt"));
}
