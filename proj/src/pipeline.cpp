#include "patchmine/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "patchmine/image_io.hpp"

namespace patchmine {
namespace {

namespace fs = std::filesystem;

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("invalid value for config key " + key + ": '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

}  // namespace

std::vector<std::string> RunConfig::echo() const {
  std::vector<std::string> lines;
  auto add = [&](const std::string& key, const std::string& value) {
    lines.push_back(key + "=" + value);
  };
  add("area_exponent", format_real(proposals.objectness.area_exponent));
  add("bg_pool", std::to_string(bg_pool));
  add("border_penalty", format_real(proposals.objectness.border_penalty));
  add("corr_threshold", format_real(filter.corr_threshold));
  add("embedding_dim", std::to_string(embedding.dim));
  if (external_embeddings) add("external_embeddings", external_embeddings->string());
  if (external_flow_root) add("external_flow_root", external_flow_root->string());
  add("flow_alpha", format_real(flow.alpha));
  add("flow_iterations", std::to_string(flow.iterations));
  add("flow_levels", std::to_string(flow.levels));
  add("flow_scale", format_real(flow.scale));
  add("include_seed_term", cluster.include_seed_term ? "true" : "false");
  add("input_root", input_root.string());
  add("intensity_max", format_real(filter.intensity_max));
  add("intensity_min", format_real(filter.intensity_min));
  add("max_scale", format_real(proposals.max_scale));
  add("min_area", std::to_string(proposals.min_area));
  add("min_scale", format_real(proposals.min_scale));
  add("n_proposals", std::to_string(proposals.n_target));
  add("n_scales", std::to_string(proposals.n_scales));
  add("nms_iou", format_real(proposals.nms_iou));
  add("output_root", output_root.string());
  add("resize_h", std::to_string(resize_h));
  add("resize_patches", resize_patches ? "true" : "false");
  add("resize_w", std::to_string(resize_w));
  add("seed", std::to_string(seed));
  add("stride_div", std::to_string(proposals.stride_div));
  add("top_k", std::to_string(top_k));
  std::sort(lines.begin(), lines.end());
  return lines;
}

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "input_root") {
    config.input_root = value;
  } else if (key == "output_root") {
    config.output_root = value;
  } else if (key == "corr_threshold") {
    config.filter.corr_threshold = parse_double(key, value);
  } else if (key == "intensity_min") {
    config.filter.intensity_min = parse_double(key, value);
  } else if (key == "intensity_max") {
    config.filter.intensity_max = parse_double(key, value);
  } else if (key == "flow_alpha") {
    config.flow.alpha = static_cast<float>(parse_double(key, value));
  } else if (key == "flow_iterations") {
    config.flow.iterations = parse_int(key, value);
  } else if (key == "flow_levels") {
    config.flow.levels = parse_int(key, value);
  } else if (key == "flow_scale") {
    config.flow.scale = static_cast<float>(parse_double(key, value));
  } else if (key == "n_proposals") {
    config.proposals.n_target = parse_int(key, value);
  } else if (key == "nms_iou") {
    config.proposals.nms_iou = parse_double(key, value);
  } else if (key == "min_scale") {
    config.proposals.min_scale = parse_double(key, value);
  } else if (key == "max_scale") {
    config.proposals.max_scale = parse_double(key, value);
  } else if (key == "n_scales") {
    config.proposals.n_scales = parse_int(key, value);
  } else if (key == "stride_div") {
    config.proposals.stride_div = parse_int(key, value);
  } else if (key == "min_area") {
    config.proposals.min_area = parse_int(key, value);
  } else if (key == "border_penalty") {
    config.proposals.objectness.border_penalty = parse_double(key, value);
  } else if (key == "area_exponent") {
    config.proposals.objectness.area_exponent = parse_double(key, value);
  } else if (key == "top_k") {
    config.top_k = parse_int(key, value);
  } else if (key == "bg_pool") {
    config.bg_pool = parse_int(key, value);
  } else if (key == "embedding_dim") {
    config.embedding.dim = parse_int(key, value);
  } else if (key == "include_seed_term") {
    config.cluster.include_seed_term = parse_bool(key, value);
  } else if (key == "resize_w") {
    config.resize_w = parse_int(key, value);
  } else if (key == "resize_h") {
    config.resize_h = parse_int(key, value);
  } else if (key == "resize_patches") {
    config.resize_patches = parse_bool(key, value);
  } else if (key == "workers") {
    config.workers = parse_int(key, value);
  } else if (key == "seed") {
    config.seed = parse_u64(key, value);
  } else if (key == "external_flow_root") {
    if (!value.empty()) config.external_flow_root = fs::path(value);
  } else if (key == "external_embeddings") {
    if (!value.empty()) config.external_embeddings = fs::path(value);
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " is not key=value: '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + " has an empty key");
    apply_config_entry(config, key, value);
  }
  return config;
}

namespace {

std::string flow_file_name(int from, int to) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "flow_%04d_%04d.pmf", from, to);
  return buf;
}

/// Index of the frame paired with position p: the next retained frame, except
/// the last frame which reuses its predecessor so every frame has a motion
/// image of its own dimensions.
std::size_t pair_position(std::size_t p, std::size_t n) { return p + 1 < n ? p + 1 : n - 2; }

VideoResult mine_video_guarded(const RunConfig& config, const fs::path& video_dir,
                               const ExternalEmbeddings* external) {
  VideoResult result;
  result.video_id = video_dir.filename().string();

  VideoSequence raw = load_sequence(video_dir);
  FilterResult filtered = filter_frames(raw, config.filter);
  for (const auto& line : filtered.report.log_lines()) result.log_lines.push_back(line);
  if (filtered.report.rejected) {
    result.skip_reason = "all frames removed by filtering";
    return result;
  }
  const VideoSequence& video = filtered.sequence;
  const std::size_t n = video.frames.size();
  if (n < 2) {
    result.skip_reason = "fewer than two frames after filtering";
    return result;
  }

  std::vector<FlowField> flows(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t q = pair_position(p, n);
    const Frame& a = video.frames[p];
    if (config.external_flow_root) {
      const fs::path file = *config.external_flow_root / result.video_id /
                            flow_file_name(video.retained_indices[p], video.retained_indices[q]);
      flows[p] = read_flow_file(file);
      if (flows[p].width != a.width || flows[p].height != a.height)
        throw std::runtime_error("external flow " + file.string() + " is " +
                                 std::to_string(flows[p].width) + "x" +
                                 std::to_string(flows[p].height) + " but the frame is " +
                                 std::to_string(a.width) + "x" + std::to_string(a.height));
    } else {
      bool resized = false;
      flows[p] = compute_flow(a, video.frames[q], config.flow, &resized);
      if (resized)
        result.log_lines.push_back("flow video=" + result.video_id +
                                   " frame=" + std::to_string(video.retained_indices[q]) +
                                   " resized to " + std::to_string(a.width) + "x" +
                                   std::to_string(a.height));
    }
  }

  std::vector<ProposalSet> full_sets(n);
  std::vector<ProposalSet> topk_sets(n);
  for (std::size_t p = 0; p < n; ++p) {
    const Frame& frame = video.frames[p];
    const EdgeMap rgb_em = compute_edge_map(frame);
    const Frame magnitude = flow_magnitude_image(flows[p]);
    const EdgeMap flow_em = compute_edge_map(magnitude);
    const auto rgb_props = generate_proposals(rgb_em, config.proposals);
    const auto flow_props = generate_proposals(flow_em, config.proposals);
    full_sets[p] = cross_score(rgb_props, flow_props, rgb_em, flow_em, video.retained_indices[p],
                               config.proposals.objectness);
    topk_sets[p] = top_k(full_sets[p], config.top_k);
  }

  std::vector<std::vector<Embedding>> embeddings(n);
  if (external) {
    std::vector<std::string> missing;
    for (std::size_t p = 0; p < n; ++p) {
      for (const Proposal& pr : topk_sets[p].proposals) {
        const EmbeddingKey key{pr.frame_index, pr.box};
        const auto it = external->table.find(key);
        if (it == external->table.end()) {
          missing.push_back(result.video_id + ":" + to_string(key));
        } else {
          embeddings[p].push_back(it->second);
        }
      }
    }
    if (!missing.empty()) {
      std::string msg =
          "external embeddings missing " + std::to_string(missing.size()) + " proposals:";
      for (const auto& key : missing) msg += " " + key;
      throw std::runtime_error(msg);
    }
  } else {
    for (std::size_t p = 0; p < n; ++p) {
      for (const Proposal& pr : topk_sets[p].proposals)
        embeddings[p].push_back(embed_patch(video.frames[p], pr.box, config.embedding));
    }
  }

  const auto clusters = build_clusters(topk_sets, embeddings, config.cluster);
  const ForegroundSelection fg = select_foreground(clusters);

  std::optional<std::pair<int, int>> resize_to;
  if (config.resize_patches) resize_to = {config.resize_w, config.resize_h};

  for (std::size_t p = 0; p < n; ++p) {
    const int frame_index = video.retained_indices[p];
    const Frame& frame = video.frames[p];
    const Proposal& fg_prop = fg.per_frame.at(frame_index);

    PatchRecord fg_rec;
    fg_rec.video_id = result.video_id;
    fg_rec.frame_index = frame_index;
    fg_rec.box = fg_prop.box;
    fg_rec.role = PatchRole::FG;
    fg_rec.s_a = fg_prop.s_a;
    fg_rec.s_m = fg_prop.s_m;
    fg_rec.s = fg_prop.s;
    fg_rec.cluster_score = fg.score;
    fg_rec.source = fg_prop.source;
    result.records.push_back(std::move(fg_rec));
    result.patches.push_back(crop_patch(frame, fg_prop.box, resize_to));

    const BackgroundChoice bg = select_background(full_sets[p].proposals, fg_prop, config.bg_pool);
    if (bg.area_fallback)
      result.log_lines.push_back("background video=" + result.video_id +
                                 " frame=" + std::to_string(frame_index) +
                                 " used largest-area fallback");
    PatchRecord bg_rec;
    bg_rec.video_id = result.video_id;
    bg_rec.frame_index = frame_index;
    bg_rec.box = bg.proposal.box;
    bg_rec.role = PatchRole::BG;
    bg_rec.s_a = bg.proposal.s_a;
    bg_rec.s_m = bg.proposal.s_m;
    bg_rec.s = bg.proposal.s;
    bg_rec.source = bg.proposal.source;
    result.records.push_back(std::move(bg_rec));
    result.patches.push_back(crop_patch(frame, bg.proposal.box, resize_to));
  }

  result.mined = true;
  return result;
}

}  // namespace

VideoResult mine_video(const RunConfig& config, const fs::path& video_dir,
                       const ExternalEmbeddings* external) {
  std::optional<ExternalEmbeddings> local;
  try {
    if (external == nullptr && config.external_embeddings) {
      local = load_external_embeddings(*config.external_embeddings);
      external = &*local;
    }
    return mine_video_guarded(config, video_dir, external);
  } catch (const std::exception& e) {
    VideoResult failed;
    failed.video_id = video_dir.filename().string();
    failed.mined = false;
    failed.skip_reason = e.what();
    return failed;
  }
}

MineSummary run_mine(const RunConfig& config) {
  if (config.input_root.empty() || !fs::is_directory(config.input_root))
    throw IoError("input root is not a directory: " + config.input_root.string());
  if (config.output_root.empty()) throw std::invalid_argument("output root is not set");

  std::vector<fs::path> video_dirs;
  for (const auto& entry : fs::directory_iterator(config.input_root))
    if (entry.is_directory()) video_dirs.push_back(entry.path());
  std::sort(video_dirs.begin(), video_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::optional<ExternalEmbeddings> external;
  if (config.external_embeddings)
    external = load_external_embeddings(*config.external_embeddings);
  const ExternalEmbeddings* external_ptr = external ? &*external : nullptr;

  std::vector<VideoResult> results(video_dirs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= video_dirs.size()) break;
      results[i] = mine_video(config, video_dirs[i], external_ptr);
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(std::max(config.workers, 1), std::max<std::size_t>(video_dirs.size(), 1));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  MineSummary summary;
  std::vector<PatchRecord> records;
  std::vector<ImageRGB> patches;
  for (auto& r : results) {
    if (!r.mined) {
      ++summary.videos_skipped;
      continue;
    }
    ++summary.videos_mined;
    for (auto& rec : r.records) records.push_back(std::move(rec));
    for (auto& img : r.patches) patches.push_back(std::move(img));
  }

  std::error_code ec;
  fs::create_directories(config.output_root, ec);
  if (ec) throw IoError("cannot create output directory: " + config.output_root.string());

  std::ostringstream report;
  report << "patchmine run report\n\n[config]\n";
  for (const auto& line : config.echo()) report << line << "\n";
  report << "\n[videos]\n";
  for (const auto& r : results) {
    if (r.mined) {
      report << "video=" << r.video_id << " status=mined patches=" << r.records.size() << "\n";
    } else {
      report << "video=" << r.video_id << " status=skipped reason=" << r.skip_reason << "\n";
    }
  }
  report << "\n[log]\n";
  for (const auto& r : results)
    for (const auto& line : r.log_lines) report << line << "\n";

  summary.report_path = config.output_root / "report.txt";
  summary.manifest_path = config.output_root / "manifest.jsonl";

  auto flush_report = [&] {
    std::ofstream out(summary.report_path, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + summary.report_path.string());
    out << report.str();
  };

  if (records.empty()) {
    report << "\n[dataset]\nempty\n";
    flush_report();
    throw NoOutputError("no videos mined; every input was skipped (see " +
                        summary.report_path.string() + ")");
  }

  summary.dataset = export_dataset(std::move(records), patches, config.output_root);
  report << "\n[dataset]\n";
  report << "fg=" << summary.dataset.fg_count << " bg=" << summary.dataset.bg_count << "\n";
  for (const auto& [video, count] : summary.dataset.per_video)
    report << "video=" << video << " patches=" << count << "\n";
  flush_report();
  return summary;
}

}  // namespace patchmine
