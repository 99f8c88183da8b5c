#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patchmine/embedding.hpp"
#include "patchmine/export.hpp"
#include "patchmine/flow.hpp"
#include "patchmine/ingest.hpp"
#include "patchmine/proposals.hpp"
#include "patchmine/selection.hpp"

namespace patchmine {

/// Raised when a run finishes without producing any output; the CLI maps it
/// to its own exit code.
struct NoOutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path input_root;
  std::filesystem::path output_root;
  FilterParams filter;
  FlowParams flow;
  ProposalGenParams proposals;
  int top_k = 15;
  int bg_pool = 100;
  EmbeddingParams embedding;
  ClusterParams cluster;
  bool resize_patches = true;
  int resize_w = 227;
  int resize_h = 227;
  int workers = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> external_flow_root;
  std::optional<std::filesystem::path> external_embeddings;

  /// key=value lines of every reproducibility-relevant setting, sorted by
  /// key. Excludes `workers`, which never affects output bytes.
  std::vector<std::string> echo() const;
};

/// Flat key=value config file; '#' starts a comment. Unknown keys are errors.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

/// Outcome of mining one video.
struct VideoResult {
  std::string video_id;
  bool mined = false;
  std::string skip_reason;
  std::vector<std::string> log_lines;
  std::vector<PatchRecord> records;
  std::vector<ImageRGB> patches;  // aligned with records
};

/// Mines one video directory end to end. Failures never escape: the result
/// carries mined=false plus the reason. When `external` is null but the
/// config names an embeddings file, the file is loaded here.
VideoResult mine_video(const RunConfig& config, const std::filesystem::path& video_dir,
                       const ExternalEmbeddings* external = nullptr);

struct MineSummary {
  std::size_t videos_mined = 0;
  std::size_t videos_skipped = 0;
  DatasetSummary dataset;
  std::filesystem::path manifest_path;
  std::filesystem::path report_path;
};

/// Full batch run: mines every video directory under input_root (workers in
/// parallel, merged in sorted order), exports the dataset and manifest, and
/// writes the run report. Throws NoOutputError when no video was mined; the
/// report is written first so every skip is explained.
MineSummary run_mine(const RunConfig& config);

}  // namespace patchmine
