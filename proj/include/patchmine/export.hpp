#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patchmine/core.hpp"
#include "patchmine/image.hpp"

namespace patchmine {

enum class PatchRole { FG, BG };

const char* to_string(PatchRole role);

/// One manifest row. `file` is relative to the dataset root.
struct PatchRecord {
  std::string video_id;
  int frame_index = 0;
  BoundingBox box;
  PatchRole role = PatchRole::FG;
  double s_a = 0.0;
  double s_m = 0.0;
  double s = 0.0;
  std::optional<double> cluster_score;  // FG only
  ProposalSource source = ProposalSource::RGB;
  std::string file;
};

/// Pixel-exact crop with optional bilinear resize.
ImageRGB crop_patch(const Frame& f, const BoundingBox& box,
                    std::optional<std::pair<int, int>> resize_to = std::nullopt);

/// Deterministic relative path for a patch: fg/<video>_<frame>.png etc.
std::string patch_file_name(const std::string& video_id, int frame_index, PatchRole role);

/// Serialize one record as a JSON object with fixed key order and reals at
/// 9 significant digits; this is the byte-determinism contract.
std::string manifest_line(const PatchRecord& rec);

/// JSON-lines manifest, records sorted by (video_id, frame_index, role).
/// Throws std::invalid_argument("nothing mined") on an empty list.
void write_manifest(std::vector<PatchRecord> records, const std::filesystem::path& path);

std::vector<PatchRecord> read_manifest(const std::filesystem::path& path);

struct DatasetSummary {
  std::size_t fg_count = 0;
  std::size_t bg_count = 0;
  std::vector<std::pair<std::string, std::size_t>> per_video;  // sorted by video id
};

/// Writes patches under out_dir/fg and out_dir/bg, labels.txt (path then
/// 1 for FG / 0 for BG) and the manifest. Records and images are aligned.
/// A repeated file name signals duplicate input and raises an error.
DatasetSummary export_dataset(std::vector<PatchRecord> records,
                              const std::vector<ImageRGB>& patch_images,
                              const std::filesystem::path& out_dir);

}  // namespace patchmine
