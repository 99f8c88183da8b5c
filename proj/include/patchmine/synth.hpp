#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patchmine/core.hpp"
#include "patchmine/image.hpp"

namespace patchmine {

enum class SynthBackgroundType { Plain, Noise, TexturedStatic };

struct SynthBackground {
  SynthBackgroundType type = SynthBackgroundType::Plain;
  std::uint8_t base = 120;  // base gray level, kept inside the intensity gate
  double sigma = 6.0;       // noise amplitude (Noise type)
};

struct SynthObject {
  int w = 32;
  int h = 32;
  std::uint32_t texture_seed = 1;
};

struct SynthDistractor {
  int x = 0;
  int y = 0;
  int w = 32;
  int h = 32;
  std::uint32_t texture_seed = 2;
};

/// One synthetic video: a textured rectangle translating by (dx, dy) per
/// frame over a static background, with optional static distractors.
struct SynthVideoSpec {
  std::string video_id;
  int width = 192;
  int height = 144;
  int n_frames = 5;
  SynthObject object;
  int start_x = 0;
  int start_y = 0;
  int dx = 0;
  int dy = 0;
  SynthBackground background;
  std::vector<SynthDistractor> distractors;
  std::uint64_t seed = 0;
};

/// Ground-truth object box per frame index.
using GroundTruth = std::map<int, BoundingBox>;

/// Validates the spec (object fully inside every frame, distractors inside
/// the frame). Throws std::invalid_argument naming the video on violation.
void validate_spec(const SynthVideoSpec& spec);

/// Renders the video into <out_root>/<video_id>/NNN.png plus a
/// groundtruth.jsonl sidecar in the same directory. Deterministic per seed.
GroundTruth generate_synthetic_video(const SynthVideoSpec& spec,
                                     const std::filesystem::path& out_root);

/// In-memory render of one frame (exposed for tests).
ImageRGB render_synth_frame(const SynthVideoSpec& spec, int frame_index);

GroundTruth load_ground_truth(const std::filesystem::path& sidecar_path);
void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& sidecar_path);

/// JSON spec file: {"videos": [{...}, ...]}. See the README for the schema.
std::vector<SynthVideoSpec> load_synth_spec(const std::filesystem::path& path);

}  // namespace patchmine
