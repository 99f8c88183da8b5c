#pragma once

#include <filesystem>

#include "patchmine/image.hpp"

namespace patchmine {

struct FlowParams {
  float alpha = 15.0f;   // smoothness weight (Horn-Schunck alpha)
  int iterations = 100;  // Jacobi iterations per pyramid level
  int levels = 3;
  float scale = 0.5f;    // pyramid downscale factor per level
  int min_level_size = 16;
};

/// Dense per-pixel displacement: frame1(x, y) ~ frame2(x + u, y + v).
struct FlowField {
  int width = 0;
  int height = 0;
  ImageF u;
  ImageF v;
};

/// Coarse-to-fine Horn-Schunck. f2 is resized to f1's dimensions when they
/// differ (resized_second reports that). Deterministic for fixed inputs.
FlowField compute_flow(const Frame& f1, const Frame& f2, const FlowParams& params = {},
                       bool* resized_second = nullptr);

/// Per-pixel sqrt(u^2 + v^2), min-max scaled to an 8-bit frame (3 identical
/// channels). A flat magnitude field maps to all-zero.
Frame flow_magnitude_image(const FlowField& flow);

/// Precomputed-flow escape hatch. Little-endian binary: magic "PMFL",
/// version u32, width u32, height u32, then width*height f32 u values
/// row-major followed by the v values.
FlowField read_flow_file(const std::filesystem::path& path);
void write_flow_file(const FlowField& flow, const std::filesystem::path& path);

}  // namespace patchmine
