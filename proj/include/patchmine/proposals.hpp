#pragma once

#include <vector>

#include "patchmine/core.hpp"
#include "patchmine/image.hpp"

namespace patchmine {

/// Sobel edge magnitude in [0,1] plus its prefix-sum table for O(1) box sums.
struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<float> magnitude;   // width * height
  std::vector<double> integral;   // (width + 1) * (height + 1)

  /// Sum of magnitude over the box, from the integral table.
  double box_sum(const BoundingBox& box) const;
};

struct ObjectnessParams {
  double border_penalty = 1.5;  // lambda
  double area_exponent = 0.75;  // kappa
  int margin = 2;               // interior shrink / border band width, pixels
};

struct ProposalGenParams {
  int n_target = 500;
  double nms_iou = 0.8;
  double min_scale = 0.10;      // fraction of min(width, height)
  double max_scale = 0.80;
  int n_scales = 10;            // geometric steps between min and max scale
  int stride_div = 8;           // stride = window side / stride_div
  std::int64_t min_area = 64;
  ObjectnessParams objectness;
};

struct ScoredBox {
  BoundingBox box;
  double raw_score = 0.0;
};

/// Per-frame proposal pool; after cross_score every entry carries both
/// channel scores, after top_k the list is sorted by s descending.
struct ProposalSet {
  int frame_index = 0;
  std::vector<Proposal> proposals;
};

/// Sobel gradient magnitude on the gray channel, normalized by its 99th
/// percentile and clamped to [0,1].
EdgeMap compute_edge_map(const Frame& f);

/// Edge mass wholly inside the box rewarded, mass on the 2-px boundary band
/// penalized, divided by area^kappa. Throws if the box is outside the image.
double objectness_score(const EdgeMap& em, const BoundingBox& box,
                        const ObjectnessParams& params = {});

/// Deterministic multi-scale sliding-window candidates scored by objectness,
/// greedy NMS, truncated to n_target. Throws if the image is under 64x64.
std::vector<ScoredBox> generate_proposals(const EdgeMap& em, const ProposalGenParams& params = {});

/// Min-max normalizes each raw channel over the union and fills s = s_a * s_m.
/// Input order is preserved (scan order for downstream tie-breaking).
std::vector<Proposal> combine_scores(std::vector<Proposal> with_raw_scores);

/// Scores each RGB-sourced box on the flow edge map and vice versa, then
/// normalizes both channels over the union. Proposal order: RGB-sourced boxes
/// first, then FLOW-sourced, each in generation order.
ProposalSet cross_score(const std::vector<ScoredBox>& rgb_props,
                        const std::vector<ScoredBox>& flow_props, const EdgeMap& rgb_em,
                        const EdgeMap& flow_em, int frame_index,
                        const ObjectnessParams& params = {});

/// k highest-s proposals, ties by s_a descending then left-to-right,
/// top-to-bottom box position.
ProposalSet top_k(const ProposalSet& ps, int k);

}  // namespace patchmine
