#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace patchmine {

/// Axis-aligned box of integer pixels, closed rectangle [x, x+w) x [y, y+h).
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
  bool operator==(const BoundingBox&) const = default;
};

enum class ProposalSource { RGB, FLOW };

const char* to_string(ProposalSource s);

/// A scored candidate region. s_a / s_m are in [0,1] once normalized and
/// s is always their product.
struct Proposal {
  BoundingBox box;
  double s_a = 0.0;
  double s_m = 0.0;
  double s = 0.0;
  ProposalSource source = ProposalSource::RGB;
  int frame_index = 0;
};

/// Fixed-length feature vector, unit Euclidean norm after construction.
struct Embedding {
  std::vector<float> values;

  std::size_t size() const { return values.size(); }
};

/// One seed proposal plus its best match in every subsequent frame.
struct Cluster {
  Proposal seed;
  std::size_t seed_index = 0;  // position of the seed in its frame's top-k list
  std::vector<Proposal> members;
  std::vector<double> similarities;  // inner product of member vs. seed
  double score = 0.0;
};

/// Intersection-over-union in exact integer pixel counts.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Min-max normalization to [0,1]. A flat list maps to all ones so that a
/// score channel carrying no information does not annihilate the product.
/// Throws std::invalid_argument on an empty list.
std::vector<double> normalize_scores(std::span<const double> raw);

}  // namespace patchmine
