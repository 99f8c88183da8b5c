#include "patchmine/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace patchmine {

const char* to_string(ProposalSource s) {
  return s == ProposalSource::RGB ? "RGB" : "FLOW";
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const int ix1 = std::max(a.x, b.x);
  const int iy1 = std::max(a.y, b.y);
  const int ix2 = std::min(a.x + a.w, b.x + b.w);
  const int iy2 = std::min(a.y + a.h, b.y + b.h);
  const std::int64_t iw = std::max(0, ix2 - ix1);
  const std::int64_t ih = std::max(0, iy2 - iy1);
  const std::int64_t inter = iw * ih;
  if (inter == 0) return 0.0;
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> normalize_scores(std::span<const double> raw) {
  if (raw.empty()) {
    throw std::invalid_argument("normalize_scores: empty score list, no proposals survived");
  }
  const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
  const double mn = *mn_it;
  const double mx = *mx_it;
  std::vector<double> out(raw.size());
  if (mx == mn) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  const double span = mx - mn;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = (raw[i] - mn) / span;
  }
  return out;
}

}  // namespace patchmine
