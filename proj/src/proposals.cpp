#include "patchmine/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace patchmine {

double EdgeMap::box_sum(const BoundingBox& box) const {
  const int x1 = box.x;
  const int y1 = box.y;
  const int x2 = box.x + box.w;
  const int y2 = box.y + box.h;
  const int stride = width + 1;
  return integral[static_cast<std::size_t>(y2) * stride + x2] -
         integral[static_cast<std::size_t>(y1) * stride + x2] -
         integral[static_cast<std::size_t>(y2) * stride + x1] +
         integral[static_cast<std::size_t>(y1) * stride + x1];
}

EdgeMap compute_edge_map(const Frame& f) {
  EdgeMap em;
  em.width = f.width;
  em.height = f.height;
  em.magnitude.resize(static_cast<std::size_t>(f.width) * f.height);

  const ImageF g = to_float(f.gray);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const float p00 = g.at_clamped(x - 1, y - 1), p10 = g.at_clamped(x, y - 1),
                  p20 = g.at_clamped(x + 1, y - 1);
      const float p01 = g.at_clamped(x - 1, y), p21 = g.at_clamped(x + 1, y);
      const float p02 = g.at_clamped(x - 1, y + 1), p12 = g.at_clamped(x, y + 1),
                  p22 = g.at_clamped(x + 1, y + 1);
      const float gx = (p20 + 2.0f * p21 + p22) - (p00 + 2.0f * p01 + p02);
      const float gy = (p02 + 2.0f * p12 + p22) - (p00 + 2.0f * p10 + p20);
      em.magnitude[static_cast<std::size_t>(y) * f.width + x] = std::sqrt(gx * gx + gy * gy);
    }
  }

  // Normalize by the 99th percentile so a handful of extreme edges does not
  // flatten everything else; clamp to [0,1].
  std::vector<float> sorted = em.magnitude;
  const std::size_t idx =
      static_cast<std::size_t>(std::llround(0.99 * (static_cast<double>(sorted.size()) - 1.0)));
  std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
  const float p99 = sorted[idx];
  if (p99 > 0.0f) {
    for (float& m : em.magnitude) m = std::min(1.0f, m / p99);
  } else {
    std::fill(em.magnitude.begin(), em.magnitude.end(), 0.0f);
  }

  em.integral.assign(static_cast<std::size_t>(f.width + 1) * (f.height + 1), 0.0);
  const int stride = f.width + 1;
  for (int y = 0; y < f.height; ++y) {
    double row = 0.0;
    for (int x = 0; x < f.width; ++x) {
      row += em.magnitude[static_cast<std::size_t>(y) * f.width + x];
      em.integral[static_cast<std::size_t>(y + 1) * stride + (x + 1)] =
          em.integral[static_cast<std::size_t>(y) * stride + (x + 1)] + row;
    }
  }
  return em;
}

double objectness_score(const EdgeMap& em, const BoundingBox& box, const ObjectnessParams& params) {
  if (box.x < 0 || box.y < 0 || box.w < 1 || box.h < 1 || box.x + box.w > em.width ||
      box.y + box.h > em.height) {
    throw std::invalid_argument("objectness_score: box outside image");
  }
  const double total = em.box_sum(box);
  double interior = 0.0;
  const int m = params.margin;
  if (box.w > 2 * m && box.h > 2 * m) {
    interior = em.box_sum({box.x + m, box.y + m, box.w - 2 * m, box.h - 2 * m});
  }
  const double border = total - interior;
  const double raw = interior - params.border_penalty * border;
  if (raw <= 0.0) return 0.0;
  return raw / std::pow(static_cast<double>(box.area()), params.area_exponent);
}

namespace {

// Aspect ratios as w:h pairs.
constexpr std::pair<int, int> kAspects[] = {{1, 2}, {2, 3}, {1, 1}, {3, 2}, {2, 1}};

std::vector<BoundingBox> grid_candidates(int width, int height, const ProposalGenParams& p) {
  std::vector<BoundingBox> candidates;
  const double side = std::min(width, height);
  std::set<std::pair<int, int>> seen_shapes;
  for (int si = 0; si < p.n_scales; ++si) {
    const double t = p.n_scales > 1 ? static_cast<double>(si) / (p.n_scales - 1) : 0.0;
    const double frac = p.min_scale * std::pow(p.max_scale / p.min_scale, t);
    const double base = frac * side;
    for (const auto& [aw, ah] : kAspects) {
      const double ratio = std::sqrt(static_cast<double>(aw) / ah);
      int w = static_cast<int>(std::lround(base * ratio));
      int h = static_cast<int>(std::lround(base / ratio));
      w = std::clamp(w, 1, width);
      h = std::clamp(h, 1, height);
      if (static_cast<std::int64_t>(w) * h < p.min_area) continue;
      if (!seen_shapes.insert({w, h}).second) continue;
      const int sx = std::max(1, static_cast<int>(std::lround(static_cast<double>(w) / p.stride_div)));
      const int sy = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) / p.stride_div)));
      for (int y = 0; y + h <= height; y += sy) {
        for (int x = 0; x + w <= width; x += sx) {
          candidates.push_back({x, y, w, h});
        }
      }
    }
  }
  return candidates;
}

}  // namespace

std::vector<ScoredBox> generate_proposals(const EdgeMap& em, const ProposalGenParams& params) {
  if (em.width < 64 || em.height < 64) {
    throw std::invalid_argument("generate_proposals: frame below minimum proposal size");
  }
  const std::vector<BoundingBox> candidates = grid_candidates(em.width, em.height, params);

  std::vector<ScoredBox> scored;
  scored.reserve(candidates.size());
  for (const BoundingBox& box : candidates) {
    scored.push_back({box, objectness_score(em, box, params.objectness)});
  }

  // Greedy NMS in (score desc, scan order) order; suppression at IoU > nms_iou.
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].raw_score > scored[b].raw_score;
  });

  std::vector<ScoredBox> kept;
  kept.reserve(params.n_target);
  for (const std::size_t i : order) {
    bool suppressed = false;
    for (const ScoredBox& k : kept) {
      if (iou(scored[i].box, k.box) > params.nms_iou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(scored[i]);
      if (static_cast<int>(kept.size()) >= params.n_target) break;
    }
  }
  return kept;
}

std::vector<Proposal> combine_scores(std::vector<Proposal> props) {
  if (props.empty()) return props;
  std::vector<double> raw_a(props.size());
  std::vector<double> raw_m(props.size());
  for (std::size_t i = 0; i < props.size(); ++i) {
    raw_a[i] = props[i].s_a;
    raw_m[i] = props[i].s_m;
  }
  const std::vector<double> norm_a = normalize_scores(raw_a);
  const std::vector<double> norm_m = normalize_scores(raw_m);
  for (std::size_t i = 0; i < props.size(); ++i) {
    props[i].s_a = norm_a[i];
    props[i].s_m = norm_m[i];
    props[i].s = norm_a[i] * norm_m[i];
  }
  return props;
}

ProposalSet cross_score(const std::vector<ScoredBox>& rgb_props,
                        const std::vector<ScoredBox>& flow_props, const EdgeMap& rgb_em,
                        const EdgeMap& flow_em, int frame_index, const ObjectnessParams& params) {
  if (rgb_em.width != flow_em.width || rgb_em.height != flow_em.height) {
    throw std::invalid_argument("cross_score: edge map dimension mismatch");
  }
  std::vector<Proposal> props;
  props.reserve(rgb_props.size() + flow_props.size());
  for (const ScoredBox& sb : rgb_props) {
    Proposal p;
    p.box = sb.box;
    p.s_a = sb.raw_score;
    p.s_m = objectness_score(flow_em, sb.box, params);
    p.source = ProposalSource::RGB;
    p.frame_index = frame_index;
    props.push_back(p);
  }
  for (const ScoredBox& sb : flow_props) {
    Proposal p;
    p.box = sb.box;
    p.s_a = objectness_score(rgb_em, sb.box, params);
    p.s_m = sb.raw_score;
    p.source = ProposalSource::FLOW;
    p.frame_index = frame_index;
    props.push_back(p);
  }

  ProposalSet out;
  out.frame_index = frame_index;
  out.proposals = combine_scores(std::move(props));
  return out;
}

ProposalSet top_k(const ProposalSet& ps, int k) {
  std::vector<std::size_t> order(ps.proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Proposal& pa = ps.proposals[a];
    const Proposal& pb = ps.proposals[b];
    if (pa.s != pb.s) return pa.s > pb.s;
    if (pa.s_a != pb.s_a) return pa.s_a > pb.s_a;
    if (pa.box.x != pb.box.x) return pa.box.x < pb.box.x;
    if (pa.box.y != pb.box.y) return pa.box.y < pb.box.y;
    return false;  // stable sort keeps scan order for full ties
  });

  ProposalSet out;
  out.frame_index = ps.frame_index;
  const std::size_t n = std::min<std::size_t>(k, order.size());
  out.proposals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.proposals.push_back(ps.proposals[order[i]]);
  return out;
}

}  // namespace patchmine
