#include "patchmine/selection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace patchmine {

double cluster_score(const Cluster& c, const ClusterParams& params) {
  double sum = 0.0;
  for (std::size_t j = 0; j < c.members.size(); ++j) {
    sum += c.members[j].s * c.similarities[j];
  }
  if (params.include_seed_term) sum += c.seed.s;
  return sum;
}

std::vector<Cluster> build_clusters(std::span<const ProposalSet> frames_top_k,
                                    std::span<const std::vector<Embedding>> embeddings,
                                    const ClusterParams& params) {
  if (frames_top_k.size() < 2) {
    throw std::invalid_argument("build_clusters: need at least 2 frames");
  }
  if (embeddings.size() != frames_top_k.size()) {
    throw std::invalid_argument("build_clusters: embeddings not aligned with frames");
  }
  for (std::size_t i = 0; i < frames_top_k.size(); ++i) {
    if (frames_top_k[i].proposals.empty()) {
      throw std::runtime_error("build_clusters: frame " +
                               std::to_string(frames_top_k[i].frame_index) + " has no proposals");
    }
    if (embeddings[i].size() != frames_top_k[i].proposals.size()) {
      throw std::invalid_argument("build_clusters: embedding count mismatch on frame " +
                                  std::to_string(frames_top_k[i].frame_index));
    }
  }

  const ProposalSet& seeds = frames_top_k[0];
  std::vector<Cluster> clusters;
  clusters.reserve(seeds.proposals.size());
  for (std::size_t si = 0; si < seeds.proposals.size(); ++si) {
    Cluster c;
    c.seed = seeds.proposals[si];
    c.seed_index = si;
    const Embedding& seed_emb = embeddings[0][si];
    for (std::size_t fi = 1; fi < frames_top_k.size(); ++fi) {
      const auto& props = frames_top_k[fi].proposals;
      std::size_t best = 0;
      double best_sim = similarity(embeddings[fi][0], seed_emb);
      for (std::size_t j = 1; j < props.size(); ++j) {
        const double sim = similarity(embeddings[fi][j], seed_emb);
        if (sim > best_sim || (sim == best_sim && props[j].s > props[best].s)) {
          best = j;
          best_sim = sim;
        }
      }
      c.members.push_back(props[best]);
      c.similarities.push_back(best_sim);
    }
    c.score = cluster_score(c, params);
    clusters.push_back(std::move(c));
  }
  return clusters;
}

ForegroundSelection select_foreground(std::span<const Cluster> clusters) {
  if (clusters.empty()) {
    throw std::invalid_argument("select_foreground: no clusters");
  }
  std::size_t winner = 0;
  for (std::size_t i = 1; i < clusters.size(); ++i) {
    if (clusters[i].score > clusters[winner].score) winner = i;
  }
  ForegroundSelection sel;
  sel.winner_index = winner;
  sel.score = clusters[winner].score;
  sel.per_frame[clusters[winner].seed.frame_index] = clusters[winner].seed;
  for (const Proposal& m : clusters[winner].members) {
    sel.per_frame[m.frame_index] = m;
  }
  return sel;
}

BackgroundChoice select_background(std::span<const Proposal> frame_pool, const Proposal& fg,
                                   int pool_size) {
  if (frame_pool.empty()) {
    throw std::invalid_argument("select_background: empty proposal pool");
  }

  // The pool_size lowest-s proposals, ties resolved by scan order.
  std::vector<std::size_t> order(frame_pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frame_pool[a].s < frame_pool[b].s; });
  const std::size_t n_low = std::min<std::size_t>(pool_size, order.size());
  order.resize(n_low);

  double mean_area = 0.0;
  std::int64_t max_area = 0;
  for (const std::size_t i : order) {
    mean_area += static_cast<double>(frame_pool[i].box.area());
    max_area = std::max(max_area, frame_pool[i].box.area());
  }
  mean_area /= static_cast<double>(n_low);

  std::vector<std::size_t> survivors;
  for (const std::size_t i : order) {
    if (static_cast<double>(frame_pool[i].box.area()) > mean_area) survivors.push_back(i);
  }
  bool fallback = false;
  if (survivors.empty()) {
    fallback = true;
    for (const std::size_t i : order) {
      if (frame_pool[i].box.area() == max_area) survivors.push_back(i);
    }
  }

  std::size_t best = survivors[0];
  double best_iou = iou(frame_pool[best].box, fg.box);
  for (std::size_t k = 1; k < survivors.size(); ++k) {
    const std::size_t i = survivors[k];
    const double v = iou(frame_pool[i].box, fg.box);
    if (v < best_iou ||
        (v == best_iou && (frame_pool[i].s < frame_pool[best].s ||
                           (frame_pool[i].s == frame_pool[best].s && i < best)))) {
      best = i;
      best_iou = v;
    }
  }
  return {frame_pool[best], fallback};
}

}  // namespace patchmine
