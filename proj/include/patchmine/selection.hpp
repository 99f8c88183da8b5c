#pragma once

#include <map>
#include <span>
#include <vector>

#include "patchmine/core.hpp"
#include "patchmine/embedding.hpp"
#include "patchmine/proposals.hpp"

namespace patchmine {

struct ClusterParams {
  /// Whether the seed contributes its own s * 1.0 term to the cluster score.
  /// Off by default: the sum runs over the matched members only.
  bool include_seed_term = false;
};

/// Sum over members of overall score times seed similarity.
double cluster_score(const Cluster& c, const ClusterParams& params = {});

/// One cluster per seed (= each top-k proposal of the first frame); the
/// member for every subsequent frame is the proposal with maximum inner
/// product against the seed embedding, ties by higher s then scan order.
/// `embeddings[i][j]` is the embedding of frames_top_k[i].proposals[j].
/// Throws if fewer than 2 frames or any frame has no proposals.
std::vector<Cluster> build_clusters(std::span<const ProposalSet> frames_top_k,
                                    std::span<const std::vector<Embedding>> embeddings,
                                    const ClusterParams& params = {});

struct ForegroundSelection {
  std::size_t winner_index = 0;  // into the cluster list
  double score = 0.0;
  std::map<int, Proposal> per_frame;  // frame_index -> FG proposal
};

/// Argmax-score cluster; its seed is the FG of the seed frame, each member
/// the FG of its frame. Ties go to the earlier seed.
ForegroundSelection select_foreground(std::span<const Cluster> clusters);

struct BackgroundChoice {
  Proposal proposal;
  bool area_fallback = false;  // the area filter emptied and the largest-area rule fired
};

/// The low-score background rule: the pool_size lowest-s proposals, keep
/// those with area strictly above the pool's mean area (falling back to the
/// largest-area ones when none qualify), then argmin IoU against the
/// foreground, ties by lower s then scan order.
BackgroundChoice select_background(std::span<const Proposal> frame_pool, const Proposal& fg,
                                   int pool_size = 100);

}  // namespace patchmine
