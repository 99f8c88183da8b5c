#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "patchmine/export.hpp"
#include "patchmine/synth.hpp"

namespace patchmine {

struct MiningMetrics {
  std::vector<double> fg_iou_per_frame;  // mined FG vs ground truth, manifest order
  double fg_hit_rate_at_50 = 0.0;        // fraction with IoU >= 0.5
  double bg_mean_iou_with_gt = 0.0;
  std::size_t videos_evaluated = 0;
  std::size_t videos_skipped = 0;        // ground-truth videos absent from the manifest

  std::string to_json() const;
  std::string summary() const;
};

/// Scores mined records against the ground-truth sidecars under gt_root.
/// Every manifest frame must have a ground-truth entry; missing frames are
/// collected and reported in one error. Ground-truth videos that produced no
/// records count as skipped.
MiningMetrics evaluate_mining(std::span<const PatchRecord> records,
                              const std::filesystem::path& gt_root);

struct ProbeParams {
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  int epochs = 200;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int embedding_dim = 2048;
  bool shuffle_labels = false;  // chance-level control
};

struct ProbeResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> train_loss;  // one entry per epoch
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Embeds every patch listed in <dataset_dir>/labels.txt and fits a
/// logistic-loss linear classifier by full-batch gradient descent on the
/// train split. Deterministic for a fixed seed. Throws "insufficient data"
/// when either class has fewer than 10 test samples.
ProbeResult linear_probe(const std::filesystem::path& dataset_dir, const ProbeParams& params = {});

}  // namespace patchmine
