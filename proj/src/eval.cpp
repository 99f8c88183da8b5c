#include "patchmine/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "patchmine/embedding.hpp"
#include "patchmine/image_io.hpp"

namespace patchmine {

std::string MiningMetrics::to_json() const {
  std::ostringstream os;
  char buf[40];
  const auto real = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  os << "{\"fg_hit_rate_at_50\":" << real(fg_hit_rate_at_50)
     << ",\"bg_mean_iou_with_gt\":" << real(bg_mean_iou_with_gt)
     << ",\"videos_evaluated\":" << videos_evaluated << ",\"videos_skipped\":" << videos_skipped
     << ",\"fg_iou_per_frame\":[";
  for (std::size_t i = 0; i < fg_iou_per_frame.size(); ++i) {
    if (i) os << ',';
    os << real(fg_iou_per_frame[i]);
  }
  os << "]}";
  return os.str();
}

std::string MiningMetrics::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "fg hit rate @0.5: %.4f over %zu frames | bg mean IoU with gt: %.4f | videos "
                "evaluated: %zu, skipped: %zu",
                fg_hit_rate_at_50, fg_iou_per_frame.size(), bg_mean_iou_with_gt, videos_evaluated,
                videos_skipped);
  return buf;
}

MiningMetrics evaluate_mining(std::span<const PatchRecord> records,
                              const std::filesystem::path& gt_root) {
  std::map<std::string, GroundTruth> gt_by_video;
  std::vector<std::string> missing;

  const auto gt_for = [&](const std::string& video_id) -> const GroundTruth* {
    auto it = gt_by_video.find(video_id);
    if (it != gt_by_video.end()) return &it->second;
    const std::filesystem::path sidecar = gt_root / video_id / "groundtruth.jsonl";
    if (!std::filesystem::exists(sidecar)) return nullptr;
    return &gt_by_video.emplace(video_id, load_ground_truth(sidecar)).first->second;
  };

  MiningMetrics m;
  std::set<std::string> manifest_videos;
  double bg_iou_sum = 0.0;
  std::size_t bg_count = 0;
  std::size_t fg_hits = 0;
  for (const PatchRecord& rec : records) {
    manifest_videos.insert(rec.video_id);
    const GroundTruth* gt = gt_for(rec.video_id);
    const auto it = gt ? gt->find(rec.frame_index) : GroundTruth::const_iterator{};
    if (!gt || it == gt->end()) {
      missing.push_back(rec.video_id + ":" + std::to_string(rec.frame_index));
      continue;
    }
    const double v = iou(rec.box, it->second);
    if (rec.role == PatchRole::FG) {
      m.fg_iou_per_frame.push_back(v);
      if (v >= 0.5) ++fg_hits;
    } else {
      bg_iou_sum += v;
      ++bg_count;
    }
  }
  if (!missing.empty()) {
    std::string msg = "evaluate_mining: no ground truth for";
    for (const std::string& s : missing) msg += " " + s;
    throw std::runtime_error(msg);
  }

  if (!m.fg_iou_per_frame.empty()) {
    m.fg_hit_rate_at_50 = static_cast<double>(fg_hits) / m.fg_iou_per_frame.size();
  }
  if (bg_count > 0) {
    m.bg_mean_iou_with_gt = bg_iou_sum / bg_count;
  }
  m.videos_evaluated = manifest_videos.size();

  // Ground-truth videos that never reached the manifest were filtered away.
  if (std::filesystem::is_directory(gt_root)) {
    for (const auto& entry : std::filesystem::directory_iterator(gt_root)) {
      if (!entry.is_directory()) continue;
      if (!std::filesystem::exists(entry.path() / "groundtruth.jsonl")) continue;
      if (!manifest_videos.count(entry.path().filename().string())) ++m.videos_skipped;
    }
  }
  return m;
}

namespace {

// Engine-order Fisher-Yates so the split does not depend on the standard
// library's std::shuffle implementation.
void deterministic_shuffle(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

ProbeResult linear_probe(const std::filesystem::path& dataset_dir, const ProbeParams& params) {
  std::ifstream labels(dataset_dir / "labels.txt");
  if (!labels) throw IoError("cannot read labels.txt under " + dataset_dir.string());

  std::vector<std::vector<float>> features;
  std::vector<int> y;
  std::string file;
  int label = 0;
  const EmbeddingParams emb_params{params.embedding_dim};
  while (labels >> file >> label) {
    const Frame frame = Frame::from_rgb(read_png(dataset_dir / file));
    features.push_back(
        embed_patch(frame, {0, 0, frame.width, frame.height}, emb_params).values);
    y.push_back(label == 1 ? 1 : -1);
  }
  const std::size_t n = features.size();
  if (n == 0) throw std::runtime_error("linear_probe: empty dataset");

  std::mt19937_64 rng(params.seed);
  if (params.shuffle_labels) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    deterministic_shuffle(perm, rng);
    std::vector<int> shuffled(n);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = y[perm[i]];
    y = std::move(shuffled);
  }

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  deterministic_shuffle(idx, rng);
  const std::size_t n_train = static_cast<std::size_t>(params.split_ratio * n);
  const std::size_t n_test = n - n_train;

  std::size_t test_pos = 0, test_neg = 0;
  for (std::size_t i = n_train; i < n; ++i) {
    (y[idx[i]] == 1 ? test_pos : test_neg) += 1;
  }
  if (test_pos < 10 || test_neg < 10) {
    throw std::runtime_error("linear_probe: insufficient data (need >= 10 test samples per class)");
  }

  const std::size_t dim = features[0].size();
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::vector<double> grad_w(dim);

  ProbeResult result;
  result.n_train = n_train;
  result.n_test = n_test;
  result.train_loss.reserve(params.epochs);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t t = 0; t < n_train; ++t) {
      const std::size_t i = idx[t];
      const std::vector<float>& x = features[i];
      double z = b;
      for (std::size_t d = 0; d < dim; ++d) z += w[d] * x[d];
      const double yz = y[i] * z;
      // log(1 + exp(-yz)) evaluated stably.
      loss += yz > 0 ? std::log1p(std::exp(-yz)) : -yz + std::log1p(std::exp(yz));
      const double sig = 1.0 / (1.0 + std::exp(yz));  // d loss / d z = -y * sig
      const double coef = -y[i] * sig;
      for (std::size_t d = 0; d < dim; ++d) grad_w[d] += coef * x[d];
      grad_b += coef;
    }
    double reg = 0.0;
    for (std::size_t d = 0; d < dim; ++d) reg += w[d] * w[d];
    loss = loss / n_train + 0.5 * params.l2 * reg;
    result.train_loss.push_back(loss);

    for (std::size_t d = 0; d < dim; ++d) {
      w[d] -= params.learning_rate * (grad_w[d] / n_train + params.l2 * w[d]);
    }
    b -= params.learning_rate * (grad_b / n_train);
  }

  const auto accuracy = [&](std::size_t from, std::size_t to) {
    std::size_t correct = 0;
    for (std::size_t t = from; t < to; ++t) {
      const std::size_t i = idx[t];
      double z = b;
      for (std::size_t d = 0; d < dim; ++d) z += w[d] * features[i][d];
      if ((z >= 0 ? 1 : -1) == y[i]) ++correct;
    }
    return static_cast<double>(correct) / (to - from);
  };
  result.train_accuracy = accuracy(0, n_train);
  result.test_accuracy = accuracy(n_train, n);
  return result;
}

}  // namespace patchmine
