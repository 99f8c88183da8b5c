#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <tuple>
#include <vector>

#include "patchmine/core.hpp"
#include "patchmine/image.hpp"

namespace patchmine {

/// Dimensions: 384 color-histogram values + 576 gradient-orientation values,
/// zero-padded to `dim` (2048 keeps external files drop-in compatible with
/// 2048-D producers). Minimum usable dim is kInformativeDims.
struct EmbeddingParams {
  int dim = 2048;
};

inline constexpr int kInformativeDims = 960;

/// Crop the box, resize to 64x64, concatenate a 4x4-cell 8-bin per-channel
/// color histogram with an 8x8-cell 9-bin gradient-orientation histogram,
/// zero-pad, L2-normalize. Depends only on the pixel content of the crop.
Embedding embed_patch(const Frame& f, const BoundingBox& box, const EmbeddingParams& params = {});

/// Inner product. Throws on length mismatch.
double similarity(const Embedding& a, const Embedding& b);

/// Proposal identity key for external embedding files.
struct EmbeddingKey {
  int frame_index = 0;
  BoundingBox box;
  auto tied() const { return std::tie(frame_index, box.x, box.y, box.w, box.h); }
  bool operator<(const EmbeddingKey& o) const { return tied() < o.tied(); }
  bool operator==(const EmbeddingKey& o) const { return tied() == o.tied(); }
};

std::string to_string(const EmbeddingKey& key);

/// Embeddings computed out-of-band (e.g. a CNN feature extractor), keyed by
/// exact proposal identity.
struct ExternalEmbeddings {
  int dim = 0;
  std::map<EmbeddingKey, Embedding> table;
};

/// Binary format, little-endian: magic "PMEB", version u32 = 1, dim u32,
/// count u32, then `count` records of (frame_index u32, x u32, y u32, w u32,
/// h u32, dim f32 values). Vectors whose norm deviates from 1 by more than
/// 1e-3 are rejected.
ExternalEmbeddings load_external_embeddings(const std::filesystem::path& path);
void write_external_embeddings(const ExternalEmbeddings& embs, const std::filesystem::path& path);

}  // namespace patchmine
