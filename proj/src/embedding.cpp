#include "patchmine/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "patchmine/image_io.hpp"

namespace patchmine {

namespace {

constexpr int kPatchSide = 64;
constexpr int kColorCells = 4;   // 4x4 grid
constexpr int kColorBins = 8;    // per channel
constexpr int kGradCells = 8;    // 8x8 grid
constexpr int kGradBins = 9;     // orientation bins over [0, pi)

static_assert(kColorCells * kColorCells * 3 * kColorBins == 384);
static_assert(kGradCells * kGradCells * kGradBins == 576);

}  // namespace

Embedding embed_patch(const Frame& f, const BoundingBox& box, const EmbeddingParams& params) {
  if (!f.contains(box)) {
    throw std::invalid_argument("embed_patch: box outside frame");
  }
  if (params.dim < kInformativeDims) {
    throw std::invalid_argument("embed_patch: dim below informative feature length");
  }
  const ImageRGB patch = resize_bilinear(crop(f.rgb, box), kPatchSide, kPatchSide);

  std::vector<float> feat(static_cast<std::size_t>(params.dim), 0.0f);

  // Color histograms: 16x16-px cells, 8 bins per channel, pixel counts.
  constexpr int color_cell_px = kPatchSide / kColorCells;
  for (int y = 0; y < kPatchSide; ++y) {
    const int cy = y / color_cell_px;
    for (int x = 0; x < kPatchSide; ++x) {
      const int cx = x / color_cell_px;
      const std::uint8_t* px = patch.pixel(x, y);
      const std::size_t cell_base =
          (static_cast<std::size_t>(cy) * kColorCells + cx) * 3 * kColorBins;
      for (int c = 0; c < 3; ++c) {
        feat[cell_base + static_cast<std::size_t>(c) * kColorBins + (px[c] >> 5)] += 1.0f;
      }
    }
  }

  // Gradient-orientation histograms on the patch luma: 8x8-px cells, 9 bins
  // over the unsigned orientation range, magnitude-weighted.
  const ImageF g = to_float(to_gray(patch));
  constexpr int grad_cell_px = kPatchSide / kGradCells;
  constexpr std::size_t grad_base = 384;
  for (int y = 0; y < kPatchSide; ++y) {
    const int cy = y / grad_cell_px;
    for (int x = 0; x < kPatchSide; ++x) {
      const float gx = 0.5f * (g.at_clamped(x + 1, y) - g.at_clamped(x - 1, y));
      const float gy = 0.5f * (g.at_clamped(x, y + 1) - g.at_clamped(x, y - 1));
      const float mag = std::sqrt(gx * gx + gy * gy);
      if (mag <= 0.0f) continue;
      float angle = std::atan2(gy, gx);
      if (angle < 0.0f) angle += std::numbers::pi_v<float>;
      if (angle >= std::numbers::pi_v<float>) angle -= std::numbers::pi_v<float>;
      int bin = static_cast<int>(angle / std::numbers::pi_v<float> * kGradBins);
      bin = std::clamp(bin, 0, kGradBins - 1);
      const int cx = x / grad_cell_px;
      feat[grad_base + (static_cast<std::size_t>(cy) * kGradCells + cx) * kGradBins + bin] += mag;
    }
  }

  double norm_sq = 0.0;
  for (const float v : feat) norm_sq += static_cast<double>(v) * v;
  const double norm = std::sqrt(norm_sq);
  // The color histogram counts every pixel, so the norm is always positive.
  for (float& v : feat) v = static_cast<float>(v / norm);
  return Embedding{std::move(feat)};
}

double similarity(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("similarity: embedding length mismatch");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += static_cast<double>(a.values[i]) * b.values[i];
  }
  return dot;
}

std::string to_string(const EmbeddingKey& key) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "(frame=%d box=%d,%d,%d,%d)", key.frame_index, key.box.x,
                key.box.y, key.box.w, key.box.h);
  return buf;
}

namespace {

constexpr char kEmbMagic[4] = {'P', 'M', 'E', 'B'};
constexpr std::uint32_t kEmbVersion = 1;

void put_u32(std::FILE* f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, f);
}

std::uint32_t get_u32(std::FILE* f, const std::filesystem::path& path) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw IoError("truncated embedding file: " + path.string());
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

ExternalEmbeddings load_external_embeddings(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open embedding file: " + path.string());
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};

  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kEmbMagic, 4) != 0) {
    throw IoError("bad magic in embedding file: " + path.string());
  }
  if (get_u32(f, path) != kEmbVersion) {
    throw IoError("unsupported embedding file version: " + path.string());
  }
  ExternalEmbeddings out;
  out.dim = static_cast<int>(get_u32(f, path));
  if (out.dim <= 0 || out.dim > 1 << 20) {
    throw IoError("bad dimension in embedding file: " + path.string());
  }
  const std::uint32_t count = get_u32(f, path);
  static_assert(sizeof(float) == 4);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingKey key;
    key.frame_index = static_cast<int>(get_u32(f, path));
    key.box.x = static_cast<int>(get_u32(f, path));
    key.box.y = static_cast<int>(get_u32(f, path));
    key.box.w = static_cast<int>(get_u32(f, path));
    key.box.h = static_cast<int>(get_u32(f, path));
    Embedding e;
    e.values.resize(static_cast<std::size_t>(out.dim));
    if (std::fread(e.values.data(), 4, e.values.size(), f) != e.values.size()) {
      throw IoError("truncated embedding file: " + path.string());
    }
    double norm_sq = 0.0;
    for (const float v : e.values) {
      if (!std::isfinite(v)) throw IoError("non-finite embedding value in " + path.string());
      norm_sq += static_cast<double>(v) * v;
    }
    if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-3) {
      throw IoError("embedding " + to_string(key) + " in " + path.string() +
                    " is not unit-norm");
    }
    out.table.emplace(key, std::move(e));
  }
  return out;
}

void write_external_embeddings(const ExternalEmbeddings& embs, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open embedding file for writing: " + path.string());
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};
  std::fwrite(kEmbMagic, 1, 4, f);
  put_u32(f, kEmbVersion);
  put_u32(f, static_cast<std::uint32_t>(embs.dim));
  put_u32(f, static_cast<std::uint32_t>(embs.table.size()));
  for (const auto& [key, emb] : embs.table) {
    put_u32(f, static_cast<std::uint32_t>(key.frame_index));
    put_u32(f, static_cast<std::uint32_t>(key.box.x));
    put_u32(f, static_cast<std::uint32_t>(key.box.y));
    put_u32(f, static_cast<std::uint32_t>(key.box.w));
    put_u32(f, static_cast<std::uint32_t>(key.box.h));
    std::fwrite(emb.values.data(), 4, emb.values.size(), f);
  }
}

}  // namespace patchmine
