#include "patchmine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "patchmine/image_io.hpp"

namespace patchmine {

namespace {

// Raw-engine draws so the byte output does not depend on the standard
// library's distribution implementations.
std::uint32_t rnd_below(std::mt19937& rng, std::uint32_t n) { return rng() % n; }

double rnd_unit(std::mt19937& rng) { return rng() / 4294967296.0; }

// Bilinear upsampling of a coarse random grid: textured at a 4-px scale but
// smooth per pixel, so rigid translation keeps neighboring frames correlated
// (per-pixel noise would decorrelate under shift and trip the scene-cut gate).
ImageRGB make_texture(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  constexpr int step = 4;
  const int gw = w / step + 2;
  const int gh = h / step + 2;
  std::vector<float> grid(static_cast<std::size_t>(gw) * gh * 3);
  for (auto& v : grid) v = static_cast<float>(40 + rnd_below(rng, 176));  // [40, 215]

  ImageRGB tex;
  tex.width = w;
  tex.height = h;
  tex.data.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const float gy = static_cast<float>(y) / step;
    const int y0 = static_cast<int>(gy);
    const float fy = gy - static_cast<float>(y0);
    for (int x = 0; x < w; ++x) {
      const float gx = static_cast<float>(x) / step;
      const int x0 = static_cast<int>(gx);
      const float fx = gx - static_cast<float>(x0);
      std::uint8_t* p = tex.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const auto at = [&](int xx, int yy) {
          return grid[(static_cast<std::size_t>(yy) * gw + xx) * 3 + c];
        };
        const float v = (1.0f - fy) * ((1.0f - fx) * at(x0, y0) + fx * at(x0 + 1, y0)) +
                        fy * ((1.0f - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1));
        p[c] = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return tex;
}

void blit(ImageRGB& dst, const ImageRGB& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    const std::uint8_t* s = src.pixel(0, y);
    std::uint8_t* d = dst.pixel(x0, y0 + y);
    std::copy(s, s + static_cast<std::size_t>(src.width) * 3, d);
  }
}

ImageRGB make_background(const SynthVideoSpec& spec) {
  const std::uint8_t base = spec.background.base;
  ImageRGB bg = ImageRGB::filled(spec.width, spec.height, base, base, base);
  std::mt19937 rng(static_cast<std::uint32_t>(spec.seed * 2654435761u + 0x9e3779b9u));
  switch (spec.background.type) {
    case SynthBackgroundType::Plain:
      break;
    case SynthBackgroundType::Noise: {
      // Uniform gray noise with standard deviation sigma.
      const double amp = spec.background.sigma * std::sqrt(3.0);
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const double off = (2.0 * rnd_unit(rng) - 1.0) * amp;
          const int v = std::clamp(static_cast<int>(std::lround(base + off)), 0, 255);
          std::uint8_t* p = bg.pixel(x, y);
          p[0] = p[1] = p[2] = static_cast<std::uint8_t>(v);
        }
      }
      break;
    }
    case SynthBackgroundType::TexturedStatic: {
      // 8-px blocks of random gray levels around the base.
      constexpr int block = 8;
      const int bw = (spec.width + block - 1) / block;
      const int bh = (spec.height + block - 1) / block;
      std::vector<std::uint8_t> levels(static_cast<std::size_t>(bw) * bh);
      for (auto& v : levels) {
        const int lvl = static_cast<int>(base) - 30 + static_cast<int>(rnd_below(rng, 61));
        v = static_cast<std::uint8_t>(std::clamp(lvl, 0, 255));
      }
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const std::uint8_t v = levels[static_cast<std::size_t>(y / block) * bw + x / block];
          std::uint8_t* p = bg.pixel(x, y);
          p[0] = p[1] = p[2] = v;
        }
      }
      break;
    }
  }
  for (const SynthDistractor& d : spec.distractors) {
    blit(bg, make_texture(d.w, d.h, d.texture_seed), d.x, d.y);
  }
  return bg;
}

BoundingBox object_box(const SynthVideoSpec& spec, int frame_index) {
  return {spec.start_x + frame_index * spec.dx, spec.start_y + frame_index * spec.dy,
          spec.object.w, spec.object.h};
}

}  // namespace

void validate_spec(const SynthVideoSpec& spec) {
  const auto fail = [&](const std::string& why) {
    throw std::invalid_argument("synth spec '" + spec.video_id + "': " + why);
  };
  if (spec.video_id.empty()) fail("missing video_id");
  if (spec.width < 64 || spec.height < 64) fail("frame below 64x64");
  if (spec.n_frames < 2) fail("need at least 2 frames");
  if (spec.object.w < 1 || spec.object.h < 1) fail("empty object");
  for (int t = 0; t < spec.n_frames; ++t) {
    const BoundingBox b = object_box(spec, t);
    if (b.x < 0 || b.y < 0 || b.x + b.w > spec.width || b.y + b.h > spec.height) {
      fail("object exits frame at frame " + std::to_string(t));
    }
  }
  for (const SynthDistractor& d : spec.distractors) {
    if (d.x < 0 || d.y < 0 || d.w < 1 || d.h < 1 || d.x + d.w > spec.width ||
        d.y + d.h > spec.height) {
      fail("distractor outside frame");
    }
  }
}

ImageRGB render_synth_frame(const SynthVideoSpec& spec, int frame_index) {
  ImageRGB canvas = make_background(spec);
  const BoundingBox b = object_box(spec, frame_index);
  blit(canvas, make_texture(spec.object.w, spec.object.h, spec.object.texture_seed), b.x, b.y);
  return canvas;
}

GroundTruth generate_synthetic_video(const SynthVideoSpec& spec,
                                     const std::filesystem::path& out_root) {
  validate_spec(spec);
  const std::filesystem::path dir = out_root / spec.video_id;
  std::filesystem::create_directories(dir);

  // Background and object rasters are static; only the object position moves.
  const ImageRGB bg = make_background(spec);
  const ImageRGB obj = make_texture(spec.object.w, spec.object.h, spec.object.texture_seed);

  GroundTruth gt;
  char name[32];
  for (int t = 0; t < spec.n_frames; ++t) {
    ImageRGB canvas = bg;
    const BoundingBox b = object_box(spec, t);
    blit(canvas, obj, b.x, b.y);
    std::snprintf(name, sizeof(name), "%03d.png", t);
    write_png(canvas, dir / name);
    gt[t] = b;
  }
  write_ground_truth(gt, dir / "groundtruth.jsonl");
  return gt;
}

GroundTruth load_ground_truth(const std::filesystem::path& sidecar_path) {
  std::ifstream in(sidecar_path, std::ios::binary);
  if (!in) throw IoError("cannot read ground truth: " + sidecar_path.string());
  GroundTruth gt;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    gt[j.at("frame_index").get<int>()] = {j.at("x").get<int>(), j.at("y").get<int>(),
                                          j.at("w").get<int>(), j.at("h").get<int>()};
  }
  return gt;
}

void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& sidecar_path) {
  std::ofstream out(sidecar_path, std::ios::binary);
  if (!out) throw IoError("cannot write ground truth: " + sidecar_path.string());
  char buf[128];
  for (const auto& [frame_index, box] : gt) {
    std::snprintf(buf, sizeof(buf), "{\"frame_index\":%d,\"x\":%d,\"y\":%d,\"w\":%d,\"h\":%d}",
                  frame_index, box.x, box.y, box.w, box.h);
    out << buf << '\n';
  }
}

std::vector<SynthVideoSpec> load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read synth spec: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("synth spec parse error in " + path.string() + ": " + e.what());
  }

  std::vector<SynthVideoSpec> specs;
  for (const auto& v : j.at("videos")) {
    SynthVideoSpec s;
    s.video_id = v.at("video_id").get<std::string>();
    s.width = v.value("width", s.width);
    s.height = v.value("height", s.height);
    s.n_frames = v.value("n_frames", s.n_frames);
    if (v.contains("object")) {
      const auto& o = v.at("object");
      s.object.w = o.value("w", s.object.w);
      s.object.h = o.value("h", s.object.h);
      s.object.texture_seed = o.value("texture_seed", s.object.texture_seed);
    }
    if (v.contains("start")) {
      s.start_x = v.at("start").value("x", 0);
      s.start_y = v.at("start").value("y", 0);
    }
    if (v.contains("motion")) {
      s.dx = v.at("motion").value("dx", 0);
      s.dy = v.at("motion").value("dy", 0);
    }
    if (v.contains("background")) {
      const auto& b = v.at("background");
      const std::string type = b.value("type", std::string("plain"));
      if (type == "plain") {
        s.background.type = SynthBackgroundType::Plain;
      } else if (type == "noise") {
        s.background.type = SynthBackgroundType::Noise;
      } else if (type == "textured") {
        s.background.type = SynthBackgroundType::TexturedStatic;
      } else {
        throw std::invalid_argument("synth spec '" + s.video_id + "': unknown background type '" +
                                    type + "'");
      }
      s.background.base = static_cast<std::uint8_t>(b.value("base", 120));
      s.background.sigma = b.value("sigma", s.background.sigma);
    }
    if (v.contains("distractors")) {
      for (const auto& d : v.at("distractors")) {
        SynthDistractor dist;
        dist.x = d.at("x").get<int>();
        dist.y = d.at("y").get<int>();
        dist.w = d.at("w").get<int>();
        dist.h = d.at("h").get<int>();
        dist.texture_seed = d.value("texture_seed", 2u);
        s.distractors.push_back(dist);
      }
    }
    s.seed = v.value("seed", 0ull);
    validate_spec(s);
    specs.push_back(std::move(s));
  }
  if (specs.empty()) throw std::invalid_argument("synth spec has no videos");
  return specs;
}

}  // namespace patchmine
