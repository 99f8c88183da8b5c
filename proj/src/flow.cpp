#include "patchmine/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "patchmine/image_io.hpp"

namespace patchmine {

namespace {

// Bilinear sample with replicate border.
float sample(const ImageF& img, float x, float y) {
  x = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
  y = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const float fx = x - x0;
  const float fy = y - y0;
  const float top = (1.0f - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
  const float bot = (1.0f - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
  return (1.0f - fy) * top + fy * bot;
}

ImageF warp(const ImageF& img, const ImageF& u, const ImageF& v) {
  ImageF out = ImageF::zeros(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(x, y) = sample(img, x + u.at(x, y), y + v.at(x, y));
    }
  }
  return out;
}

// Central differences, replicate padding.
void gradients(const ImageF& img, ImageF& gx, ImageF& gy) {
  gx = ImageF::zeros(img.width, img.height);
  gy = ImageF::zeros(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      gx.at(x, y) = 0.5f * (img.at_clamped(x + 1, y) - img.at_clamped(x - 1, y));
      gy.at(x, y) = 0.5f * (img.at_clamped(x, y + 1) - img.at_clamped(x, y - 1));
    }
  }
}

// Horn-Schunck neighborhood average: 1/6 for the 4-neighbors, 1/12 diagonals.
float hs_average(const ImageF& f, int x, int y) {
  const float cross = f.at_clamped(x - 1, y) + f.at_clamped(x + 1, y) + f.at_clamped(x, y - 1) +
                      f.at_clamped(x, y + 1);
  const float diag = f.at_clamped(x - 1, y - 1) + f.at_clamped(x + 1, y - 1) +
                     f.at_clamped(x - 1, y + 1) + f.at_clamped(x + 1, y + 1);
  return cross / 6.0f + diag / 12.0f;
}

// One pyramid level: warp I2 by the current flow, then relax the
// linearized brightness-constancy system for the flow increment.
void solve_level(const ImageF& i1, const ImageF& i2, ImageF& u, ImageF& v,
                 const FlowParams& params) {
  const ImageF i2w = warp(i2, u, v);
  ImageF g1x, g1y, g2x, g2y;
  gradients(i1, g1x, g1y);
  gradients(i2w, g2x, g2y);

  const int w = i1.width;
  const int h = i1.height;
  ImageF ix = ImageF::zeros(w, h);
  ImageF iy = ImageF::zeros(w, h);
  ImageF it = ImageF::zeros(w, h);
  for (std::size_t i = 0; i < ix.data.size(); ++i) {
    ix.data[i] = 0.5f * (g1x.data[i] + g2x.data[i]);
    iy.data[i] = 0.5f * (g1y.data[i] + g2y.data[i]);
    it.data[i] = i2w.data[i] - i1.data[i];
  }

  const float alpha2 = params.alpha * params.alpha;
  // The Jacobi denominator never changes across iterations; hoist its inverse.
  ImageF inv_denom = ImageF::zeros(w, h);
  for (std::size_t i = 0; i < inv_denom.data.size(); ++i) {
    inv_denom.data[i] = 1.0f / (alpha2 + ix.data[i] * ix.data[i] + iy.data[i] * iy.data[i]);
  }

  ImageF du = ImageF::zeros(w, h);
  ImageF dv = ImageF::zeros(w, h);
  ImageF du_next = ImageF::zeros(w, h);
  ImageF dv_next = ImageF::zeros(w, h);
  for (int iter = 0; iter < params.iterations; ++iter) {
    for (int y = 0; y < h; ++y) {
      const bool y_interior = y > 0 && y < h - 1;
      const float* du_p = du.data.data();
      const float* dv_p = dv.data.data();
      for (int x = 0; x < w; ++x) {
        float ubar, vbar;
        if (y_interior && x > 0 && x < w - 1) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          ubar = (du_p[i - 1] + du_p[i + 1] + du_p[i - w] + du_p[i + w]) / 6.0f +
                 (du_p[i - w - 1] + du_p[i - w + 1] + du_p[i + w - 1] + du_p[i + w + 1]) / 12.0f;
          vbar = (dv_p[i - 1] + dv_p[i + 1] + dv_p[i - w] + dv_p[i + w]) / 6.0f +
                 (dv_p[i - w - 1] + dv_p[i - w + 1] + dv_p[i + w - 1] + dv_p[i + w + 1]) / 12.0f;
        } else {
          ubar = hs_average(du, x, y);
          vbar = hs_average(dv, x, y);
        }
        const float gx = ix.at(x, y);
        const float gy = iy.at(x, y);
        const float t = (gx * ubar + gy * vbar + it.at(x, y)) * inv_denom.at(x, y);
        du_next.at(x, y) = ubar - gx * t;
        dv_next.at(x, y) = vbar - gy * t;
      }
    }
    std::swap(du, du_next);
    std::swap(dv, dv_next);
  }
  for (std::size_t i = 0; i < u.data.size(); ++i) {
    u.data[i] += du.data[i];
    v.data[i] += dv.data[i];
  }
}

}  // namespace

FlowField compute_flow(const Frame& f1, const Frame& f2, const FlowParams& params,
                       bool* resized_second) {
  ImageF i1 = to_float(f1.gray);
  ImageF i2 = to_float(f2.gray);
  if (resized_second) *resized_second = false;
  if (f2.width != f1.width || f2.height != f1.height) {
    i2 = resize_bilinear(i2, f1.width, f1.height);
    if (resized_second) *resized_second = true;
  }
  if (i1.width < 1 || i1.height < 1) {
    throw std::invalid_argument("compute_flow: empty frame");
  }

  // Build the pyramid, finest first. Levels below min_level_size are skipped.
  std::vector<ImageF> pyr1{std::move(i1)};
  std::vector<ImageF> pyr2{std::move(i2)};
  for (int l = 1; l < params.levels; ++l) {
    const ImageF& prev = pyr1.back();
    if (prev.width / 2 < params.min_level_size || prev.height / 2 < params.min_level_size) break;
    pyr1.push_back(downsample_half(pyr1.back()));
    pyr2.push_back(downsample_half(pyr2.back()));
  }

  ImageF u = ImageF::zeros(pyr1.back().width, pyr1.back().height);
  ImageF v = ImageF::zeros(pyr1.back().width, pyr1.back().height);
  for (int l = static_cast<int>(pyr1.size()) - 1; l >= 0; --l) {
    if (l != static_cast<int>(pyr1.size()) - 1) {
      const int cw = pyr1[l].width;
      const int ch = pyr1[l].height;
      const float sx = static_cast<float>(cw) / u.width;
      const float sy = static_cast<float>(ch) / v.height;
      u = resize_bilinear(u, cw, ch);
      v = resize_bilinear(v, cw, ch);
      for (auto& val : u.data) val *= sx;
      for (auto& val : v.data) val *= sy;
    }
    solve_level(pyr1[l], pyr2[l], u, v, params);
  }

  FlowField flow;
  flow.width = f1.width;
  flow.height = f1.height;
  flow.u = std::move(u);
  flow.v = std::move(v);
  return flow;
}

Frame flow_magnitude_image(const FlowField& flow) {
  const std::size_t n = flow.u.data.size();
  std::vector<float> mag(n);
  float mn = std::numeric_limits<float>::max();
  float mx = std::numeric_limits<float>::lowest();
  for (std::size_t i = 0; i < n; ++i) {
    const float m = std::sqrt(flow.u.data[i] * flow.u.data[i] + flow.v.data[i] * flow.v.data[i]);
    mag[i] = m;
    mn = std::min(mn, m);
    mx = std::max(mx, m);
  }
  ImageRGB rgb;
  rgb.width = flow.width;
  rgb.height = flow.height;
  rgb.data.assign(n * 3, 0);
  if (mx > mn) {
    const float span = mx - mn;
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::uint8_t>(std::lround(255.0f * (mag[i] - mn) / span));
      rgb.data[3 * i] = v;
      rgb.data[3 * i + 1] = v;
      rgb.data[3 * i + 2] = v;
    }
  }
  return Frame::from_rgb(std::move(rgb));
}

namespace {
constexpr char kFlowMagic[4] = {'P', 'M', 'F', 'L'};
constexpr std::uint32_t kFlowVersion = 1;

void write_u32(std::FILE* f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, f);
}

std::uint32_t read_u32(std::FILE* f, const std::filesystem::path& path) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw IoError("truncated flow file: " + path.string());
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

FlowField read_flow_file(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open flow file: " + path.string());
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};

  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kFlowMagic, 4) != 0) {
    throw IoError("bad magic in flow file: " + path.string());
  }
  if (read_u32(f, path) != kFlowVersion) {
    throw IoError("unsupported flow file version: " + path.string());
  }
  FlowField flow;
  flow.width = static_cast<int>(read_u32(f, path));
  flow.height = static_cast<int>(read_u32(f, path));
  if (flow.width <= 0 || flow.height <= 0 || flow.width > 1 << 16 || flow.height > 1 << 16) {
    throw IoError("bad dimensions in flow file: " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
  flow.u = ImageF::zeros(flow.width, flow.height);
  flow.v = ImageF::zeros(flow.width, flow.height);
  static_assert(sizeof(float) == 4);
  if (std::fread(flow.u.data.data(), 4, n, f) != n || std::fread(flow.v.data.data(), 4, n, f) != n) {
    throw IoError("truncated flow file: " + path.string());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(flow.u.data[i]) || !std::isfinite(flow.v.data[i])) {
      throw IoError("non-finite flow value in " + path.string());
    }
  }
  return flow;
}

void write_flow_file(const FlowField& flow, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open flow file for writing: " + path.string());
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};
  std::fwrite(kFlowMagic, 1, 4, f);
  write_u32(f, kFlowVersion);
  write_u32(f, static_cast<std::uint32_t>(flow.width));
  write_u32(f, static_cast<std::uint32_t>(flow.height));
  const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
  std::fwrite(flow.u.data.data(), 4, n, f);
  std::fwrite(flow.v.data.data(), 4, n, f);
}

}  // namespace patchmine
