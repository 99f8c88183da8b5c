#include "patchmine/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace patchmine {

ImageRGB ImageRGB::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ImageRGB img;
  img.width = w;
  img.height = h;
  img.data.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    img.data[i] = r;
    img.data[i + 1] = g;
    img.data[i + 2] = b;
  }
  return img;
}

float ImageF::at_clamped(int x, int y) const {
  x = std::clamp(x, 0, width - 1);
  y = std::clamp(y, 0, height - 1);
  return at(x, y);
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int v = 299 * r + 587 * g + 114 * b;
  return static_cast<std::uint8_t>((v + 500) / 1000);
}

ImageGray to_gray(const ImageRGB& rgb) {
  ImageGray g;
  g.width = rgb.width;
  g.height = rgb.height;
  g.data.resize(static_cast<std::size_t>(g.width) * g.height);
  const std::uint8_t* p = rgb.data.data();
  for (std::size_t i = 0; i < g.data.size(); ++i, p += 3) {
    g.data[i] = luma(p[0], p[1], p[2]);
  }
  return g;
}

ImageF to_float(const ImageGray& g) {
  ImageF f;
  f.width = g.width;
  f.height = g.height;
  f.data.assign(g.data.begin(), g.data.end());
  return f;
}

Frame Frame::from_rgb(ImageRGB rgb) {
  Frame f;
  f.width = rgb.width;
  f.height = rgb.height;
  f.gray = to_gray(rgb);
  f.rgb = std::move(rgb);
  return f;
}

namespace {

// Source coordinate for output pixel i under center-aligned bilinear mapping.
inline double src_coord(int i, int out_n, int in_n) {
  return (i + 0.5) * static_cast<double>(in_n) / out_n - 0.5;
}

struct BilinearTap {
  int i0, i1;
  double frac;
};

inline BilinearTap tap(double c, int n) {
  double f = std::floor(c);
  int i0 = static_cast<int>(f);
  int i1 = i0 + 1;
  double frac = c - f;
  i0 = std::clamp(i0, 0, n - 1);
  i1 = std::clamp(i1, 0, n - 1);
  return {i0, i1, frac};
}

}  // namespace

ImageRGB resize_bilinear(const ImageRGB& src, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("resize_bilinear: bad output size");
  if (out_w == src.width && out_h == src.height) return src;
  ImageRGB out;
  out.width = out_w;
  out.height = out_h;
  out.data.resize(static_cast<std::size_t>(out_w) * out_h * 3);
  for (int y = 0; y < out_h; ++y) {
    const BilinearTap ty = tap(src_coord(y, out_h, src.height), src.height);
    for (int x = 0; x < out_w; ++x) {
      const BilinearTap tx = tap(src_coord(x, out_w, src.width), src.width);
      const std::uint8_t* p00 = src.pixel(tx.i0, ty.i0);
      const std::uint8_t* p10 = src.pixel(tx.i1, ty.i0);
      const std::uint8_t* p01 = src.pixel(tx.i0, ty.i1);
      const std::uint8_t* p11 = src.pixel(tx.i1, ty.i1);
      std::uint8_t* q = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - tx.frac) * p00[c] + tx.frac * p10[c];
        const double bot = (1.0 - tx.frac) * p01[c] + tx.frac * p11[c];
        const double v = (1.0 - ty.frac) * top + ty.frac * bot;
        q[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

ImageF resize_bilinear(const ImageF& src, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("resize_bilinear: bad output size");
  ImageF out = ImageF::zeros(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const BilinearTap ty = tap(src_coord(y, out_h, src.height), src.height);
    for (int x = 0; x < out_w; ++x) {
      const BilinearTap tx = tap(src_coord(x, out_w, src.width), src.width);
      const double top = (1.0 - tx.frac) * src.at(tx.i0, ty.i0) + tx.frac * src.at(tx.i1, ty.i0);
      const double bot = (1.0 - tx.frac) * src.at(tx.i0, ty.i1) + tx.frac * src.at(tx.i1, ty.i1);
      out.at(x, y) = static_cast<float>((1.0 - ty.frac) * top + ty.frac * bot);
    }
  }
  return out;
}

ImageF downsample_box(const ImageGray& src, int out_w, int out_h) {
  ImageF out = ImageF::zeros(out_w, out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    int y0 = static_cast<int>(static_cast<std::int64_t>(oy) * src.height / out_h);
    int y1 = static_cast<int>(static_cast<std::int64_t>(oy + 1) * src.height / out_h);
    y0 = std::min(y0, src.height - 1);
    y1 = std::max(y1, y0 + 1);
    y1 = std::min(y1, src.height);
    for (int ox = 0; ox < out_w; ++ox) {
      int x0 = static_cast<int>(static_cast<std::int64_t>(ox) * src.width / out_w);
      int x1 = static_cast<int>(static_cast<std::int64_t>(ox + 1) * src.width / out_w);
      x0 = std::min(x0, src.width - 1);
      x1 = std::max(x1, x0 + 1);
      x1 = std::min(x1, src.width);
      double sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sum += src.at(x, y);
      }
      out.at(ox, oy) = static_cast<float>(sum / ((y1 - y0) * (x1 - x0)));
    }
  }
  return out;
}

ImageF downsample_half(const ImageF& src) {
  const int ow = (src.width + 1) / 2;
  const int oh = (src.height + 1) / 2;
  ImageF out = ImageF::zeros(ow, oh);
  for (int y = 0; y < oh; ++y) {
    const int y0 = 2 * y;
    const int y1 = std::min(2 * y + 1, src.height - 1);
    for (int x = 0; x < ow; ++x) {
      const int x0 = 2 * x;
      const int x1 = std::min(2 * x + 1, src.width - 1);
      out.at(x, y) =
          0.25f * (src.at(x0, y0) + src.at(x1, y0) + src.at(x0, y1) + src.at(x1, y1));
    }
  }
  return out;
}

ImageRGB crop(const ImageRGB& src, const BoundingBox& box) {
  if (box.x < 0 || box.y < 0 || box.w < 1 || box.h < 1 || box.x + box.w > src.width ||
      box.y + box.h > src.height) {
    throw std::invalid_argument("crop: box outside image");
  }
  ImageRGB out;
  out.width = box.w;
  out.height = box.h;
  out.data.resize(static_cast<std::size_t>(box.w) * box.h * 3);
  for (int y = 0; y < box.h; ++y) {
    const std::uint8_t* s = src.pixel(box.x, box.y + y);
    std::copy(s, s + static_cast<std::size_t>(box.w) * 3, out.pixel(0, y));
  }
  return out;
}

}  // namespace patchmine
