#include "patchmine/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "patchmine/image_io.hpp"

namespace patchmine {

std::vector<std::string> FilterReport::log_lines() const {
  std::vector<std::string> lines;
  char buf[256];
  for (const auto& r : removals) {
    if (r.value_defined) {
      std::snprintf(buf, sizeof(buf), "filter video=%s removed frame=%d reason=%s value=%.6f",
                    video_id.c_str(), r.frame_index, r.reason.c_str(), r.value);
    } else {
      std::snprintf(buf, sizeof(buf), "filter video=%s removed frame=%d reason=%s value=undefined",
                    video_id.c_str(), r.frame_index, r.reason.c_str());
    }
    lines.emplace_back(buf);
  }
  if (rejected) {
    lines.emplace_back("filter video=" + video_id + " rejected reason=all-frames-removed");
  }
  return lines;
}

VideoSequence load_sequence(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::pair<long, std::filesystem::path>> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    char* end = nullptr;
    const long num = std::strtol(stem.c_str(), &end, 10);
    if (end == stem.c_str() || *end != '\0') {
      throw IoError("frame filename is not a zero-padded number: " + entry.path().string());
    }
    files.emplace_back(num, entry.path());
  }
  if (files.empty()) {
    throw IoError("no frames found in " + dir.string());
  }
  std::sort(files.begin(), files.end());

  VideoSequence seq;
  seq.video_id = dir.filename().string();
  seq.frames.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    seq.frames.push_back(Frame::from_rgb(read_png(files[i].second)));
    seq.retained_indices.push_back(static_cast<int>(i));
  }
  return seq;
}

std::optional<double> pearson_correlation(const Frame& f1, const Frame& f2, int raster) {
  const ImageF a = downsample_box(f1.gray, raster, raster);
  const ImageF b = downsample_box(f2.gray, raster, raster);
  const std::size_t n = a.data.size();
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += a.data[i];
    sb += b.data[i];
  }
  const double ma = sa / n;
  const double mb = sb / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.data[i] - ma;
    const double db = b.data[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

double mean_intensity(const Frame& f) {
  double sum = 0.0;
  for (const std::uint8_t v : f.gray.data) sum += v;
  return sum / f.gray.data.size();
}

FilterResult filter_frames(const VideoSequence& seq, const FilterParams& params) {
  FilterResult result;
  result.report.video_id = seq.video_id;
  result.sequence.video_id = seq.video_id;

  // Intensity gate first, then the correlation scan over the survivors.
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const double m = mean_intensity(seq.frames[i]);
    if (passes_intensity_gate(m, params)) {
      survivors.push_back(i);
    } else {
      result.report.removals.push_back({seq.retained_indices[i], "intensity", m, true});
    }
  }

  std::vector<std::size_t> kept;
  for (const std::size_t i : survivors) {
    if (kept.empty()) {
      kept.push_back(i);
      continue;
    }
    const std::optional<double> r =
        pearson_correlation(seq.frames[kept.back()], seq.frames[i], params.corr_raster);
    if (passes_correlation_gate(r, params)) {
      kept.push_back(i);
    } else {
      result.report.removals.push_back(
          {seq.retained_indices[i], "correlation", r.value_or(0.0), r.has_value()});
    }
  }

  for (const std::size_t i : kept) {
    result.sequence.frames.push_back(seq.frames[i]);
    result.sequence.retained_indices.push_back(seq.retained_indices[i]);
  }
  result.report.rejected = result.sequence.frames.empty();
  return result;
}

}  // namespace patchmine
