#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patchmine/image.hpp"

namespace patchmine {

/// Ordered frames of one video. retained_indices maps each frame back to its
/// original (filename-order) position and stays strictly increasing.
struct VideoSequence {
  std::string video_id;
  std::vector<Frame> frames;
  std::vector<int> retained_indices;
};

struct FilterParams {
  double corr_threshold = 0.1;     // keep only pairs with correlation strictly above
  double intensity_min = 50.0;     // closed interval [min, max]
  double intensity_max = 200.0;
  int corr_raster = 64;            // gray frames are box-downsampled to this square
};

struct FilterRemoval {
  int frame_index = 0;             // original frame index
  std::string reason;              // "intensity" or "correlation"
  double value = 0.0;              // the statistic that violated its gate
  bool value_defined = true;       // false when the correlation was undefined
};

struct FilterReport {
  std::string video_id;
  std::vector<FilterRemoval> removals;
  bool rejected = false;           // all frames removed
  /// Structured text lines for the run log.
  std::vector<std::string> log_lines() const;
};

struct FilterResult {
  VideoSequence sequence;
  FilterReport report;
};

/// Loads `*.png` frames from a directory, ordered by the numeric value of the
/// file stem. Throws IoError naming the file on a decode failure, or on an
/// empty directory.
VideoSequence load_sequence(const std::filesystem::path& dir);

/// Pearson coefficient over the two gray channels box-downsampled to a fixed
/// raster (default 64x64). Empty when either side has zero variance.
std::optional<double> pearson_correlation(const Frame& f1, const Frame& f2, int raster = 64);

/// Arithmetic mean of the gray channel.
double mean_intensity(const Frame& f);

/// Gate predicates, split out so the threshold semantics are testable directly:
/// the intensity gate is the closed interval, the correlation gate is strict.
inline bool passes_intensity_gate(double mean, const FilterParams& p) {
  return mean >= p.intensity_min && mean <= p.intensity_max;
}
inline bool passes_correlation_gate(std::optional<double> r, const FilterParams& p) {
  return r.has_value() && *r > p.corr_threshold;
}

/// Removes frames outside the intensity limits, then scans consecutive
/// survivors and drops the later frame of every pair at or below the
/// correlation threshold. Sets report.rejected when nothing survives.
FilterResult filter_frames(const VideoSequence& seq, const FilterParams& params = {});

}  // namespace patchmine
