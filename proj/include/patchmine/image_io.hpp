#pragma once

#include <filesystem>
#include <stdexcept>

#include "patchmine/image.hpp"

namespace patchmine {

/// Filesystem/decoding failures; the CLI maps these to exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Decode a PNG file to 8-bit RGB (gray/palette/alpha inputs are expanded).
ImageRGB read_png(const std::filesystem::path& path);

void write_png(const ImageRGB& img, const std::filesystem::path& path);

}  // namespace patchmine
