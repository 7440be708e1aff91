#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blight/imaging.hpp"

namespace blight::imaging {

/// Decodes a PNG or JPEG file into an RGB raster. Grayscale inputs are
/// expanded to three identical channels.
RasterImage read_image(const std::filesystem::path& path);

/// Writes a lossless PNG (RGB or grayscale).
void write_png(const std::filesystem::path& path, const RasterImage& img);

struct ImageEntry {
  std::filesystem::path path;      // absolute or root-joined source path
  std::filesystem::path relative;  // path relative to the tree root
  std::string label;               // immediate parent directory name
};

/// Lists .png/.jpg/.jpeg files below `root`, sorted by relative path.
std::vector<ImageEntry> scan_image_tree(const std::filesystem::path& root);

}  // namespace blight::imaging
