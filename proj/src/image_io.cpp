#include "blight/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "blight/error.hpp"

namespace blight::imaging {

namespace fs = std::filesystem;

RasterImage read_image(const fs::path& path) {
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kIo, "cannot decode " + path.string() + ": " + e.what());
  }
  if (bgr.empty() || bgr.depth() != CV_8U) {
    throw Error(ErrorCode::kIo, "cannot decode image " + path.string());
  }
  const int w = bgr.cols;
  const int h = bgr.rows;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const auto* row = bgr.ptr<std::uint8_t>(y);
    auto* dst = rgb.data() + static_cast<std::size_t>(y) * w * 3;
    for (int x = 0; x < w; ++x) {
      dst[3 * x + 0] = row[3 * x + 2];
      dst[3 * x + 1] = row[3 * x + 1];
      dst[3 * x + 2] = row[3 * x + 0];
    }
  }
  return RasterImage(w, h, 3, std::move(rgb));
}

void write_png(const fs::path& path, const RasterImage& img) {
  if (img.empty()) throw Error(ErrorCode::kDimension, "cannot write an empty image");
  const int type = img.channels() == 3 ? CV_8UC3 : CV_8UC1;
  cv::Mat mat(img.height(), img.width(), type);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) {
      if (img.channels() == 3) {
        row[3 * x + 0] = img.at(x, y, 2);
        row[3 * x + 1] = img.at(x, y, 1);
        row[3 * x + 2] = img.at(x, y, 0);
      } else {
        row[x] = img.at(x, y);
      }
    }
  }
  std::vector<std::uint8_t> encoded;
  try {
    if (!cv::imencode(".png", mat, encoded)) {
      throw Error(ErrorCode::kIo, "PNG encoding failed for " + path.string());
    }
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kIo, "PNG encoding failed for " + path.string() + ": " + e.what());
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  const bool ok = std::fwrite(encoded.data(), 1, encoded.size(), f) == encoded.size();
  std::fclose(f);
  if (!ok) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

std::vector<ImageEntry> scan_image_tree(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kIo, "image root is not a directory: " + root.string());
  }
  std::vector<ImageEntry> entries;
  for (const auto& item : fs::recursive_directory_iterator(root)) {
    if (!item.is_regular_file()) continue;
    std::string ext = item.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    ImageEntry entry;
    entry.path = item.path();
    entry.relative = fs::relative(item.path(), root);
    entry.label = item.path().parent_path().filename().string();
    entries.push_back(std::move(entry));
  }
  std::sort(entries.begin(), entries.end(),
            [](const ImageEntry& a, const ImageEntry& b) { return a.relative < b.relative; });
  return entries;
}

}  // namespace blight::imaging
