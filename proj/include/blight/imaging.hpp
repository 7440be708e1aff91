#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace blight::imaging {

inline constexpr int kLevels = 256;

/// 8-bit raster, row-major, channels interleaved (RGB order when 3 channels).
class RasterImage {
 public:
  RasterImage() = default;
  /// Zero-filled image. Throws kDimension / kChannel on invalid geometry.
  RasterImage(int width, int height, int channels);
  /// Takes ownership of `data`; its length must be width * height * channels.
  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  /// Copies channel `c` out as a single-channel plane.
  std::vector<std::uint8_t> plane(int c) const;
  void set_plane(int c, std::span<const std::uint8_t> values);

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Level counts C(r) and the normalized cumulative distribution of one plane.
struct HistogramTable {
  std::array<std::uint64_t, kLevels> counts{};
  std::array<double, kLevels> cdf{};
  std::uint64_t total = 0;
};

HistogramTable histogram(std::span<const std::uint8_t> plane);

/// Lookup table level -> equalized level, round((L-1) * cdf(level)) with
/// half-away-from-zero rounding, evaluated in exact integer arithmetic.
std::array<std::uint8_t, kLevels> equalization_lut(const HistogramTable& table);

std::vector<std::uint8_t> equalize_channel(std::span<const std::uint8_t> plane);

/// Per-channel histogram equalization of an RGB image.
RasterImage equalize_rgb(const RasterImage& img);

/// Bilinear resampling with pixel-center alignment: destination pixel d maps
/// to source coordinate (d + 0.5) * src/dst - 0.5, clamped to the image.
RasterImage resize(const RasterImage& img, int target_w, int target_h);

}  // namespace blight::imaging
