#include "blight/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "blight/error.hpp"

namespace blight::imaging {

namespace {

void check_geometry(int width, int height, int channels) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kDimension, "image dimensions must be positive, got " +
                                           std::to_string(width) + "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kChannel,
                "images must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  check_geometry(width, height, channels);
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), 0);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_geometry(width, height, channels);
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    throw Error(ErrorCode::kDimension, "pixel buffer holds " + std::to_string(data_.size()) +
                                           " bytes, expected " +
                                           std::to_string(pixel_count() * channels));
  }
}

std::vector<std::uint8_t> RasterImage::plane(int c) const {
  std::vector<std::uint8_t> out(pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * channels_ + c];
  return out;
}

void RasterImage::set_plane(int c, std::span<const std::uint8_t> values) {
  if (values.size() != pixel_count()) {
    throw Error(ErrorCode::kDimension, "plane size does not match image");
  }
  for (std::size_t i = 0; i < values.size(); ++i) data_[i * channels_ + c] = values[i];
}

HistogramTable histogram(std::span<const std::uint8_t> plane) {
  HistogramTable table;
  for (std::uint8_t v : plane) ++table.counts[v];
  table.total = plane.size();
  std::uint64_t running = 0;
  for (int r = 0; r < kLevels; ++r) {
    running += table.counts[r];
    table.cdf[r] = table.total == 0 ? 0.0
                                    : static_cast<double>(running) / static_cast<double>(table.total);
  }
  return table;
}

std::array<std::uint8_t, kLevels> equalization_lut(const HistogramTable& table) {
  std::array<std::uint8_t, kLevels> lut{};
  if (table.total == 0) return lut;
  const std::uint64_t n = table.total;
  std::uint64_t running = 0;
  for (int r = 0; r < kLevels; ++r) {
    running += table.counts[r];
    // floor((L-1) * running / n + 1/2), i.e. half-away-from-zero on a non-negative value.
    const std::uint64_t scaled = (2 * (kLevels - 1) * running + n) / (2 * n);
    lut[r] = static_cast<std::uint8_t>(scaled);
  }
  return lut;
}

std::vector<std::uint8_t> equalize_channel(std::span<const std::uint8_t> plane) {
  if (plane.empty()) throw Error(ErrorCode::kDimension, "cannot equalize an empty plane");
  const auto lut = equalization_lut(histogram(plane));
  std::vector<std::uint8_t> out(plane.size());
  std::transform(plane.begin(), plane.end(), out.begin(), [&](std::uint8_t v) { return lut[v]; });
  return out;
}

RasterImage equalize_rgb(const RasterImage& img) {
  if (img.empty()) throw Error(ErrorCode::kDimension, "cannot equalize an empty image");
  if (img.channels() != 3) {
    throw Error(ErrorCode::kChannel, "equalize_rgb expects 3 channels, got " +
                                         std::to_string(img.channels()));
  }
  RasterImage out = img;
  for (int c = 0; c < 3; ++c) out.set_plane(c, equalize_channel(img.plane(c)));
  return out;
}

RasterImage resize(const RasterImage& img, int target_w, int target_h) {
  if (img.empty()) throw Error(ErrorCode::kDimension, "cannot resize an empty image");
  if (target_w <= 0 || target_h <= 0) {
    throw Error(ErrorCode::kDimension, "target dimensions must be positive, got " +
                                           std::to_string(target_w) + "x" +
                                           std::to_string(target_h));
  }
  if (target_w == img.width() && target_h == img.height()) return img;

  // Source coordinate of destination pixel d is ((2d + 1) * src - dst) / (2 * dst);
  // numerators are kept as integers so rounding ties are exact.
  struct Tap {
    int lo;
    int hi;
    std::int64_t frac;  // in units of 1 / (2 * dst)
  };
  auto taps = [](int src, int dst) {
    std::vector<Tap> out(dst);
    const std::int64_t den = 2 * static_cast<std::int64_t>(dst);
    for (int d = 0; d < dst; ++d) {
      std::int64_t s = (2 * static_cast<std::int64_t>(d) + 1) * src - dst;
      s = std::clamp<std::int64_t>(s, 0, (src - 1) * den);
      const int lo = static_cast<int>(s / den);
      out[d] = {lo, std::min(lo + 1, src - 1), s - lo * den};
    }
    return out;
  };
  const auto xs = taps(img.width(), target_w);
  const auto ys = taps(img.height(), target_h);
  const std::int64_t dx = 2 * static_cast<std::int64_t>(target_w);
  const std::int64_t dy = 2 * static_cast<std::int64_t>(target_h);
  const std::int64_t denom = dx * dy;

  const int channels = img.channels();
  RasterImage out(target_w, target_h, channels);
  for (int y = 0; y < target_h; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < target_w; ++x) {
      const Tap& tx = xs[x];
      for (int c = 0; c < channels; ++c) {
        const std::int64_t top = img.at(tx.lo, ty.lo, c) * (dx - tx.frac) + img.at(tx.hi, ty.lo, c) * tx.frac;
        const std::int64_t bottom = img.at(tx.lo, ty.hi, c) * (dx - tx.frac) + img.at(tx.hi, ty.hi, c) * tx.frac;
        const std::int64_t num = top * (dy - ty.frac) + bottom * ty.frac;
        out.at(x, y, c) = static_cast<std::uint8_t>((2 * num + denom) / (2 * denom));
      }
    }
  }
  return out;
}

}  // namespace blight::imaging
