#include "zenesis/adapt.hpp"

#include <algorithm>
#include <cmath>

#include "zenesis/error.hpp"

namespace zenesis {

void AdaptConfig::validate() const {
  if (!(clip_lo_percentile >= 0.0 && clip_lo_percentile < clip_hi_percentile && clip_hi_percentile <= 1.0)) {
    throw Error(Errc::InvalidArgument, "clip percentiles must satisfy 0 <= lo < hi <= 1");
  }
}

Image8::Image8(int width, int height, std::vector<std::uint8_t> rgb, ImageProvenance provenance)
    : width_(width), height_(height), rgb_(std::move(rgb)), provenance_(std::move(provenance)) {
  if (width < 0 || height < 0 || rgb_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error(Errc::DimensionMismatch, "RGB buffer does not match image dimensions");
  }
}

std::vector<std::uint8_t> Image8::grayscale() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width_) * height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      out[static_cast<std::size_t>(y) * width_ + x] = gray(x, y);
    }
  }
  return out;
}

Image8 Image8::crop(const BBox& box) const {
  if (!box.inside(width_, height_)) {
    throw Error(Errc::DegenerateBox, "crop box outside image");
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(box.area()) * 3);
  const std::size_t row = static_cast<std::size_t>(box.width()) * 3;
  for (int y = box.y0; y < box.y1; ++y) {
    const auto src = rgb_.begin() + (static_cast<std::ptrdiff_t>(y) * width_ + box.x0) * 3;
    std::copy(src, src + static_cast<std::ptrdiff_t>(row), out.begin() + static_cast<std::ptrdiff_t>((y - box.y0) * row));
  }
  return Image8(box.width(), box.height(), std::move(out), provenance_);
}

Image8 Image8::resize_nearest(int out_width, int out_height) const {
  if (out_width <= 0 || out_height <= 0) {
    throw Error(Errc::InvalidArgument, "resize target must be positive");
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(out_width) * out_height * 3);
  for (int y = 0; y < out_height; ++y) {
    const int sy = static_cast<int>(static_cast<std::int64_t>(y) * height_ / out_height);
    for (int x = 0; x < out_width; ++x) {
      const int sx = static_cast<int>(static_cast<std::int64_t>(x) * width_ / out_width);
      const std::size_t s = (static_cast<std::size_t>(sy) * width_ + sx) * 3;
      const std::size_t d = (static_cast<std::size_t>(y) * out_width + x) * 3;
      out[d] = rgb_[s];
      out[d + 1] = rgb_[s + 1];
      out[d + 2] = rgb_[s + 2];
    }
  }
  return Image8(out_width, out_height, std::move(out), provenance_);
}

namespace {

// Rank products are nudged by a tiny epsilon so decimal fractions such as
// 0.995 * 1000 land on the integer rank they denote.
constexpr double kRankEpsilon = 1e-9;

template <typename T>
ClipBounds bounds_of(std::span<const T> samples, const AdaptConfig& cfg) {
  const std::size_t n = samples.size();
  const double last = static_cast<double>(n - 1);
  auto lo_rank = static_cast<std::size_t>(std::floor(cfg.clip_lo_percentile * last + kRankEpsilon));
  auto hi_rank = static_cast<std::size_t>(std::ceil(cfg.clip_hi_percentile * last - kRankEpsilon));
  lo_rank = std::min(lo_rank, n - 1);
  hi_rank = std::clamp(hi_rank, lo_rank, n - 1);

  std::vector<T> work(samples.begin(), samples.end());
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(lo_rank), work.end());
  const double low = static_cast<double>(work[lo_rank]);
  // Everything right of lo_rank is >= work[lo_rank], so the high rank can be selected there.
  std::nth_element(work.begin() + static_cast<std::ptrdiff_t>(lo_rank),
                   work.begin() + static_cast<std::ptrdiff_t>(hi_rank), work.end());
  const double high = static_cast<double>(work[hi_rank]);
  return {low, high};
}

std::uint8_t map_sample(double v, const ClipBounds& b) {
  if (b.high <= b.low) return 0;
  const double t = (v - b.low) * 255.0 / (b.high - b.low);
  if (std::isnan(t) || t <= 0.0) return 0;
  if (t >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(t + 0.5));
}

}  // namespace

ClipBounds compute_clip_bounds(const SampleSpan& samples, const AdaptConfig& cfg) {
  cfg.validate();
  if (size_of(samples) == 0) {
    throw Error(Errc::EmptyInput, "cannot compute clip bounds of zero samples");
  }
  return std::visit([&](const auto& s) { return bounds_of(s, cfg); }, samples);
}

Image8 adapt_slice(const RawSlice& slice, const ClipBounds& bounds, ImageProvenance provenance) {
  const std::size_t pixels = static_cast<std::size_t>(slice.width) * slice.height;
  std::vector<std::uint8_t> rgb(pixels * 3);
  std::visit(
      [&](const auto& s) {
        if (slice.channels == 3) {
          for (std::size_t i = 0; i < pixels * 3; ++i) rgb[i] = map_sample(static_cast<double>(s[i]), bounds);
        } else {
          for (std::size_t i = 0; i < pixels; ++i) {
            const std::uint8_t g = map_sample(static_cast<double>(s[i]), bounds);
            rgb[3 * i] = g;
            rgb[3 * i + 1] = g;
            rgb[3 * i + 2] = g;
          }
        }
      },
      slice.pixels);
  provenance.slice_index = slice.index;
  return Image8(slice.width, slice.height, std::move(rgb), std::move(provenance));
}

ClipBounds clip_bounds_for(const Volume& volume, int slice_index, const AdaptConfig& cfg) {
  if (cfg.scope == AdaptScope::PerVolume) {
    return compute_clip_bounds(volume.samples(), cfg);
  }
  return compute_clip_bounds(slice_at(volume, slice_index).pixels, cfg);
}

Image8 adapt_volume_slice(const Volume& volume, int slice_index, const AdaptConfig& cfg) {
  const RawSlice slice = slice_at(volume, slice_index);
  return adapt_slice(slice, clip_bounds_for(volume, slice_index, cfg),
                     ImageProvenance{volume.source_path(), slice_index, cfg});
}

}  // namespace zenesis
