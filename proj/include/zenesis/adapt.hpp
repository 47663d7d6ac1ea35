#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zenesis/geometry.hpp"
#include "zenesis/volume.hpp"

namespace zenesis {

enum class AdaptScope { PerSlice, PerVolume };

struct AdaptConfig {
  double clip_lo_percentile = 0.005;
  double clip_hi_percentile = 0.995;
  AdaptScope scope = AdaptScope::PerVolume;

  /// Throws InvalidArgument unless 0 <= lo < hi <= 1.
  void validate() const;

  friend bool operator==(const AdaptConfig&, const AdaptConfig&) = default;
};

struct ImageProvenance {
  std::string source_path;
  int slice_index = 0;
  AdaptConfig config;
};

/// Backend-ready slice: 8-bit, 3 interleaved channels.
class Image8 {
 public:
  Image8() = default;
  Image8(int width, int height, std::vector<std::uint8_t> rgb, ImageProvenance provenance = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<std::uint8_t>& rgb() const noexcept { return rgb_; }
  const ImageProvenance& provenance() const noexcept { return provenance_; }

  /// Channel mean, rounded half-up.
  std::uint8_t gray(int x, int y) const noexcept {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    const unsigned sum = unsigned{rgb_[i]} + rgb_[i + 1] + rgb_[i + 2];
    return static_cast<std::uint8_t>((sum + 1) / 3);
  }
  std::vector<std::uint8_t> grayscale() const;

  Image8 crop(const BBox& box) const;

  /// Nearest-neighbour resize used for previews.
  Image8 resize_nearest(int out_width, int out_height) const;

  friend bool operator==(const Image8& a, const Image8& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.rgb_ == b.rgb_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> rgb_;
  ImageProvenance provenance_;
};

/// Low/high clip values in native sample units.
struct ClipBounds {
  double low = 0.0;
  double high = 0.0;

  friend bool operator==(const ClipBounds&, const ClipBounds&) = default;
};

/// Percentile ranks over the sorted samples: low at floor(lo * (n-1)),
/// high at ceil(hi * (n-1)). Throws EmptyInput on no samples.
ClipBounds compute_clip_bounds(const SampleSpan& samples, const AdaptConfig& cfg);

/// v -> round_half_up(255 * clamp((v - low) / (high - low), 0, 1)); low == high maps to 0.
/// Gray is replicated to three channels.
Image8 adapt_slice(const RawSlice& slice, const ClipBounds& bounds, ImageProvenance provenance = {});

/// Bounds for a slice under cfg.scope (whole volume or the slice alone).
ClipBounds clip_bounds_for(const Volume& volume, int slice_index, const AdaptConfig& cfg);

Image8 adapt_volume_slice(const Volume& volume, int slice_index, const AdaptConfig& cfg);

}  // namespace zenesis
