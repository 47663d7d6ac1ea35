#pragma once

#include <array>
#include <cstdint>

#include "zenesis/adapt.hpp"
#include "zenesis/backend.hpp"
#include "zenesis/geometry.hpp"
#include "zenesis/record.hpp"

namespace zenesis {

struct Histogram256 {
  std::array<std::uint64_t, 256> counts{};

  std::uint64_t total() const noexcept;
};

/// Histogram of the grayscale projection.
Histogram256 gray_histogram(const Image8& image);

/// Gray level t maximizing the between-class variance of {<= t} vs {> t}.
/// Comparisons are exact; ties go to the smallest t. Throws EmptyHistogram.
int otsu_threshold(const Histogram256& histogram);

/// Pixels whose gray level exceeds the Otsu threshold.
/// Lowest gray level counted as foreground: t* + 1, or 256 (nothing) when
/// all samples share one bin and there is no second class to separate.
int otsu_foreground_level(const Histogram256& histogram);

Mask otsu_segment(const Image8& image);

/// Segmenter prompted with the whole frame and no grounding.
SegmentationRecord ungrounded_segment(SegBackend& backend, const Image8& image);

}  // namespace zenesis
