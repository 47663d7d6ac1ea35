#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "zenesis/geometry.hpp"
#include "zenesis/record.hpp"

namespace zenesis {

struct CandidateSet {
  std::vector<BBox> boxes;
  std::uint64_t seed = 0;
  int count = 8;
};

/// Random candidate boxes for rectification, a pure function of its arguments.
///
/// One std::mt19937_64 seeded with `seed` is consumed in this order per box:
/// orientation in {0: full width, 1: full height, 2: free}; then for full
/// width the band height and y0, for full height the band width and x0, and
/// for free boxes width, height, x0, y0. Sides are at least
/// max(1, ceil(5% of the dimension)). Integer draws use rejection sampling on
/// the raw 64-bit output, so the boxes are identical on every platform.
CandidateSet propose_random_boxes(int width, int height, int count, std::uint64_t seed);

struct Segment {
  std::uint64_t id = 0;
  Mask mask;
};

/// Connected components of a mask, one Segment each, ids in scan order.
std::vector<Segment> segments_from_mask(const Mask& mask);

/// The segment whose bounding box has the highest IoU with the candidate;
/// ties go to the smaller area, then the smaller id. Throws EmptySegments.
std::uint64_t select_nearest_segment(const BBox& candidate, std::span<const Segment> segments);

using RecordLookup = std::function<const SegmentationRecord*(std::uint64_t)>;

/// Offset of a child's frame within the full slice: the sum of crop origins
/// along its parent chain. Throws NotAChild for top-level records and
/// UnknownRecord for a broken chain.
CropOrigin slice_offset(const SegmentationRecord& child, const RecordLookup& lookup);

BBox to_slice_frame(const BBox& box, CropOrigin offset);
BBox from_slice_frame(const BBox& box, CropOrigin offset);

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};
Point to_slice_frame(Point p, CropOrigin offset);
Point from_slice_frame(Point p, CropOrigin offset);

}  // namespace zenesis
