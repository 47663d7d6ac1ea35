#include "zenesis/hitl.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <set>

#include "zenesis/error.hpp"

namespace zenesis {
namespace {

std::int64_t draw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
  // 2^64 mod range; values below it would bias the modulo.
  const std::uint64_t reject_below = (0 - range) % range;
  std::uint64_t v = rng();
  while (v < reject_below) v = rng();
  return lo + static_cast<std::int64_t>(v % range);
}

int min_side(int dim) { return std::max(1, (dim * 5 + 99) / 100); }

}  // namespace

CandidateSet propose_random_boxes(int width, int height, int count, std::uint64_t seed) {
  if (count < 1) {
    throw Error(Errc::InvalidArgument, "candidate count must be >= 1");
  }
  if (width < 1 || height < 1) {
    throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  const int min_w = min_side(width);
  const int min_h = min_side(height);
  CandidateSet set{{}, seed, count};
  set.boxes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    BBox b;
    switch (draw(rng, 0, 2)) {
      case 0: {
        const auto h = static_cast<int>(draw(rng, min_h, height));
        const auto y0 = static_cast<int>(draw(rng, 0, height - h));
        b = {0, y0, width, y0 + h};
        break;
      }
      case 1: {
        const auto w = static_cast<int>(draw(rng, min_w, width));
        const auto x0 = static_cast<int>(draw(rng, 0, width - w));
        b = {x0, 0, x0 + w, height};
        break;
      }
      default: {
        const auto w = static_cast<int>(draw(rng, min_w, width));
        const auto h = static_cast<int>(draw(rng, min_h, height));
        const auto x0 = static_cast<int>(draw(rng, 0, width - w));
        const auto y0 = static_cast<int>(draw(rng, 0, height - h));
        b = {x0, y0, x0 + w, y0 + h};
        break;
      }
    }
    set.boxes.push_back(b);
  }
  return set;
}

std::vector<Segment> segments_from_mask(const Mask& mask) {
  std::vector<Segment> out;
  std::uint64_t id = 0;
  for (const auto& comp : connected_components(mask)) {
    std::vector<std::uint8_t> bits(mask.pixel_count(), 0);
    for (const auto i : comp.pixels) bits[i] = 1;
    out.push_back(Segment{id++, Mask(mask.width(), mask.height(), std::move(bits))});
  }
  return out;
}

std::uint64_t select_nearest_segment(const BBox& candidate, std::span<const Segment> segments) {
  if (segments.empty()) {
    throw Error(Errc::EmptySegments, "no segments to choose from");
  }
  struct Scored {
    AreaRatio iou;
    std::size_t area;
    std::uint64_t id;
  };
  std::optional<Scored> best;
  for (const auto& seg : segments) {
    const auto box = seg.mask.bounding_box();
    const Scored s{box ? box_iou(candidate, *box) : AreaRatio{0, 1}, seg.mask.area(), seg.id};
    if (!best) {
      best = s;
      continue;
    }
    // Exact comparison of num/den fractions; den > 0 whenever candidate has area.
    const auto lhs = static_cast<__int128>(s.iou.num) * std::max<std::int64_t>(best->iou.den, 1);
    const auto rhs = static_cast<__int128>(best->iou.num) * std::max<std::int64_t>(s.iou.den, 1);
    const bool better = lhs > rhs || (lhs == rhs && (s.area < best->area || (s.area == best->area && s.id < best->id)));
    if (better) best = s;
  }
  return best->id;
}

CropOrigin slice_offset(const SegmentationRecord& child, const RecordLookup& lookup) {
  if (!child.crop_origin) {
    throw Error(Errc::NotAChild, "record " + std::to_string(child.record_id) + " is not a hierarchical child");
  }
  CropOrigin total{0, 0};
  std::set<std::uint64_t> visited;
  const SegmentationRecord* current = &child;
  while (current && current->crop_origin) {
    if (!visited.insert(current->record_id).second) {
      throw Error(Errc::UnknownRecord, "cycle in parent chain");
    }
    total.x += current->crop_origin->x;
    total.y += current->crop_origin->y;
    if (!current->parent_id) {
      throw Error(Errc::UnknownRecord, "child record without parent id");
    }
    const std::uint64_t parent = *current->parent_id;
    current = lookup(parent);
    if (!current) {
      throw Error(Errc::UnknownRecord, "parent record " + std::to_string(parent) + " not found");
    }
  }
  return total;
}

BBox to_slice_frame(const BBox& box, CropOrigin o) { return {box.x0 + o.x, box.y0 + o.y, box.x1 + o.x, box.y1 + o.y}; }
BBox from_slice_frame(const BBox& box, CropOrigin o) { return {box.x0 - o.x, box.y0 - o.y, box.x1 - o.x, box.y1 - o.y}; }
Point to_slice_frame(Point p, CropOrigin o) { return {p.x + o.x, p.y + o.y}; }
Point from_slice_frame(Point p, CropOrigin o) { return {p.x - o.x, p.y - o.y}; }

}  // namespace zenesis
