#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "zenesis/geometry.hpp"

namespace zenesis {

enum class Provenance { Auto, AutoEmpty, Refined, Rectified, Further };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct CropOrigin {
  int x = 0;
  int y = 0;

  friend bool operator==(const CropOrigin&, const CropOrigin&) = default;
};

/// One segmentation result. Children produced by further segmentation live in
/// the crop frame of their parent's box; crop_origin is that box's top-left
/// corner in the parent frame.
struct SegmentationRecord {
  std::uint64_t record_id = 0;
  int slice_index = 0;
  std::string prompt;
  std::optional<BBox> box;
  std::optional<double> score;
  Mask mask;
  Provenance provenance = Provenance::Auto;
  std::optional<std::uint64_t> parent_id;
  std::optional<CropOrigin> crop_origin;
  std::optional<std::uint64_t> supersedes;

  friend bool operator==(const SegmentationRecord&, const SegmentationRecord&) = default;
};

void to_json(nlohmann::json& j, const BBox& box);
void from_json(const nlohmann::json& j, BBox& box);
void to_json(nlohmann::json& j, const SegmentationRecord& r);
void from_json(const nlohmann::json& j, SegmentationRecord& r);

}  // namespace zenesis
