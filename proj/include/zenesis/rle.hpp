#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "zenesis/geometry.hpp"

namespace zenesis {

/// Uncompressed run-length mask: alternating background/foreground run
/// lengths over the row-major pixel order, always starting with a (possibly
/// empty) background run. Serialized as {"size":[h,w],"counts":[...]}.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint64_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask rle_encode(const Mask& mask);

/// Throws Protocol when the runs do not cover exactly height x width pixels.
Mask rle_decode(const RleMask& rle);

void to_json(nlohmann::json& j, const RleMask& rle);
void from_json(const nlohmann::json& j, RleMask& rle);

}  // namespace zenesis
