#include "zenesis/rle.hpp"

#include "zenesis/error.hpp"

namespace zenesis {

RleMask rle_encode(const Mask& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (const std::uint8_t bit : mask.bits()) {
    if (bit != current) {
      rle.counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

Mask rle_decode(const RleMask& rle) {
  if (rle.height < 0 || rle.width < 0) {
    throw Error(Errc::Protocol, "negative RLE size");
  }
  const std::uint64_t total = static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
  std::vector<std::uint8_t> bits;
  bits.reserve(total);
  std::uint8_t value = 0;
  for (const std::uint64_t run : rle.counts) {
    if (run > total - bits.size()) {
      throw Error(Errc::Protocol, "RLE runs exceed mask size");
    }
    bits.insert(bits.end(), run, value);
    value ^= 1;
  }
  if (bits.size() != total) {
    throw Error(Errc::Protocol, "RLE runs do not cover the mask");
  }
  return Mask(rle.width, rle.height, std::move(bits));
}

void to_json(nlohmann::json& j, const RleMask& rle) {
  j = nlohmann::json{{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

void from_json(const nlohmann::json& j, RleMask& rle) {
  try {
    const auto& size = j.at("size");
    if (!size.is_array() || size.size() != 2) {
      throw Error(Errc::Protocol, "RLE size must be [h, w]");
    }
    rle.height = size.at(0).get<int>();
    rle.width = size.at(1).get<int>();
    rle.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Protocol, std::string("malformed RLE: ") + e.what());
  }
}

}  // namespace zenesis
