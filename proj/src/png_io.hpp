#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace zenesis::detail {

/// Decoded PNG: 1..4 interleaved channels, 8 or 16 bits, 16-bit samples in host order.
struct PngPixels {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

bool looks_like_png(std::span<const std::uint8_t> head);

PngPixels png_decode(std::span<const std::uint8_t> bytes);

/// channels must be 1 or 3; bit_depth 8 or 16.
std::vector<std::uint8_t> png_encode(const PngPixels& pixels);

}  // namespace zenesis::detail
