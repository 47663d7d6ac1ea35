#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "zenesis/volume.hpp"

namespace zenesis::detail {

/// One decoded TIFF directory, contiguous-planar, rows packed without padding
/// beyond the per-row byte boundary. Multi-byte samples are in host order.
struct TiffPage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t samples_per_pixel = 1;
  std::uint16_t bits_per_sample = 1;
  std::uint16_t sample_format = 1;  // SAMPLEFORMAT_UINT
  std::uint16_t photometric = 1;    // PHOTOMETRIC_MINISBLACK
  std::vector<std::uint8_t> bytes;

  std::size_t row_bytes() const {
    return (std::size_t{width} * samples_per_pixel * bits_per_sample + 7) / 8;
  }
};

std::vector<TiffPage> read_tiff_pages(const std::filesystem::path& path);

void write_tiff_pages(const std::filesystem::path& path, std::span<const TiffPage> pages,
                      TiffCompression compression);

bool looks_like_tiff(std::span<const std::uint8_t> head);

}  // namespace zenesis::detail
