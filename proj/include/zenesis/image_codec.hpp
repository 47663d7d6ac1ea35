#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "zenesis/adapt.hpp"
#include "zenesis/geometry.hpp"
#include "zenesis/volume.hpp"

namespace zenesis {

/// 8-bit RGB PNG, as carried by the inference wire protocol and previews.
std::vector<std::uint8_t> encode_png(const Image8& image);

/// Decodes an 8-bit RGB PNG. Anything else is a Protocol error.
Image8 decode_png_rgb8(std::span<const std::uint8_t> bytes);

/// Decodes an 8/16-bit gray or RGB PNG as a depth-1 volume.
Volume decode_png_volume(std::span<const std::uint8_t> bytes, const std::string& source_path);

std::vector<std::uint8_t> encode_png_volume(const Volume& volume);

/// Multi-page bilevel TIFF, one page per mask.
void save_mask_stack(std::span<const Mask> masks, const std::filesystem::path& path);

/// Reads masks from a TIFF (any page count, 1/8/16-bit) or PNG; nonzero samples are foreground.
std::vector<Mask> load_mask_file(const std::filesystem::path& path);

/// A mask file, or a directory of .tif/.tiff/.png files paired in sorted filename order.
std::vector<Mask> load_mask_source(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace zenesis
