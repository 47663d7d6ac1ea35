#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zenesis {

/// Standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Throws Protocol on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace zenesis
