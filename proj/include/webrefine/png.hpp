#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "webrefine/core_model.hpp"

namespace webrefine::png {

/// Encodes 8-bit RGB pixels (row-major, 3 bytes per pixel) as a PNG.
Bytes encode_rgb(std::uint32_t width, std::uint32_t height, std::span<const std::uint8_t> rgb);

struct Header {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

/// Reads IHDR from a PNG byte stream; nullopt if the signature or header is bad.
std::optional<Header> read_header(std::span<const std::uint8_t> png);

}  // namespace webrefine::png
