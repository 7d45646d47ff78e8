#include "webrefine/png.hpp"

#include <zlib.h>

#include <array>
#include <stdexcept>
#include <string_view>

namespace webrefine::png {

namespace {

constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  return (std::uint32_t{in[at]} << 24) | (std::uint32_t{in[at + 1]} << 16) |
         (std::uint32_t{in[at + 2]} << 8) | std::uint32_t{in[at + 3]};
}

void put_chunk(Bytes& out, std::string_view type, std::span<const std::uint8_t> data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::size_t type_at = out.size();
  out.insert(out.end(), type.begin(), type.end());
  out.insert(out.end(), data.begin(), data.end());
  auto crc = crc32(0L, out.data() + type_at, static_cast<uInt>(out.size() - type_at));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

Bytes encode_rgb(std::uint32_t width, std::uint32_t height, std::span<const std::uint8_t> rgb) {
  if (width == 0 || height == 0 || rgb.size() != std::size_t{width} * height * 3) {
    throw std::invalid_argument("png: pixel buffer does not match dimensions");
  }
  // Filter type 0 (none) prefixes every scanline.
  Bytes raw;
  raw.reserve(rgb.size() + height);
  for (std::uint32_t y = 0; y < height; ++y) {
    raw.push_back(0);
    auto row = rgb.subspan(std::size_t{y} * width * 3, std::size_t{width} * 3);
    raw.insert(raw.end(), row.begin(), row.end());
  }
  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  Bytes compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw std::runtime_error("png: deflate failed");
  }
  compressed.resize(compressed_size);

  Bytes out(kSignature.begin(), kSignature.end());
  Bytes ihdr;
  put_u32(ihdr, width);
  put_u32(ihdr, height);
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // depth 8, truecolour, deflate, no filter, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", {});
  return out;
}

std::optional<Header> read_header(std::span<const std::uint8_t> png) {
  if (png.size() < 33) return std::nullopt;
  if (!std::equal(kSignature.begin(), kSignature.end(), png.begin())) return std::nullopt;
  if (get_u32(png, 8) != 13 || std::string_view(reinterpret_cast<const char*>(&png[12]), 4) != "IHDR") {
    return std::nullopt;
  }
  return Header{get_u32(png, 16), get_u32(png, 20)};
}

}  // namespace webrefine::png
