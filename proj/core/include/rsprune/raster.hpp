#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rsprune {

/// Decoded image: interleaved samples in the file's band order.
/// `max_value` is the full-scale sample value (255 for 8-bit, 65535 for 16-bit).
struct Raster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t bands = 0;
  std::uint32_t max_value = 255;
  std::vector<std::uint16_t> samples;

  std::size_t pixel_count() const noexcept { return std::size_t{width} * height; }
  std::span<const std::uint16_t> pixel(std::size_t i) const {
    return {samples.data() + i * bands, bands};
  }
};

Raster make_raster(std::uint32_t width, std::uint32_t height, std::uint32_t bands,
                   std::uint32_t max_value = 255);

/// Decodes PNG/TIFF/JPEG/PNM/... (8- or 16-bit integer samples). Colour images
/// are returned in RGB(A) order. Throws ErrorKind::format on failure.
Raster decode_raster(const std::filesystem::path& path);

/// Encodes a raster through the same codec stack (format chosen by extension).
void encode_raster(const Raster& raster, const std::filesystem::path& path);

}  // namespace rsprune
