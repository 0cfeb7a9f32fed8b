#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fusebox/tta.hpp"

namespace fusebox {

// Any PNG colour type is decoded to 8-bit RGB. Throws ParseError on bad data.
RasterImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RasterImage& img);

// Throw IoError when the file cannot be read or written.
RasterImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& img);

}  // namespace fusebox
