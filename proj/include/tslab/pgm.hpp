#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tslab/numerics.hpp"

namespace tslab {

/// Binary (P5) PGM with maxval 255 (one byte per pixel) or 65535 (two bytes,
/// big-endian). Header comments are accepted. P2 input raises
/// UnsupportedFormatError; malformed headers and short payloads raise
/// FormatError with the byte offset of the problem.
PixelGrid parse_pgm(std::span<const unsigned char> bytes);
PixelGrid read_pgm(const std::filesystem::path& path);

std::vector<unsigned char> encode_pgm(const PixelGrid& grid, std::uint32_t maxval = 65535);
void write_pgm(const PixelGrid& grid, const std::filesystem::path& path, std::uint32_t maxval = 65535);

}  // namespace tslab
