#include "tslab/pgm.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "tslab/errors.hpp"

namespace tslab {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderParser {
 public:
  explicit HeaderParser(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal field.
  std::uint64_t number(const char* what) {
    skip();
    const std::size_t start = pos_;
    field_start_ = start;
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 0xFFFFFFFFull) throw FormatError(std::string("PGM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size()) throw FormatError(std::string("truncated PGM header reading ") + what, pos_);
      throw FormatError(std::string("expected decimal ") + what + " in PGM header", pos_);
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  void end_of_header() {
    if (pos_ >= bytes_.size()) throw FormatError("truncated PGM header before raster", pos_);
    if (!is_space(bytes_[pos_])) throw FormatError("expected whitespace after PGM maxval", pos_);
    ++pos_;
  }

  std::size_t pos() const noexcept { return pos_; }
  /// Offset of the first digit of the most recent field.
  std::size_t field_start() const noexcept { return field_start_; }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 2;
  std::size_t field_start_ = 2;
};

}  // namespace

PixelGrid parse_pgm(std::span<const unsigned char> bytes) {
  if (bytes.size() < 2) throw FormatError("truncated PGM magic", 0);
  if (bytes[0] != 'P') throw FormatError("not a PNM file (bad magic)", 0);
  if (bytes[1] == '2') throw UnsupportedFormatError("unsupported format: ASCII PGM (P2); only binary P5 is supported", 0);
  if (bytes[1] != '5') throw UnsupportedFormatError("unsupported format: only binary PGM (P5) is supported", 0);

  HeaderParser header(bytes);
  const auto width = header.number("width");
  if (width == 0 || width > 1u << 20) throw FormatError("PGM width out of range", header.field_start());
  const auto height = header.number("height");
  if (height == 0 || height > 1u << 20) throw FormatError("PGM height out of range", header.field_start());
  const auto maxval = header.number("maxval");
  if (maxval != 255 && maxval != 65535)
    throw FormatError("PGM maxval must be 255 or 65535", header.field_start());
  header.end_of_header();

  const std::size_t bpp = maxval == 255 ? 1 : 2;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  const std::size_t start = header.pos();
  if (bytes.size() - start < count * bpp) throw FormatError("truncated PGM raster", bytes.size());

  std::vector<double> values(count);
  const double scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = start + i * bpp;
    const unsigned sample = bpp == 1 ? bytes[at] : (static_cast<unsigned>(bytes[at]) << 8) | bytes[at + 1];
    values[i] = sample / scale;
  }
  return PixelGrid(static_cast<int>(height), static_cast<int>(width), std::move(values));
}

PixelGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open PGM file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes);
}

std::vector<unsigned char> encode_pgm(const PixelGrid& grid, std::uint32_t maxval) {
  if (grid.empty()) throw ArgumentError("encode_pgm: empty image");
  if (maxval != 255 && maxval != 65535) throw ArgumentError("encode_pgm: maxval must be 255 or 65535");
  const std::string header = "P5\n" + std::to_string(grid.width()) + " " + std::to_string(grid.height()) +
                             "\n" + std::to_string(maxval) + "\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + grid.size() * (maxval == 255 ? 1 : 2));
  for (double v : grid.values()) {
    const auto q = static_cast<unsigned>(std::lround(v * maxval));
    if (maxval == 255) {
      out.push_back(static_cast<unsigned char>(q));
    } else {
      out.push_back(static_cast<unsigned char>(q >> 8));
      out.push_back(static_cast<unsigned char>(q & 0xFF));
    }
  }
  return out;
}

void write_pgm(const PixelGrid& grid, const std::filesystem::path& path, std::uint32_t maxval) {
  const auto bytes = encode_pgm(grid, maxval);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open PGM file for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("failed writing PGM file: " + path.string());
}

}  // namespace tslab
