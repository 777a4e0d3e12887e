#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace tslab {

/// Grayscale image with values in [0,1], stored row-major.
class PixelGrid {
 public:
  PixelGrid() = default;
  /// Zero-filled grid.
  PixelGrid(int height, int width);
  /// Validates shape and value range; throws ArgumentError on violation.
  PixelGrid(int height, int width, std::vector<double> values);

  /// Builds a grid from arbitrary reals, clamping each into [0,1].
  static PixelGrid clamped(int height, int width, std::span<const double> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> values() const noexcept { return values_; }

  /// Sub-image [top, top+h) x [left, left+w).
  PixelGrid crop(int top, int left, int h, int w) const;

  bool same_shape(const PixelGrid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// One realization of i.i.d. N(0, sigma^2) noise over `dim` coordinates.
class NoiseField {
 public:
  NoiseField() = default;
  NoiseField(double sigma, std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  double sigma() const noexcept { return sigma_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const NoiseField&, const NoiseField&) = default;

 private:
  double sigma_ = 1.0;
  std::vector<double> values_;
};

/// Seedable random stream. The engine is mt19937_64 keyed by (seed, stream)
/// through seed_seq, both of which the standard pins bit-for-bit. Uniform and
/// Gaussian transforms are implemented here rather than through <random>
/// distributions, whose output is implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream, e.g. one per Monte Carlo trial or per image.
  SeededRng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform on [0,1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Index uniform on [0, n).
  std::size_t below(std::size_t n);
  /// Standard normal via the Box-Muller transform (pairs cached).
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finalizer; used to derive stream identifiers.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Orthonormal vectors e_1..e_k (k <= 3) in R^dim.
struct SubspaceBasis {
  std::size_t dim = 0;
  std::vector<std::vector<double>> vectors;
};

enum class NormKind { L1, L2, Linf };

NoiseField gaussian_noise(std::size_t dim, double sigma, SeededRng& rng);

double norm(std::span<const double> x, NormKind kind);

double dot(std::span<const double> a, std::span<const double> b);

/// Modified Gram-Schmidt with one re-orthogonalization pass. The first output
/// is raw[0] normalized. Throws DegeneracyError when a residual falls below
/// 1e-12 relative to the input vector's norm.
SubspaceBasis gram_schmidt(const std::vector<std::vector<double>>& raw);

/// sign with the convention sign(0) = +1.
inline double sign_of(double v) noexcept { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace tslab
