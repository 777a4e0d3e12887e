#include "tslab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tslab/errors.hpp"

namespace tslab {

PixelGrid::PixelGrid(int height, int width) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) throw ArgumentError("PixelGrid: dimensions must be positive");
  values_.assign(static_cast<std::size_t>(height) * width, 0.0);
}

PixelGrid::PixelGrid(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height <= 0 || width <= 0) throw ArgumentError("PixelGrid: dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(height) * width)
    throw ArgumentError("PixelGrid: value count does not match height*width");
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ArgumentError("PixelGrid: value " + std::to_string(v) + " outside [0,1]");
  }
}

PixelGrid PixelGrid::clamped(int height, int width, std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) {
    if (std::isnan(v)) throw ArgumentError("PixelGrid: NaN value");
    v = std::clamp(v, 0.0, 1.0);
  }
  return PixelGrid(height, width, std::move(out));
}

PixelGrid PixelGrid::crop(int top, int left, int h, int w) const {
  if (h <= 0 || w <= 0 || top < 0 || left < 0 || top + h > height_ || left + w > width_)
    throw ArgumentError("PixelGrid::crop: region outside image bounds");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(h) * w);
  for (int y = top; y < top + h; ++y) {
    auto row = values_.begin() + static_cast<std::ptrdiff_t>(y) * width_ + left;
    out.insert(out.end(), row, row + w);
  }
  return PixelGrid(h, w, std::move(out));
}

NoiseField::NoiseField(double sigma, std::vector<double> values)
    : sigma_(sigma), values_(std::move(values)) {
  if (!(sigma > 0.0)) throw ArgumentError("NoiseField: sigma must be positive");
  if (values_.empty()) throw ArgumentError("NoiseField: dim must be positive");
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

SeededRng SeededRng::split(std::uint64_t index) const {
  return SeededRng(seed_, mix64(stream_ ^ mix64(index + 0x5851f42d4c957f2dULL)));
}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t SeededRng::below(std::size_t n) {
  if (n == 0) throw ArgumentError("SeededRng::below: empty range");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return static_cast<std::size_t>(r % n);
}

double SeededRng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0,1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

NoiseField gaussian_noise(std::size_t dim, double sigma, SeededRng& rng) {
  if (dim == 0) throw ArgumentError("gaussian_noise: dim must be positive");
  if (!(sigma > 0.0)) throw ArgumentError("gaussian_noise: sigma must be positive");
  std::vector<double> v(dim);
  for (double& x : v) x = sigma * rng.normal();
  return NoiseField(sigma, std::move(v));
}

double norm(std::span<const double> x, NormKind kind) {
  if (x.empty()) throw ArgumentError("norm: empty array");
  switch (kind) {
    case NormKind::L1: {
      double s = 0.0;
      for (double v : x) s += std::abs(v);
      return s;
    }
    case NormKind::L2: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return std::sqrt(s);
    }
    case NormKind::Linf: {
      double m = 0.0;
      for (double v : x) m = std::max(m, std::abs(v));
      return m;
    }
  }
  throw ArgumentError("norm: unknown kind");
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

SubspaceBasis gram_schmidt(const std::vector<std::vector<double>>& raw) {
  if (raw.empty() || raw.size() > 3)
    throw ArgumentError("gram_schmidt: expected between 1 and 3 vectors");
  const std::size_t dim = raw.front().size();
  if (dim == 0) throw ArgumentError("gram_schmidt: empty vectors");
  for (const auto& v : raw)
    if (v.size() != dim) throw ArgumentError("gram_schmidt: vectors differ in dimension");

  SubspaceBasis basis;
  basis.dim = dim;
  for (const auto& input : raw) {
    std::vector<double> w = input;
    const double scale = std::sqrt(dot(input, input));
    if (!(scale > 0.0)) throw DegeneracyError("gram_schmidt: zero input vector");
    // Two MGS sweeps ("twice is enough").
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& e : basis.vectors) {
        const double c = dot(w, e);
        for (std::size_t i = 0; i < dim; ++i) w[i] -= c * e[i];
      }
    }
    const double residual = std::sqrt(dot(w, w));
    if (residual < 1e-12 * scale)
      throw DegeneracyError("gram_schmidt: input vectors are linearly dependent");
    for (double& v : w) v /= residual;
    basis.vectors.push_back(std::move(w));
  }
  return basis;
}

}  // namespace tslab
