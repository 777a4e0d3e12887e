#include <algorithm>
#include <cmath>
#include <numbers>

#include "tslab/denoiser.hpp"
#include "tslab/errors.hpp"

namespace tslab {

namespace {

constexpr double kLow = 0.1;
constexpr double kHigh = 0.9;

PixelGrid synthetic_image(int height, int width, SeededRng& rng) {
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  std::vector<double> img(hw);

  // Smooth background: a tilted linear ramp plus a slow sinusoid.
  const double base = rng.uniform(0.3, 0.7);
  const double gy = rng.uniform(-0.3, 0.3);
  const double gx = rng.uniform(-0.3, 0.3);
  const double freq = rng.uniform(0.5, 2.0) * 2.0 * std::numbers::pi;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double amp = rng.uniform(0.0, 0.1);
  for (int y = 0; y < height; ++y) {
    const double fy = static_cast<double>(y) / height - 0.5;
    for (int x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x) / width - 0.5;
      img[static_cast<std::size_t>(y) * width + x] =
          base + gy * fy + gx * fx + amp * std::sin(freq * (fx + fy) + phase);
    }
  }

  // Piecewise-constant shapes painted over the background.
  const int shapes = 3 + static_cast<int>(rng.below(6));
  for (int s = 0; s < shapes; ++s) {
    const double level = rng.uniform(kLow, kHigh);
    const double cy = rng.uniform(0.0, height);
    const double cx = rng.uniform(0.0, width);
    const double ry = rng.uniform(0.05, 0.3) * height;
    const double rx = rng.uniform(0.05, 0.3) * width;
    const bool disc = rng.uniform() < 0.5;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dy = (y - cy) / ry;
        const double dx = (x - cx) / rx;
        const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) img[static_cast<std::size_t>(y) * width + x] = level;
      }
    }
  }

  // Low-amplitude texture: a few oriented stripes of small amplitude.
  const int waves = 1 + static_cast<int>(rng.below(3));
  for (int k = 0; k < waves; ++k) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double period = rng.uniform(3.0, 12.0);
    const double a = rng.uniform(0.01, 0.04);
    const double ca = std::cos(angle) * 2.0 * std::numbers::pi / period;
    const double sa = std::sin(angle) * 2.0 * std::numbers::pi / period;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img[static_cast<std::size_t>(y) * width + x] += a * std::sin(ca * x + sa * y);
  }

  for (double& v : img) v = std::clamp(v, kLow, kHigh);
  return PixelGrid(height, width, std::move(img));
}

}  // namespace

std::vector<PixelGrid> synthetic_corpus(std::size_t count, int height, int width,
                                        std::uint64_t seed) {
  if (height < 1 || width < 1) throw ArgumentError("synthetic_corpus: image dimensions must be positive");
  std::vector<PixelGrid> images;
  images.reserve(count);
  const SeededRng root(seed, 0xC0);
  for (std::size_t i = 0; i < count; ++i) {
    SeededRng rng = root.split(i);
    images.push_back(synthetic_image(height, width, rng));
  }
  return images;
}

}  // namespace tslab
