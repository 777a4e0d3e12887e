#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tslab/numerics.hpp"

namespace tslab {

struct TsConfig {
  int iterations = 10;  ///< K
  double sigma = 25.0 / 255.0;
};

/// Out-of-distribution typical-set screening: returns whichever of
/// {s, a_1, ..., a_K} (a_k fresh N(0, sigma^2 I) draws) has the lowest log density.
NoiseField ts_sample(const NoiseField& s, const TsConfig& cfg, SeededRng& rng);

enum class StrategyKind { Normal, TsPres, TsDef, Mixed };

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& name);

/// Training-time noise source. Cycles are deterministic:
///   normal  [G]            ts-pres [G, G, TS]
///   ts-def  [G, TS]        mixed   [G(sigma), G(sigma2)]
/// One instance per worker; next_noise advances the cycle position.
class NoiseStrategy {
 public:
  NoiseStrategy() = default;
  NoiseStrategy(StrategyKind kind, TsConfig ts, double sigma2 = 0.0);

  static NoiseStrategy normal(double sigma);
  static NoiseStrategy ts_pres(TsConfig ts);
  static NoiseStrategy ts_def(TsConfig ts);
  static NoiseStrategy mixed(double sigma, double sigma2);

  StrategyKind kind() const noexcept { return kind_; }
  const TsConfig& ts() const noexcept { return ts_; }
  double sigma() const noexcept { return ts_.sigma; }
  double sigma2() const noexcept { return sigma2_; }
  std::size_t position() const noexcept { return position_; }
  std::size_t period() const noexcept;

  /// True when the draw at the current position is a TS sample.
  bool next_is_ts() const noexcept;
  /// Noise level of the plain draw at the current position.
  double next_sigma() const noexcept;

  NoiseField next_noise(std::size_t dim, SeededRng& rng);

  void reset() noexcept { position_ = 0; }

 private:
  StrategyKind kind_ = StrategyKind::Normal;
  TsConfig ts_{};
  double sigma2_ = 0.0;
  std::size_t position_ = 0;
};

struct HistogramBin {
  double center = 0.0;
  std::size_t count = 0;
};

struct DensityHistogram {
  std::vector<HistogramBin> bins;
  double entropy_bits = 0.0;       ///< reference line h(X)
  double mean_statistic = 0.0;     ///< mean of -(1/n) log2 f over draws
  std::vector<double> statistics;  ///< per-draw -(1/n) log2 f, in draw order
};

/// Histogram of -(1/n) log2 f(x) over `draws` noise fields from `strategy`
/// (density evaluated at strategy.sigma()). Draws share one rng, consumed in order.
DensityHistogram density_histogram(NoiseStrategy strategy, std::size_t dim, std::size_t draws,
                                   SeededRng& rng, std::size_t bin_count = 40);

}  // namespace tslab
