#include "tslab/ts_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tslab/errors.hpp"
#include "tslab/typical_set.hpp"

namespace tslab {

NoiseField ts_sample(const NoiseField& s, const TsConfig& cfg, SeededRng& rng) {
  if (cfg.iterations < 0) throw ArgumentError("ts_sample: iterations must be >= 0");
  if (s.sigma() != cfg.sigma) throw ArgumentError("ts_sample: noise sigma differs from config");
  NoiseField best = s;
  double best_logf = log_pdf(s);
  for (int k = 0; k < cfg.iterations; ++k) {
    NoiseField candidate = gaussian_noise(s.dim(), cfg.sigma, rng);
    const double logf = log_pdf(candidate);
    if (best_logf > logf) {
      best = std::move(candidate);
      best_logf = logf;
    }
  }
  return best;
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Normal: return "normal";
    case StrategyKind::TsPres: return "ts-pres";
    case StrategyKind::TsDef: return "ts-def";
    case StrategyKind::Mixed: return "mixed";
  }
  return "unknown";
}

StrategyKind strategy_from_string(const std::string& name) {
  if (name == "normal") return StrategyKind::Normal;
  if (name == "ts-pres") return StrategyKind::TsPres;
  if (name == "ts-def") return StrategyKind::TsDef;
  if (name == "mixed") return StrategyKind::Mixed;
  throw ArgumentError("unknown noise strategy '" + name + "'");
}

NoiseStrategy::NoiseStrategy(StrategyKind kind, TsConfig ts, double sigma2)
    : kind_(kind), ts_(ts), sigma2_(sigma2) {
  if (!(ts_.sigma > 0.0)) throw ArgumentError("NoiseStrategy: sigma must be positive");
  if (ts_.iterations < 0) throw ArgumentError("NoiseStrategy: K must be >= 0");
  if (kind_ == StrategyKind::Mixed && !(sigma2_ > ts_.sigma))
    throw ArgumentError("NoiseStrategy: mixed strategy requires sigma2 > sigma");
}

NoiseStrategy NoiseStrategy::normal(double sigma) {
  return NoiseStrategy(StrategyKind::Normal, TsConfig{0, sigma});
}
NoiseStrategy NoiseStrategy::ts_pres(TsConfig ts) { return NoiseStrategy(StrategyKind::TsPres, ts); }
NoiseStrategy NoiseStrategy::ts_def(TsConfig ts) { return NoiseStrategy(StrategyKind::TsDef, ts); }
NoiseStrategy NoiseStrategy::mixed(double sigma, double sigma2) {
  return NoiseStrategy(StrategyKind::Mixed, TsConfig{0, sigma}, sigma2);
}

std::size_t NoiseStrategy::period() const noexcept {
  switch (kind_) {
    case StrategyKind::Normal: return 1;
    case StrategyKind::TsPres: return 3;
    case StrategyKind::TsDef: return 2;
    case StrategyKind::Mixed: return 2;
  }
  return 1;
}

bool NoiseStrategy::next_is_ts() const noexcept {
  const std::size_t phase = position_ % period();
  switch (kind_) {
    case StrategyKind::TsPres: return phase == 2;
    case StrategyKind::TsDef: return phase == 1;
    default: return false;
  }
}

double NoiseStrategy::next_sigma() const noexcept {
  if (kind_ == StrategyKind::Mixed && position_ % 2 == 1) return sigma2_;
  return ts_.sigma;
}

NoiseField NoiseStrategy::next_noise(std::size_t dim, SeededRng& rng) {
  const bool ts = next_is_ts();
  NoiseField field = gaussian_noise(dim, next_sigma(), rng);
  if (ts) field = ts_sample(field, ts_, rng);
  ++position_;
  return field;
}

DensityHistogram density_histogram(NoiseStrategy strategy, std::size_t dim, std::size_t draws,
                                   SeededRng& rng, std::size_t bin_count) {
  if (draws < 1) throw ArgumentError("density_histogram: draws must be >= 1");
  if (bin_count < 1) throw ArgumentError("density_histogram: bin_count must be >= 1");
  DensityHistogram hist;
  hist.entropy_bits = differential_entropy_bits(strategy.sigma());
  hist.statistics.reserve(draws);
  const double n = static_cast<double>(dim);
  for (std::size_t i = 0; i < draws; ++i) {
    const NoiseField x = strategy.next_noise(dim, rng);
    const double logf_nats = log_pdf(x.values(), strategy.sigma());
    hist.statistics.push_back(-nats_to_bits(logf_nats) / n);
  }
  double sum = 0.0;
  for (double v : hist.statistics) sum += v;
  hist.mean_statistic = sum / static_cast<double>(draws);

  const auto [lo_it, hi_it] = std::minmax_element(hist.statistics.begin(), hist.statistics.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (draws == 1 || hi == lo) {
    hist.bins.push_back({lo, draws});
    return hist;
  }
  const double width = (hi - lo) / static_cast<double>(bin_count);
  hist.bins.resize(bin_count);
  for (std::size_t b = 0; b < bin_count; ++b)
    hist.bins[b].center = lo + (static_cast<double>(b) + 0.5) * width;
  for (double v : hist.statistics) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    hist.bins[std::min(b, bin_count - 1)].count += 1;
  }
  return hist;
}

}  // namespace tslab
