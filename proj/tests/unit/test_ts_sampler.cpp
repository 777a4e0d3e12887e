#include <cmath>
#include <numbers>

#include "doctest.h"
#include "tslab/errors.hpp"
#include "tslab/ts_sampler.hpp"
#include "tslab/typical_set.hpp"

using namespace tslab;

namespace {

constexpr double kSigma = 25.0 / 255.0;

double normalized_sq(const NoiseField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return s / (static_cast<double>(f.dim()) * f.sigma() * f.sigma());
}

}  // namespace

TEST_CASE("K = 0 returns the input unchanged") {
  SeededRng rng(3);
  const NoiseField s = gaussian_noise(64, kSigma, rng);
  SeededRng other(4);
  CHECK(ts_sample(s, TsConfig{0, kSigma}, other) == s);
}

TEST_CASE("ts_sample never raises the log density") {
  SeededRng rng(5);
  for (int t = 0; t < 500; ++t) {
    const NoiseField s = gaussian_noise(256, kSigma, rng);
    const NoiseField r = ts_sample(s, TsConfig{static_cast<int>(t % 12), kSigma}, rng);
    REQUIRE(log_pdf(r) <= log_pdf(s));
    // Lower density under an isotropic Gaussian means a longer vector.
    REQUIRE(normalized_sq(r) >= normalized_sq(s));
  }
}

TEST_CASE("ts_sample selects the minimum-density candidate") {
  const TsConfig cfg{6, kSigma};
  SeededRng rng(21);
  const NoiseField s = gaussian_noise(128, kSigma, rng);
  SeededRng replay = rng;
  const NoiseField picked = ts_sample(s, cfg, rng);
  double lowest = log_pdf(s);
  NoiseField expected = s;
  for (int k = 0; k < cfg.iterations; ++k) {
    const NoiseField a = gaussian_noise(128, kSigma, replay);
    if (log_pdf(a) < lowest) {
      lowest = log_pdf(a);
      expected = a;
    }
  }
  CHECK(picked == expected);
}

TEST_CASE("K = 10 inflates the squared norm by the expected maximum of 11 draws") {
  // ||x||^2 / (n sigma^2) is approximately N(1, 2/n), and the screened draw is the
  // largest of 11, so the mean inflation is E[max of 11 N(0,1)] * sqrt(2/n).
  const int steps = 40000;
  const double lo = -10.0;
  const double h = 20.0 / steps;
  double expected_max = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double z = lo + i * h;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    const double f = z * 11.0 * pdf * std::pow(cdf, 10);
    expected_max += f * (i == 0 || i == steps ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  expected_max *= h / 3.0;
  CHECK(expected_max == doctest::Approx(1.5864).epsilon(1e-4));

  const std::size_t n = 4096;
  SeededRng rng(77);
  double total = 0.0;
  const int calls = 1000;
  for (int t = 0; t < calls; ++t) {
    const NoiseField s = gaussian_noise(n, kSigma, rng);
    total += normalized_sq(ts_sample(s, TsConfig{10, kSigma}, rng));
  }
  const double inflation = total / calls - 1.0;
  const double unit = std::sqrt(2.0 / n);
  CHECK(inflation / unit == doctest::Approx(expected_max).epsilon(0.05));
  CHECK(inflation > unit);
}

TEST_CASE("ts_sample rejects a sigma mismatch") {
  SeededRng rng(1);
  const NoiseField s = gaussian_noise(8, 0.2, rng);
  CHECK_THROWS_AS(ts_sample(s, TsConfig{3, 0.1}, rng), ArgumentError);
  CHECK_THROWS_AS(ts_sample(s, TsConfig{-1, 0.2}, rng), ArgumentError);
}

TEST_CASE("strategy cycles") {
  const TsConfig ts{10, kSigma};
  NoiseStrategy normal = NoiseStrategy::normal(kSigma);
  NoiseStrategy pres = NoiseStrategy::ts_pres(ts);
  NoiseStrategy def = NoiseStrategy::ts_def(ts);
  NoiseStrategy mixed = NoiseStrategy::mixed(kSigma, 26.0 / 255.0);
  SeededRng rng(2);
  for (int i = 0; i < 12; ++i) {
    CHECK_FALSE(normal.next_is_ts());
    CHECK(pres.next_is_ts() == (i % 3 == 2));
    CHECK(def.next_is_ts() == (i % 2 == 1));
    CHECK_FALSE(mixed.next_is_ts());
    CHECK(mixed.next_sigma() == (i % 2 == 1 ? 26.0 / 255.0 : kSigma));
    CHECK(pres.position() == static_cast<std::size_t>(i));
    normal.next_noise(4, rng);
    pres.next_noise(4, rng);
    def.next_noise(4, rng);
    mixed.next_noise(4, rng);
  }
  CHECK(pres.period() == 3);
  CHECK(def.period() == 2);
  pres.reset();
  CHECK(pres.position() == 0);
}

TEST_CASE("plain positions match a fresh Gaussian draw") {
  NoiseStrategy def = NoiseStrategy::ts_def(TsConfig{10, kSigma});
  SeededRng a(9);
  SeededRng b(9);
  CHECK(def.next_noise(32, a) == gaussian_noise(32, kSigma, b));
  NoiseStrategy normal = NoiseStrategy::normal(kSigma);
  for (int i = 0; i < 5; ++i) CHECK(normal.next_noise(32, a) == gaussian_noise(32, kSigma, b));
}

TEST_CASE("ts-def screened positions have lower density than fresh draws") {
  // Rank test: a screened draw is the minimum-density of 11 candidates, so it
  // beats an independent plain draw with probability 10/11 + 1/11 * 1/2.
  NoiseStrategy def = NoiseStrategy::ts_def(TsConfig{10, kSigma});
  SeededRng rng(44);
  SeededRng fresh(45);
  int lower = 0;
  const int cycles = 1000;
  for (int c = 0; c < cycles; ++c) {
    def.next_noise(256, rng);
    const NoiseField screened = def.next_noise(256, rng);
    if (log_pdf(screened) <= log_pdf(gaussian_noise(256, kSigma, fresh))) ++lower;
  }
  CHECK(lower / static_cast<double>(cycles) > 0.9);
}

TEST_CASE("mixed strategy draws the second level every other call") {
  NoiseStrategy mixed = NoiseStrategy::mixed(kSigma, 26.0 / 255.0);
  SeededRng rng(12);
  double sq_first = 0.0;
  double sq_second = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < 400; ++c) {
    for (double v : mixed.next_noise(1024, rng).values()) sq_first += v * v;
    for (double v : mixed.next_noise(1024, rng).values()) sq_second += v * v;
    count += 1024;
  }
  const double sd_first = std::sqrt(sq_first / count);
  const double sd_second = std::sqrt(sq_second / count);
  CHECK(std::abs(sd_second / (26.0 / 255.0) - 1.0) < 0.02);
  CHECK(std::abs(sd_first / kSigma - 1.0) < 0.02);
  CHECK(sd_second > sd_first);
}

TEST_CASE("strategy validation and names") {
  CHECK_THROWS_AS(NoiseStrategy::mixed(0.1, 0.1), ArgumentError);
  CHECK_THROWS_AS(NoiseStrategy::normal(0.0), ArgumentError);
  CHECK_THROWS_AS(NoiseStrategy::ts_def(TsConfig{-2, 0.1}), ArgumentError);
  for (auto k : {StrategyKind::Normal, StrategyKind::TsPres, StrategyKind::TsDef, StrategyKind::Mixed})
    CHECK(strategy_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(strategy_from_string("uniform"), ArgumentError);
}

TEST_CASE("density histogram") {
  const std::size_t n = 4096;
  SeededRng rng(8);
  const DensityHistogram normal = density_histogram(NoiseStrategy::normal(kSigma), n, 500, rng);
  CHECK(std::abs(normal.mean_statistic - normal.entropy_bits) < 0.05);
  std::size_t mass = 0;
  for (const auto& b : normal.bins) {
    if (std::abs(b.center - normal.entropy_bits) <= 0.05) mass += b.count;
  }
  CHECK(mass >= 495);
  const DensityHistogram def = density_histogram(NoiseStrategy::ts_def(TsConfig{10, kSigma}), n, 500, rng);
  CHECK(def.mean_statistic > normal.mean_statistic);
  std::size_t total = 0;
  for (const auto& b : def.bins) total += b.count;
  CHECK(total == 500);
  const DensityHistogram one = density_histogram(NoiseStrategy::normal(kSigma), n, 1, rng);
  CHECK(one.bins.size() == 1);
  CHECK(one.bins[0].count == 1);
  CHECK_THROWS_AS(density_histogram(NoiseStrategy::normal(kSigma), n, 0, rng), ArgumentError);
}
