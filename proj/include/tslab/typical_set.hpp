#pragma once

// Closed-form typical-set quantities for i.i.d. N(0, sigma^2) noise and
// Monte Carlo checks of the concentration and perturbation bounds.
//
// Units: log densities are natural-log (nats). Entropies, typicality radii and
// the epsilon / B2 / Binf radii are in bits. The nats -> bits factor log2(e) is
// applied in exactly one place (`nats_to_bits`).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tslab/numerics.hpp"

namespace tslab {

struct TypicalSetSpec {
  std::size_t dim = 4096;
  double sigma = 25.0 / 255.0;
  double epsilon = 0.05;  ///< typicality tolerance, bits
  double delta = 0.05;    ///< target failure probability (reporting only)

  /// Throws ArgumentError unless n >= 1, sigma > 0, epsilon > 0, 0 < delta < 1.
  void validate() const;
};

enum class BoundKind { EpsilonBase, B2, Binf };

/// Perturbation budget norm; L2 or Linf.
using BudgetNorm = NormKind;

struct DeviationBound {
  BoundKind kind = BoundKind::EpsilonBase;
  double value = 0.0;  ///< bits
  double budget = 0.0; ///< eta; zero for the epsilon base
  BudgetNorm budget_norm = NormKind::L2;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

double nats_to_bits(double nats) noexcept;

/// ln f(x) for x ~ N(0, sigma^2 I_n).
double log_pdf(std::span<const double> x, double sigma);
double log_pdf(const NoiseField& x);

/// h(X) = log2(sqrt(2 pi e) sigma), bits.
double differential_entropy_bits(double sigma);

/// |-(1/n) log2 f(x) - h(X)|, bits. x is in A_eps iff this is <= eps.
double typicality_radius(std::span<const double> x, double sigma);
double typicality_radius(const NoiseField& x);

/// Squared-L2 interval (n sigma^2 (1 - 2 eps), n sigma^2 (1 + 2 eps)).
Interval l2_concentration_bounds(const TypicalSetSpec& spec);

/// L1 interval n sigma sqrt(2/pi) -/+ tol; tol is in L1 units.
Interval l1_concentration_bounds(const TypicalSetSpec& spec, double tol);

/// L2 perturbation radius: (eta^2 + 2 eta sqrt(n sigma^2 (1+2 eps))) / (2 n sigma^2)
/// converted to bits, plus eps.
DeviationBound b2_bound(const TypicalSetSpec& spec, double eta);

/// Linf perturbation radius: eta^2/(2 sigma^2) + sqrt(2/pi) eta/sigma converted to
/// bits, plus (1 + 1/(2 n sigma^2)) eps.
DeviationBound binf_bound(const TypicalSetSpec& spec, double eta);

/// log2 of the volume bounds of a typical set with radius r (bits):
/// hi = n (h + r), lo = log2(1 - r) + n (h - r); lo is -inf when r >= 1.
Interval log2_volume_bounds(double radius_bits, const TypicalSetSpec& spec);
Interval log2_volume_bounds(const DeviationBound& radius, const TypicalSetSpec& spec);

/// argmax of ||x + xi||_2^2 over ||xi||_inf <= eta: sign(x) * eta, sign(0) = +1.
std::vector<double> worst_case_linf_shift(std::span<const double> x, double eta);

/// Interval (nats) containing ln f(x + xi) - ln f(x) for ||xi|| <= eta.
/// For Linf, `l1_tol` is the additive L1 tolerance on ||x||_1; the L2 form ignores it.
Interval logpdf_shift_bounds(const TypicalSetSpec& spec, double eta, BudgetNorm norm,
                             double l1_tol = 0.0);

struct VerifierCheck {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double threshold = 0.0;  ///< maximum acceptable empirical rate

  double rate() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(trials);
  }
  bool passed() const noexcept { return rate() <= threshold; }
};

struct VerifierReport {
  TypicalSetSpec spec;
  double eta = 0.0;
  BudgetNorm budget_norm = NormKind::Linf;
  double l1_tol = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<VerifierCheck> checks;

  const VerifierCheck& check(const std::string& name) const;
  bool passed() const;
};

struct VerifierOptions {
  /// Relative L1 tolerance: the absolute L1 tolerance is rel_l1_tol * n * sigma.
  double rel_l1_tol = 0.05;
  /// Thresholds for the clean-sample checks (L2 interval, L1 interval, shift bounds).
  double clean_threshold = 1e-3;
  /// Threshold for membership of perturbed samples in A_B among samples whose
  /// clean counterpart lies in A_eps.
  double conditional_threshold = 1e-3;
  /// Random perturbations drawn per trial, in addition to the worst case.
  std::size_t random_perturbations = 1;
};

/// Draws `trials` noise fields (trial i uses rng.split(i)) and counts
///  l2_interval         ||x||^2 outside l2_concentration_bounds
///  l1_interval         ||x||_1 outside l1_concentration_bounds
///  shift_bounds        ln f(x+xi) - ln f(x) outside logpdf_shift_bounds
///  clean_typical       x outside A_eps (reported; threshold = exact chi-square tail + slack)
///  perturbed_typical   x+xi outside A_B (unconditional; same threshold as clean_typical)
///  perturbed_given_typical  x+xi outside A_B among trials with x in A_eps
/// over worst-case and random perturbations of size eta.
VerifierReport monte_carlo_verify(const TypicalSetSpec& spec, double eta, BudgetNorm norm,
                                  std::size_t trials, const SeededRng& rng,
                                  const VerifierOptions& options = {});

/// Exact P{x not in A_eps} from the chi-square(n) law of ||x||^2 / sigma^2.
double typical_set_miss_probability(const TypicalSetSpec& spec);

}  // namespace tslab
