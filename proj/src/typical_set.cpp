#include "tslab/typical_set.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "tslab/errors.hpp"

namespace tslab {

namespace {

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void require_eta(double eta) {
  if (!(eta > 0.0)) throw ArgumentError("perturbation budget eta must be positive");
}

}  // namespace

void TypicalSetSpec::validate() const {
  if (dim < 1) throw ArgumentError("TypicalSetSpec: dim must be >= 1");
  if (!(sigma > 0.0)) throw ArgumentError("TypicalSetSpec: sigma must be positive");
  if (!(epsilon > 0.0)) throw ArgumentError("TypicalSetSpec: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("TypicalSetSpec: delta must lie in (0,1)");
}

double nats_to_bits(double nats) noexcept { return nats * std::numbers::log2e; }

double log_pdf(std::span<const double> x, double sigma) {
  if (x.empty()) throw ArgumentError("log_pdf: empty field");
  if (!(sigma > 0.0)) throw ArgumentError("log_pdf: sigma must be positive");
  const double n = static_cast<double>(x.size());
  const double var = sigma * sigma;
  return -0.5 * n * std::log(2.0 * std::numbers::pi * var) - squared_norm(x) / (2.0 * var);
}

double log_pdf(const NoiseField& x) { return log_pdf(x.values(), x.sigma()); }

double differential_entropy_bits(double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("differential_entropy_bits: sigma must be positive");
  return std::log2(std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * sigma);
}

double typicality_radius(std::span<const double> x, double sigma) {
  if (x.empty()) throw ArgumentError("typicality_radius: empty field");
  const double n = static_cast<double>(x.size());
  // -(1/n) ln f(x) - h_nats(X) simplifies to ||x||^2 / (2 n sigma^2) - 1/2; the
  // simplified form avoids cancelling two large log terms at big n.
  const double deviation_nats = squared_norm(x) / (2.0 * n * sigma * sigma) - 0.5;
  return std::abs(nats_to_bits(deviation_nats));
}

double typicality_radius(const NoiseField& x) { return typicality_radius(x.values(), x.sigma()); }

Interval l2_concentration_bounds(const TypicalSetSpec& spec) {
  spec.validate();
  const double base = static_cast<double>(spec.dim) * spec.sigma * spec.sigma;
  return {base * (1.0 - 2.0 * spec.epsilon), base * (1.0 + 2.0 * spec.epsilon)};
}

Interval l1_concentration_bounds(const TypicalSetSpec& spec, double tol) {
  spec.validate();
  if (tol < 0.0) throw ArgumentError("l1_concentration_bounds: tolerance must be nonnegative");
  const double center = static_cast<double>(spec.dim) * spec.sigma * std::sqrt(kTwoOverPi);
  return {center - tol, center + tol};
}

DeviationBound b2_bound(const TypicalSetSpec& spec, double eta) {
  spec.validate();
  require_eta(eta);
  const double nvar = static_cast<double>(spec.dim) * spec.sigma * spec.sigma;
  const double shift_nats =
      (eta * eta + 2.0 * eta * std::sqrt(nvar * (1.0 + 2.0 * spec.epsilon))) / (2.0 * nvar);
  return {BoundKind::B2, nats_to_bits(shift_nats) + spec.epsilon, eta, NormKind::L2};
}

DeviationBound binf_bound(const TypicalSetSpec& spec, double eta) {
  spec.validate();
  require_eta(eta);
  const double var = spec.sigma * spec.sigma;
  const double n = static_cast<double>(spec.dim);
  const double shift_nats = eta * eta / (2.0 * var) + std::sqrt(kTwoOverPi) * eta / spec.sigma;
  const double value = nats_to_bits(shift_nats) + (1.0 + 1.0 / (2.0 * n * var)) * spec.epsilon;
  return {BoundKind::Binf, value, eta, NormKind::Linf};
}

Interval log2_volume_bounds(double radius_bits, const TypicalSetSpec& spec) {
  spec.validate();
  if (radius_bits < 0.0) throw ArgumentError("log2_volume_bounds: radius must be nonnegative");
  const double n = static_cast<double>(spec.dim);
  const double h = differential_entropy_bits(spec.sigma);
  const double hi = n * (h + radius_bits);
  const double lo = radius_bits >= 1.0 ? -std::numeric_limits<double>::infinity()
                                       : std::log2(1.0 - radius_bits) + n * (h - radius_bits);
  return {lo, hi};
}

Interval log2_volume_bounds(const DeviationBound& radius, const TypicalSetSpec& spec) {
  return log2_volume_bounds(radius.value, spec);
}

std::vector<double> worst_case_linf_shift(std::span<const double> x, double eta) {
  require_eta(eta);
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [eta](double v) { return sign_of(v) * eta; });
  return out;
}

Interval logpdf_shift_bounds(const TypicalSetSpec& spec, double eta, BudgetNorm norm,
                             double l1_tol) {
  spec.validate();
  require_eta(eta);
  const double var = spec.sigma * spec.sigma;
  const double n = static_cast<double>(spec.dim);
  double quad = 0.0;
  double cross = 0.0;
  switch (norm) {
    case NormKind::L2:
      quad = eta * eta;
      cross = 2.0 * eta * std::sqrt(n * var * (1.0 + 2.0 * spec.epsilon));
      break;
    case NormKind::Linf:
      quad = n * eta * eta;
      cross = 2.0 * eta * (n * spec.sigma * std::sqrt(kTwoOverPi) + l1_tol);
      break;
    case NormKind::L1:
      throw ArgumentError("logpdf_shift_bounds: budget norm must be L2 or Linf");
  }
  return {-(quad + cross) / (2.0 * var), -(quad - cross) / (2.0 * var)};
}

const VerifierCheck& VerifierReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw ArgumentError("VerifierReport: no check named " + name);
}

bool VerifierReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); });
}

double typical_set_miss_probability(const TypicalSetSpec& spec) {
  spec.validate();
  const double n = static_cast<double>(spec.dim);
  // radius <= eps  <=>  |Q/(2n) - 1/2| <= eps ln 2  with Q ~ chi^2(n).
  const double half_width = 2.0 * spec.epsilon * std::numbers::ln2;
  boost::math::chi_squared_distribution<double> chi2(n);
  const double lo = n * (1.0 - half_width);
  const double hi = n * (1.0 + half_width);
  const double below = lo > 0.0 ? boost::math::cdf(chi2, lo) : 0.0;
  return below + boost::math::cdf(boost::math::complement(chi2, hi));
}

VerifierReport monte_carlo_verify(const TypicalSetSpec& spec, double eta, BudgetNorm norm,
                                  std::size_t trials, const SeededRng& rng,
                                  const VerifierOptions& options) {
  spec.validate();
  require_eta(eta);
  if (trials < 1) throw ArgumentError("monte_carlo_verify: trials must be >= 1");
  if (norm != NormKind::L2 && norm != NormKind::Linf)
    throw ArgumentError("monte_carlo_verify: budget norm must be L2 or Linf");

  const std::size_t n = spec.dim;
  const double sigma = spec.sigma;
  const double l1_tol = options.rel_l1_tol * static_cast<double>(n) * sigma;
  const Interval l2 = l2_concentration_bounds(spec);
  const Interval l1 = l1_concentration_bounds(spec, l1_tol);
  const Interval shift = logpdf_shift_bounds(spec, eta, norm, l1_tol);
  const DeviationBound bound = norm == NormKind::L2 ? b2_bound(spec, eta) : binf_bound(spec, eta);

  // The clean-membership miss rate is a property of the chi-square law, not a
  // free parameter; allow four standard errors of Monte Carlo slack on top.
  const double miss = typical_set_miss_probability(spec);
  const double miss_threshold =
      miss + 4.0 * std::sqrt(miss * (1.0 - miss) / static_cast<double>(trials));

  VerifierCheck c_l2{"l2_interval", 0, 0, options.clean_threshold};
  VerifierCheck c_l1{"l1_interval", 0, 0, options.clean_threshold};
  VerifierCheck c_shift{"shift_bounds", 0, 0, options.clean_threshold};
  VerifierCheck c_clean{"clean_typical", 0, 0, miss_threshold};
  VerifierCheck c_pert{"perturbed_typical", 0, 0, miss_threshold};
  VerifierCheck c_cond{"perturbed_given_typical", 0, 0, options.conditional_threshold};

  std::vector<double> xi(n);
  std::vector<double> moved(n);
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng trial_rng = rng.split(t);
    const NoiseField x = gaussian_noise(n, sigma, trial_rng);
    const auto xv = x.values();
    const double sq = squared_norm(xv);
    const double l2n = std::sqrt(sq);
    const double l1n = tslab::norm(xv, NormKind::L1);
    const double base = log_pdf(xv, sigma);
    const bool clean_in = typicality_radius(xv, sigma) <= spec.epsilon;

    ++c_l2.trials;
    if (!l2.contains(sq)) ++c_l2.violations;
    ++c_l1.trials;
    if (!l1.contains(l1n)) ++c_l1.violations;
    ++c_clean.trials;
    if (!clean_in) ++c_clean.violations;

    auto evaluate = [&](std::span<const double> perturbation) {
      for (std::size_t i = 0; i < n; ++i) moved[i] = xv[i] + perturbation[i];
      ++c_shift.trials;
      if (!shift.contains(log_pdf(moved, sigma) - base)) ++c_shift.violations;
      const bool pert_in = typicality_radius(moved, sigma) <= bound.value;
      ++c_pert.trials;
      if (!pert_in) ++c_pert.violations;
      if (clean_in) {
        ++c_cond.trials;
        if (!pert_in) ++c_cond.violations;
      }
    };

    // Worst case (largest density drop) and its mirror (largest density gain).
    for (double direction : {1.0, -1.0}) {
      if (norm == NormKind::L2) {
        for (std::size_t i = 0; i < n; ++i) xi[i] = direction * eta * xv[i] / l2n;
      } else {
        for (std::size_t i = 0; i < n; ++i) xi[i] = direction * sign_of(xv[i]) * eta;
      }
      evaluate(xi);
    }
    for (std::size_t r = 0; r < options.random_perturbations; ++r) {
      if (norm == NormKind::L2) {
        for (double& v : xi) v = trial_rng.normal();
        const double s = eta / tslab::norm(xi, NormKind::L2);
        for (double& v : xi) v *= s;
      } else {
        for (double& v : xi) v = trial_rng.uniform(-eta, eta);
      }
      evaluate(xi);
    }
  }

  VerifierReport report;
  report.spec = spec;
  report.eta = eta;
  report.budget_norm = norm;
  report.l1_tol = l1_tol;
  report.trials = trials;
  report.seed = rng.seed();
  report.checks = {c_l2, c_l1, c_shift, c_clean, c_pert, c_cond};
  return report;
}

}  // namespace tslab
