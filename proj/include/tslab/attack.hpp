#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tslab/denoiser.hpp"
#include "tslab/metrics.hpp"
#include "tslab/numerics.hpp"

namespace tslab {

struct AttackConfig {
  NormKind budget_norm = NormKind::Linf;
  /// Linf: per-pixel bound. L2: per-pixel scale; the ball radius is epsilon * sqrt(n).
  double epsilon = 3.0 / 255.0;
  /// Linf: per-pixel step. L2: step length alpha * sqrt(n) along the unit gradient.
  double alpha = 2.0 / 255.0;
  int steps = 5;
  bool random_init = true;
  bool clamp_valid_range = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Denoising-PGD: sign-gradient ascent on MSE(forward(model, x), clean),
/// clipped to the Linf ball around `noisy` (then to [0,1] when enabled).
PixelGrid denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                        const AttackConfig& cfg, SeededRng& rng);
PixelGrid denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                        const AttackConfig& cfg);

/// Unit-gradient ascent projected onto the L2 ball of radius epsilon * sqrt(n).
PixelGrid l2_denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                           const AttackConfig& cfg, SeededRng& rng);
PixelGrid l2_denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                           const AttackConfig& cfg);

/// Dispatches on cfg.budget_norm (L1 is rejected).
PixelGrid run_attack(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                     const AttackConfig& cfg, SeededRng& rng);

/// Radius of the feasible set around the noisy image in the configured norm.
double attack_radius(const AttackConfig& cfg, std::size_t dim);

struct AttackSample {
  std::string id;
  PixelGrid clean;
  PixelGrid noisy;
};

struct AttackRow {
  std::string id;
  PixelGrid adversarial;
  MetricReport before;  ///< forward(model, noisy) against clean
  MetricReport after;   ///< forward(model, adversarial) against clean
  double perturbation = 0.0;  ///< distance to noisy in the budget norm
};

struct AttackSummary {
  std::size_t count = 0;
  double psnr_before = 0.0;
  double psnr_after = 0.0;
  double psnr_drop = 0.0;  ///< mean of per-image (before - after)
  double ssim_before = 0.0;
  double ssim_after = 0.0;
  double mae_before = 0.0;
  double mae_after = 0.0;
  double degraded_fraction = 0.0;  ///< images whose output MSE increased
};

struct AttackSuiteResult {
  std::vector<AttackRow> rows;
  AttackSummary summary;
};

/// Random stream used for the random init of image `index` in a suite.
SeededRng attack_rng(const AttackConfig& cfg, std::size_t index);

/// Attacks every sample; image i draws from attack_rng(cfg, i), so results do
/// not depend on evaluation order.
AttackSuiteResult attack_suite(const DenoiserModel& model, std::span<const AttackSample> dataset,
                               const AttackConfig& cfg);

/// Metrics of `model` on given adversarial images (e.g. crafted on another
/// model). adversarial[i] pairs with dataset[i].
AttackSuiteResult score_adversarials(const DenoiserModel& model, std::span<const AttackSample> dataset,
                                     std::span<const PixelGrid> adversarial, NormKind budget_norm);

}  // namespace tslab
