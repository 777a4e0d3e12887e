#include "tslab/attack.hpp"

#include <algorithm>
#include <cmath>

#include "tslab/errors.hpp"

namespace tslab {

namespace {

constexpr std::uint64_t kAttackStream = 0xA77AC4;

void check_inputs(const PixelGrid& clean, const PixelGrid& noisy, const char* what) {
  if (clean.empty()) throw ArgumentError(std::string(what) + ": empty image");
  if (!clean.same_shape(noisy)) throw ArgumentError(std::string(what) + ": clean and noisy shapes differ");
}

void random_start(std::vector<double>& x, double eps, SeededRng& rng) {
  for (double& v : x) v += rng.uniform(-eps, eps);
}

void clamp_unit(std::vector<double>& x) {
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

void project_linf(std::vector<double>& x, std::span<const double> center, double eps) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], center[i] - eps, center[i] + eps);
}

void project_l2(std::vector<double>& x, std::span<const double> center, double radius) {
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - center[i]) * (x[i] - center[i]);
  const double len = std::sqrt(sq);
  if (len <= radius) return;
  const double s = radius / len;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = center[i] + s * (x[i] - center[i]);
}

PixelGrid finish(const PixelGrid& noisy, std::vector<double> x) {
  return PixelGrid::clamped(noisy.height(), noisy.width(), x);
}

}  // namespace

void AttackConfig::validate() const {
  if (budget_norm == NormKind::L1) throw ArgumentError("AttackConfig: budget norm must be Linf or L2");
  if (!(epsilon > 0.0)) throw ArgumentError("AttackConfig: epsilon must be positive");
  if (!(alpha > 0.0)) throw ArgumentError("AttackConfig: alpha must be positive");
  if (steps < 0) throw ArgumentError("AttackConfig: steps must be >= 0");
}

double attack_radius(const AttackConfig& cfg, std::size_t dim) {
  return cfg.budget_norm == NormKind::L2 ? cfg.epsilon * std::sqrt(static_cast<double>(dim)) : cfg.epsilon;
}

PixelGrid denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                        const AttackConfig& cfg, SeededRng& rng) {
  cfg.validate();
  if (cfg.budget_norm != NormKind::Linf) throw ArgumentError("denoising_pgd: budget norm must be Linf");
  check_inputs(clean, noisy, "denoising_pgd");
  const auto center = noisy.values();
  std::vector<double> x(center.begin(), center.end());
  if (cfg.random_init) {
    random_start(x, cfg.epsilon, rng);
    project_linf(x, center, cfg.epsilon);
    if (cfg.clamp_valid_range) clamp_unit(x);
  }
  for (int t = 0; t < cfg.steps; ++t) {
    const auto g = grad_wrt_input(model, x, clean.values(), clean.height(), clean.width());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += cfg.alpha * sign_of(g[i]);
    project_linf(x, center, cfg.epsilon);
    if (cfg.clamp_valid_range) clamp_unit(x);
  }
  return finish(noisy, std::move(x));
}

PixelGrid denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                        const AttackConfig& cfg) {
  SeededRng rng = attack_rng(cfg, 0);
  return denoising_pgd(model, clean, noisy, cfg, rng);
}

PixelGrid l2_denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                           const AttackConfig& cfg, SeededRng& rng) {
  cfg.validate();
  if (cfg.budget_norm != NormKind::L2) throw ArgumentError("l2_denoising_pgd: budget norm must be L2");
  check_inputs(clean, noisy, "l2_denoising_pgd");
  const auto center = noisy.values();
  const double root_n = std::sqrt(static_cast<double>(center.size()));
  const double radius = cfg.epsilon * root_n;
  const double step = cfg.alpha * root_n;
  std::vector<double> x(center.begin(), center.end());
  if (cfg.random_init) {
    random_start(x, cfg.epsilon, rng);
    project_l2(x, center, radius);
    if (cfg.clamp_valid_range) clamp_unit(x);
  }
  for (int t = 0; t < cfg.steps; ++t) {
    const auto g = grad_wrt_input(model, x, clean.values(), clean.height(), clean.width());
    const double len = norm(g, NormKind::L2);
    if (len > 0.0)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += step * g[i] / len;
    project_l2(x, center, radius);
    if (cfg.clamp_valid_range) clamp_unit(x);
  }
  return finish(noisy, std::move(x));
}

PixelGrid l2_denoising_pgd(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                           const AttackConfig& cfg) {
  SeededRng rng = attack_rng(cfg, 0);
  return l2_denoising_pgd(model, clean, noisy, cfg, rng);
}

PixelGrid run_attack(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& noisy,
                     const AttackConfig& cfg, SeededRng& rng) {
  switch (cfg.budget_norm) {
    case NormKind::Linf: return denoising_pgd(model, clean, noisy, cfg, rng);
    case NormKind::L2: return l2_denoising_pgd(model, clean, noisy, cfg, rng);
    case NormKind::L1: break;
  }
  throw ArgumentError("run_attack: budget norm must be Linf or L2");
}

SeededRng attack_rng(const AttackConfig& cfg, std::size_t index) {
  return SeededRng(cfg.seed, kAttackStream).split(index);
}

AttackSuiteResult attack_suite(const DenoiserModel& model, std::span<const AttackSample> dataset,
                               const AttackConfig& cfg) {
  if (dataset.empty()) throw ArgumentError("attack_suite: empty dataset");
  cfg.validate();
  std::vector<PixelGrid> adversarial;
  adversarial.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const AttackSample& sample = dataset[i];
    try {
      SeededRng rng = attack_rng(cfg, i);
      adversarial.push_back(run_attack(model, sample.clean, sample.noisy, cfg, rng));
    } catch (const ArgumentError& e) {
      throw ArgumentError("attack_suite: image '" + sample.id + "': " + e.what());
    }
  }
  return score_adversarials(model, dataset, adversarial, cfg.budget_norm);
}

AttackSuiteResult score_adversarials(const DenoiserModel& model, std::span<const AttackSample> dataset,
                                     std::span<const PixelGrid> adversarial, NormKind budget_norm) {
  if (dataset.empty()) throw ArgumentError("score_adversarials: empty dataset");
  if (adversarial.size() != dataset.size())
    throw ArgumentError("score_adversarials: one adversarial image per sample required");
  AttackSuiteResult result;
  result.rows.reserve(dataset.size());
  std::size_t degraded = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const AttackSample& sample = dataset[i];
    try {
      if (!adversarial[i].same_shape(sample.noisy)) throw ArgumentError("adversarial shape mismatch");
      AttackRow row;
      row.id = sample.id;
      row.adversarial = adversarial[i];
      const PixelGrid benign = forward(model, sample.noisy);
      const PixelGrid attacked = forward(model, row.adversarial);
      row.before = evaluate(benign, sample.clean);
      row.after = evaluate(attacked, sample.clean);
      std::vector<double> delta(sample.noisy.size());
      for (std::size_t k = 0; k < delta.size(); ++k)
        delta[k] = row.adversarial.values()[k] - sample.noisy.values()[k];
      row.perturbation = norm(delta, budget_norm);
      if (mse(attacked.values(), sample.clean.values()) > mse(benign.values(), sample.clean.values())) ++degraded;
      result.rows.push_back(std::move(row));
    } catch (const ArgumentError& e) {
      throw ArgumentError("score_adversarials: image '" + sample.id + "': " + e.what());
    }
  }
  AttackSummary& s = result.summary;
  const double count = static_cast<double>(result.rows.size());
  s.count = result.rows.size();
  for (const auto& row : result.rows) {
    s.psnr_before += row.before.psnr / count;
    s.psnr_after += row.after.psnr / count;
    s.psnr_drop += (row.before.psnr - row.after.psnr) / count;
    s.ssim_before += row.before.ssim / count;
    s.ssim_after += row.after.ssim / count;
    s.mae_before += row.before.mae / count;
    s.mae_after += row.after.mae / count;
  }
  s.degraded_fraction = static_cast<double>(degraded) / count;
  return result;
}

}  // namespace tslab
