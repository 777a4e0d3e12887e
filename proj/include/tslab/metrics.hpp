#pragma once

#include <limits>

#include "tslab/denoiser.hpp"
#include "tslab/numerics.hpp"

namespace tslab {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

struct MetricReport {
  double psnr = 0.0;  ///< dB; +inf when the images are identical
  double ssim = 0.0;
  double mae = 0.0;   ///< mean absolute difference on the 0-255 scale
};

/// 10 log10(max_i^2 / MSE); +inf when MSE is zero.
double psnr(const PixelGrid& x, const PixelGrid& y, double max_i = 1.0);

struct SsimOptions {
  int window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double max_i = 1.0;
};

/// Mean local SSIM over every position where the Gaussian window fits.
double ssim(const PixelGrid& x, const PixelGrid& y, const SsimOptions& options = {});

/// Mean |x - y| scaled by 255.
double mae(const PixelGrid& x, const PixelGrid& y);

MetricReport evaluate(const PixelGrid& x, const PixelGrid& reference);

double mse(std::span<const double> x, std::span<const double> y);

enum class Transferability { Transferable, NotTransferable, AttackFailed };

std::string to_string(Transferability t);

/// With L = MSE against clean: both models must improve on the noisy input,
/// and both must lose more than `threshold` on adv. AttackFailed when the
/// source model itself is not fooled by a genuinely perturbed adv; an adv
/// equal to noisy carries no perturbation and is NotTransferable.
Transferability transferability_check(const DenoiserModel& source, const DenoiserModel& target,
                                      const PixelGrid& clean, const PixelGrid& noisy,
                                      const PixelGrid& adv, double threshold = 0.0);

}  // namespace tslab
