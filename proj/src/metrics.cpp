#include "tslab/metrics.hpp"

#include <cmath>

#include "tslab/errors.hpp"

namespace tslab {

namespace {

void require_same_shape(const PixelGrid& x, const PixelGrid& y, const char* what) {
  if (!x.same_shape(y)) throw ArgumentError(std::string(what) + ": shape mismatch");
  if (x.empty()) throw ArgumentError(std::string(what) + ": empty image");
}

// Separable valid-mode filtering with a normalized 1D kernel.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& k) {
  const int r = static_cast<int>(k.size());
  const int oh = h - r + 1;
  const int ow = w - r + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < r; ++i) s += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < r; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double mse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ArgumentError("mse: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

double psnr(const PixelGrid& x, const PixelGrid& y, double max_i) {
  require_same_shape(x, y, "psnr");
  if (!(max_i > 0.0)) throw ArgumentError("psnr: max_i must be positive");
  const double e = mse(x.values(), y.values());
  if (e == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(max_i * max_i / e);
}

double ssim(const PixelGrid& x, const PixelGrid& y, const SsimOptions& o) {
  require_same_shape(x, y, "ssim");
  if (o.window < 1 || o.window % 2 == 0) throw ArgumentError("ssim: window must be odd and positive");
  if (x.height() < o.window || x.width() < o.window)
    throw ArgumentError("ssim: image smaller than window");
  std::vector<double> k(static_cast<std::size_t>(o.window));
  const int half = o.window / 2;
  double total = 0.0;
  for (int i = 0; i < o.window; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * o.window_sigma * o.window_sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;

  const int h = x.height();
  const int w = x.width();
  const std::vector<double> a(x.values().begin(), x.values().end());
  const std::vector<double> b(y.values().begin(), y.values().end());
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, k);
  const auto mu_b = filter_valid(b, h, w, k);
  const auto e_aa = filter_valid(aa, h, w, k);
  const auto e_bb = filter_valid(bb, h, w, k);
  const auto e_ab = filter_valid(ab, h, w, k);
  const double c1 = (o.k1 * o.max_i) * (o.k1 * o.max_i);
  const double c2 = (o.k2 * o.max_i) * (o.k2 * o.max_i);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

double mae(const PixelGrid& x, const PixelGrid& y) {
  require_same_shape(x, y, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x.values()[i] - y.values()[i]);
  return 255.0 * s / static_cast<double>(x.size());
}

MetricReport evaluate(const PixelGrid& x, const PixelGrid& reference) {
  MetricReport r;
  r.psnr = psnr(x, reference);
  r.ssim = (x.height() >= 11 && x.width() >= 11) ? ssim(x, reference) : std::nan("");
  r.mae = mae(x, reference);
  return r;
}

std::string to_string(Transferability t) {
  switch (t) {
    case Transferability::Transferable: return "transferable";
    case Transferability::NotTransferable: return "not-transferable";
    case Transferability::AttackFailed: return "attack-failed";
  }
  return "unknown";
}

Transferability transferability_check(const DenoiserModel& source, const DenoiserModel& target,
                                      const PixelGrid& clean, const PixelGrid& noisy,
                                      const PixelGrid& adv, double threshold) {
  require_same_shape(clean, noisy, "transferability_check");
  require_same_shape(clean, adv, "transferability_check");
  if (adv == noisy) return Transferability::NotTransferable;
  const double noisy_loss = mse(noisy.values(), clean.values());
  const auto loss = [&](const DenoiserModel& m, const PixelGrid& x) {
    return mse(forward(m, x).values(), clean.values());
  };
  const double src_benign = loss(source, noisy);
  const double tgt_benign = loss(target, noisy);
  const double src_adv = loss(source, adv);
  if (!(src_benign < noisy_loss) || !(src_adv - src_benign > threshold)) return Transferability::AttackFailed;
  if (!(tgt_benign < noisy_loss)) return Transferability::NotTransferable;
  const double tgt_adv = loss(target, adv);
  return tgt_adv - tgt_benign > threshold ? Transferability::Transferable : Transferability::NotTransferable;
}

}  // namespace tslab
