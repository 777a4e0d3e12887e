#include "tslab/probe.hpp"

#include <cmath>
#include <numbers>

#include "tslab/csv.hpp"
#include "tslab/errors.hpp"
#include "tslab/metrics.hpp"

namespace tslab {

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

void check_grid(int ni, int nj) {
  if (ni < 1) throw ArgumentError("probe: angular sample count must be >= 1");
  if (nj < 2) throw ArgumentError("probe: radial sample count must be >= 2");
}

std::vector<double> angles(int ni) {
  std::vector<double> t(static_cast<std::size_t>(ni));
  for (int i = 0; i < ni; ++i) t[i] = 2.0 * std::numbers::pi * i / ni;
  return t;
}

}  // namespace

double degradation(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& reference,
                   const PixelGrid& sample) {
  if (reference == sample) return 0.0;
  return psnr(forward(model, reference), clean) - psnr(forward(model, sample), clean);
}

ProbeGrid radar_probe(const DenoiserModel& model, const PixelGrid& u, const NoiseField& n,
                      std::span<const double> v, int ni, int nj) {
  check_grid(ni, nj);
  if (u.size() != n.dim() || v.size() != n.dim()) throw ArgumentError("radar_probe: dimension mismatch");
  ProbeGrid grid;
  grid.kind = ProbeKind::Radar2d;
  grid.ni = ni;
  grid.nj = nj;
  grid.basis = gram_schmidt({to_vector(n.values()), to_vector(v)});
  grid.origin = "u+n";
  grid.theta = angles(ni);
  grid.outer.resize(static_cast<std::size_t>(nj));
  for (int j = 0; j < nj; ++j) grid.outer[j] = static_cast<double>(j) / (nj - 1);

  const PixelGrid origin = add_noise(u, n);
  const double base = psnr(forward(model, origin), u);
  const double vlen = norm(v, NormKind::L2);
  const auto& e1 = grid.basis.vectors[0];
  const auto& e2 = grid.basis.vectors[1];
  std::vector<double> s(u.size());
  grid.scores.assign(static_cast<std::size_t>(ni) * nj, 0.0);
  for (int i = 0; i < ni; ++i) {
    const double c = std::cos(grid.theta[i]);
    const double sn = std::sin(grid.theta[i]);
    for (int j = 1; j < nj; ++j) {
      const double r = grid.outer[j] * vlen;
      for (std::size_t k = 0; k < s.size(); ++k)
        s[k] = (e1[k] * c + e2[k] * sn) * r + n.values()[k] + u.values()[k];
      const PixelGrid sample = PixelGrid::clamped(u.height(), u.width(), s);
      grid.scores[static_cast<std::size_t>(i) * nj + j] = base - psnr(forward(model, sample), u);
    }
  }
  return grid;
}

ProbeGrid sphere_probe(const DenoiserModel& model, const PixelGrid& u, const NoiseField& nk,
                       std::span<const double> n1, std::span<const double> n2,
                       std::span<const double> v1, int ni, int nj, double radius) {
  check_grid(ni, nj);
  if (!(radius >= 0.0)) throw ArgumentError("sphere_probe: radius must be >= 0");
  const std::size_t dim = u.size();
  if (nk.dim() != dim || n1.size() != dim || n2.size() != dim || v1.size() != dim)
    throw ArgumentError("sphere_probe: dimension mismatch");
  ProbeGrid grid;
  grid.kind = ProbeKind::Sphere3d;
  grid.ni = ni;
  grid.nj = nj;
  grid.basis = gram_schmidt({to_vector(n1), to_vector(n2), to_vector(v1)});
  grid.origin = "u+n_k";
  grid.theta = angles(ni);
  grid.outer.resize(static_cast<std::size_t>(nj));
  for (int j = 0; j < nj; ++j) grid.outer[j] = -std::numbers::pi / 2.0 + std::numbers::pi * j / (nj - 1);

  const PixelGrid origin = add_noise(u, nk);
  const double base = psnr(forward(model, origin), u);
  const auto& e1 = grid.basis.vectors[0];
  const auto& e2 = grid.basis.vectors[1];
  const auto& e3 = grid.basis.vectors[2];
  grid.scores.assign(static_cast<std::size_t>(ni) * nj, 0.0);
  if (radius == 0.0) return grid;
  std::vector<double> s(dim);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      const double a = std::cos(grid.outer[j]) * std::cos(grid.theta[i]);
      const double b = std::cos(grid.outer[j]) * std::sin(grid.theta[i]);
      const double c = std::sin(grid.outer[j]);
      for (std::size_t k = 0; k < dim; ++k)
        s[k] = (e1[k] * a + e2[k] * b + e3[k] * c) * radius + nk.values()[k] + u.values()[k];
      const PixelGrid sample = PixelGrid::clamped(u.height(), u.width(), s);
      grid.scores[static_cast<std::size_t>(i) * nj + j] = base - psnr(forward(model, sample), u);
    }
  }
  return grid;
}

NoiseField blend_noises(const NoiseField& n1, const NoiseField& n2, double lambda) {
  if (n1.dim() != n2.dim()) throw ArgumentError("blend_noises: dimension mismatch");
  if (n1.sigma() != n2.sigma()) throw ArgumentError("blend_noises: sigma mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("blend_noises: lambda must lie in [0,1]");
  if (lambda == 1.0) return n1;
  if (lambda == 0.0) return n2;
  const double a = std::sqrt(lambda);
  const double b = std::sqrt(1.0 - lambda);
  std::vector<double> out(n1.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * n1.values()[i] + b * n2.values()[i];
  return NoiseField(n1.sigma(), std::move(out));
}

PixelGrid blend_adversarials(const PixelGrid& u, const PixelGrid& a1, const PixelGrid& a2, double lambda) {
  if (!u.same_shape(a1) || !u.same_shape(a2)) throw ArgumentError("blend_adversarials: shape mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("blend_adversarials: lambda must lie in [0,1]");
  if (lambda == 1.0) return a1;
  if (lambda == 0.0) return a2;
  const double a = std::sqrt(lambda);
  const double b = std::sqrt(1.0 - lambda);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double base = u.values()[i];
    out[i] = base + a * (a1.values()[i] - base) + b * (a2.values()[i] - base);
  }
  return PixelGrid::clamped(u.height(), u.width(), out);
}

std::string to_string(PatchMethod m) {
  return m == PatchMethod::LocalCraft ? "local-craft" : "crop-global";
}

PatchMethod patch_method_from_string(const std::string& name) {
  if (name == "local-craft") return PatchMethod::LocalCraft;
  if (name == "crop-global") return PatchMethod::CropGlobal;
  throw ArgumentError("unknown patch method '" + name + "' (expected local-craft or crop-global)");
}

PixelGrid patch_attack(const DenoiserModel& model, const PixelGrid& u, const PixelGrid& noisy,
                       const Region& region, PatchMethod method, const AttackConfig& cfg) {
  if (!u.same_shape(noisy)) throw ArgumentError("patch_attack: shape mismatch");
  if (region.height <= 0 || region.width <= 0) throw ArgumentError("patch_attack: empty region");
  if (region.top < 0 || region.left < 0 || region.top + region.height > u.height() ||
      region.left + region.width > u.width())
    throw ArgumentError("patch_attack: region outside image bounds");

  SeededRng rng = attack_rng(cfg, 0);
  std::vector<double> out(noisy.values().begin(), noisy.values().end());
  const int w = u.width();
  if (method == PatchMethod::LocalCraft) {
    const PixelGrid sub_u = u.crop(region.top, region.left, region.height, region.width);
    const PixelGrid sub_n = noisy.crop(region.top, region.left, region.height, region.width);
    const PixelGrid adv = run_attack(model, sub_u, sub_n, cfg, rng);
    for (int y = 0; y < region.height; ++y)
      for (int x = 0; x < region.width; ++x)
        out[static_cast<std::size_t>(region.top + y) * w + region.left + x] = adv.at(y, x);
  } else {
    const PixelGrid adv = run_attack(model, u, noisy, cfg, rng);
    for (int y = region.top; y < region.top + region.height; ++y)
      for (int x = region.left; x < region.left + region.width; ++x)
        out[static_cast<std::size_t>(y) * w + x] = adv.at(y, x);
  }
  return PixelGrid(u.height(), u.width(), std::move(out));
}

double region_psnr(const PixelGrid& x, const PixelGrid& u, const Region& region, bool inside) {
  if (!x.same_shape(u)) throw ArgumentError("region_psnr: shape mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < u.height(); ++y)
    for (int xx = 0; xx < u.width(); ++xx) {
      if (region.contains(y, xx) != inside) continue;
      const double d = x.at(y, xx) - u.at(y, xx);
      sum += d * d;
      ++count;
    }
  if (count == 0) throw ArgumentError("region_psnr: no pixels selected");
  if (sum == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(static_cast<double>(count) / sum);
}

void write_probe_csv(const ProbeGrid& grid, std::ostream& out) {
  CsvWriter csv(out);
  csv.header({"theta", "gamma_or_phi", "score"});
  for (int i = 0; i < grid.ni; ++i)
    for (int j = 0; j < grid.nj; ++j) csv.row(grid.theta[i], grid.outer[j], grid.score(i, j));
}

}  // namespace tslab
