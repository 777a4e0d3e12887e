#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tslab/attack.hpp"
#include "tslab/denoiser.hpp"
#include "tslab/numerics.hpp"

namespace tslab {

enum class ProbeKind { Radar2d, Sphere3d };

/// Degradation scores over an angular x radial (radar) or angular x elevation
/// (sphere) grid. score = PSNR(forward(origin)) - PSNR(forward(sample)), both
/// against the clean image, so positive means the sample hurts the model.
struct ProbeGrid {
  ProbeKind kind = ProbeKind::Radar2d;
  int ni = 0;
  int nj = 0;
  std::vector<double> theta;  ///< size ni
  std::vector<double> outer;  ///< size nj: gamma (radar) or phi (sphere)
  std::vector<double> scores;  ///< row-major [i][j]
  SubspaceBasis basis;
  std::string origin;

  double score(int i, int j) const { return scores[static_cast<std::size_t>(i) * nj + j]; }
};

/// theta_i = 2 pi i / ni; gamma_j = j / (nj - 1), so gamma spans [0, 1].
/// Samples s = (e1 cos theta + e2 sin theta) gamma ||v|| + n + u, with e1 along n
/// and e2 the part of v orthogonal to n.
ProbeGrid radar_probe(const DenoiserModel& model, const PixelGrid& u, const NoiseField& n,
                      std::span<const double> v, int ni = 72, int nj = 10);

/// theta_i = 2 pi i / ni; phi_j = -pi/2 + pi j / (nj - 1). Samples
/// s = (e1 cos phi cos theta + e2 cos phi sin theta + e3 sin phi) radius + n_k + u,
/// with (e1, e2, e3) from Gram-Schmidt on (n1, n2, v1).
ProbeGrid sphere_probe(const DenoiserModel& model, const PixelGrid& u, const NoiseField& nk,
                       std::span<const double> n1, std::span<const double> n2,
                       std::span<const double> v1, int ni, int nj, double radius);

/// sqrt(lambda) n1 + sqrt(1 - lambda) n2.
NoiseField blend_noises(const NoiseField& n1, const NoiseField& n2, double lambda);

/// u + sqrt(lambda)(a1 - u) + sqrt(1 - lambda)(a2 - u), clamped to [0,1].
PixelGrid blend_adversarials(const PixelGrid& u, const PixelGrid& a1, const PixelGrid& a2, double lambda);

/// Degradation score of one input relative to a reference input.
double degradation(const DenoiserModel& model, const PixelGrid& clean, const PixelGrid& reference,
                   const PixelGrid& sample);

struct Region {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool contains(int y, int x) const noexcept {
    return y >= top && y < top + height && x >= left && x < left + width;
  }
};

enum class PatchMethod { LocalCraft, CropGlobal };

std::string to_string(PatchMethod m);
PatchMethod patch_method_from_string(const std::string& name);

/// Adversarial image whose perturbation is confined to `region`.
/// local-craft attacks the cropped sub-image and splices it back;
/// crop-global attacks the whole image and keeps only the region.
/// Pixels outside the region equal `noisy` exactly.
PixelGrid patch_attack(const DenoiserModel& model, const PixelGrid& u, const PixelGrid& noisy,
                       const Region& region, PatchMethod method, const AttackConfig& cfg);

/// PSNR of x against u over the pixels inside (or outside) the region.
double region_psnr(const PixelGrid& x, const PixelGrid& u, const Region& region, bool inside);

/// CSV with header theta,gamma_or_phi,score.
void write_probe_csv(const ProbeGrid& grid, std::ostream& out);

}  // namespace tslab
