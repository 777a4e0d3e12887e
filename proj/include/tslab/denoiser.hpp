#pragma once

// Small residual convolutional denoiser (a shrunken DnCNN without batch norm)
// with hand-written forward and backward passes.
//
// Layers are 3x3 convolutions, stride 1, zero "same" padding, ReLU between
// layers and none after the last. The network predicts the noise; the model
// output is clamp(input - prediction, 0, 1).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tslab/numerics.hpp"
#include "tslab/ts_sampler.hpp"

namespace tslab {

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> weights;  ///< [out][in][3][3]
  std::vector<double> bias;     ///< [out]

  std::size_t weight_count() const noexcept {
    return static_cast<std::size_t>(out_channels) * in_channels * 9;
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct ModelArch {
  int layers = 5;
  int channels = 16;
};

struct DenoiserModel {
  std::vector<ConvLayer> layers;
  bool residual = true;
  double sigma_trained = 0.0;
  std::uint64_t seed = 0;

  std::size_t parameter_count() const noexcept;
  /// Throws ArgumentError if channel counts do not chain from 1 to 1 or a
  /// tensor has the wrong size.
  void validate() const;
  bool all_finite() const noexcept;

  friend bool operator==(const DenoiserModel&, const DenoiserModel&) = default;
};

/// Same layout as the model; holds d(loss)/d(parameter).
struct ModelGradient {
  std::vector<ConvLayer> layers;

  static ModelGradient zeros_like(const DenoiserModel& model);
  void scale(double factor);
};

/// He-normal weights (std sqrt(2 / (9 * in_channels))), zero bias.
DenoiserModel init_model(const ModelArch& arch, std::uint64_t seed);

/// Model output for one image.
PixelGrid forward(const DenoiserModel& model, const PixelGrid& noisy);

/// Forward on raw values (no range requirement); used by gradient checks.
std::vector<double> forward_values(const DenoiserModel& model, std::span<const double> input,
                                   int height, int width);

/// Network noise prediction (before the residual subtraction and clamp).
std::vector<double> predict_noise(const DenoiserModel& model, std::span<const double> input,
                                  int height, int width);

/// MSE between forward(model, x) and clean, averaged over pixels.
double mse_loss(const DenoiserModel& model, std::span<const double> input,
                std::span<const double> clean, int height, int width);

struct TrainingPair {
  PixelGrid noisy;
  PixelGrid clean;
};

/// Gradient of the batch-mean of per-image MSE with respect to the parameters.
/// All pairs must share one shape. Clamped output pixels pass zero gradient.
ModelGradient grad_wrt_params(const DenoiserModel& model, std::span<const TrainingPair> batch,
                              double* loss_out = nullptr);

/// Gradient of MSE(forward(model, x), clean) with respect to x, row-major in
/// the image shape.
std::vector<double> grad_wrt_input(const DenoiserModel& model, std::span<const double> x,
                                   std::span<const double> clean, int height, int width,
                                   double* loss_out = nullptr);

enum class OptimizerKind { SgdMomentum, Adam };

struct TrainConfig {
  NoiseStrategy strategy = NoiseStrategy::normal(25.0 / 255.0);
  ModelArch arch{};
  int patch_size = 40;
  int patch_stride = 20;
  int epochs = 10;
  /// Optimizer steps per epoch; 0 means one pass over the training patches.
  int steps_per_epoch = 0;
  int batch_size = 8;
  double learning_rate = 1e-3;
  /// Multiplier applied to the learning rate after every epoch.
  double lr_decay = 1.0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double momentum = 0.9;
  /// Patches withheld from training for per-epoch validation PSNR.
  int validation_patches = 16;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> loss;          ///< mean training loss per epoch
  std::vector<double> val_psnr;      ///< validation PSNR of the model output per epoch
  std::vector<std::size_t> steps;    ///< cumulative optimizer steps at epoch end
  double val_noisy_psnr = 0.0;       ///< PSNR of the noisy validation inputs
  double initial_loss = 0.0;         ///< loss of the first batch before any update

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainResult {
  DenoiserModel model;
  TrainHistory history;
};

/// Patch-based training. Deterministic for a fixed config and corpus. When
/// `initial` is given, training continues from its weights instead of a fresh
/// initialization (config.arch is then ignored).
TrainResult train(const TrainConfig& config, std::span<const PixelGrid> corpus,
                  const DenoiserModel* initial = nullptr);

/// Square patches of `size` taken every `stride` pixels (row-major order).
std::vector<PixelGrid> extract_patches(std::span<const PixelGrid> images, int size, int stride);

/// Seeded synthetic grayscale images: smooth gradients, piecewise-constant
/// rectangles and discs, and low-amplitude texture. Values stay in [0.1, 0.9].
std::vector<PixelGrid> synthetic_corpus(std::size_t count, int height, int width,
                                        std::uint64_t seed);

/// clamp(u + n, 0, 1).
PixelGrid add_noise(const PixelGrid& clean, const NoiseField& noise);

/// Little-endian binary format: "TSDN", u32 version, u32 residual flag,
/// f64 sigma_trained, u64 seed, u32 layer count, per-layer (u32 in, u32 out),
/// then per layer the f64 weights followed by the f64 biases.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const DenoiserModel& model, const std::filesystem::path& path);
DenoiserModel load_model(const std::filesystem::path& path);

std::vector<unsigned char> serialize_model(const DenoiserModel& model);
DenoiserModel deserialize_model(std::span<const unsigned char> bytes);

}  // namespace tslab
