#pragma once

// Batched forward/backward evaluation of a DenoiserModel. Internal to the
// library; the public surface is in tslab/denoiser.hpp.

#include <span>
#include <vector>

#include "tslab/denoiser.hpp"

namespace tslab::detail {

/// Activations are stored channel-major: channel c of image b at pixel p lives
/// at [c][b * hw + p]. Convolutions run as im2col + GEMM over the whole batch.
class ConvEngine {
 public:
  ConvEngine(const DenoiserModel& model, int height, int width, int batch);

  /// `input` holds `batch` images back to back. Keeps every intermediate
  /// needed by backward().
  void forward(std::span<const double> input);

  /// Network output (predicted noise), batch * hw values.
  std::span<const double> prediction() const noexcept { return pre_.back(); }

  /// Backpropagates d(loss)/d(prediction). Adds parameter gradients into
  /// `grad` when non-null; writes the input gradient into `dinput` when non-empty.
  void backward(std::span<const double> dpred, ModelGradient* grad, std::span<double> dinput);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int batch() const noexcept { return batch_; }

 private:
  void im2col(const std::vector<double>& act, int channels, std::vector<double>& cols) const;
  void col2im(const std::vector<double>& cols, int channels, std::vector<double>& act) const;

  const DenoiserModel& model_;
  int height_;
  int width_;
  int batch_;
  std::size_t columns_;  // batch * height * width

  std::vector<std::vector<double>> inputs_;  // per layer, post-activation input
  std::vector<std::vector<double>> cols_;    // per layer im2col buffer
  std::vector<std::vector<double>> pre_;     // per layer pre-activation output
  std::vector<double> dcols_;
  std::vector<double> dact_;
  std::vector<double> dpre_;
};

/// Runs forward/backward for one batch on an existing engine and adds the
/// parameter gradient of the batch-mean MSE into `grad`. Returns that loss.
double batch_param_gradient(ConvEngine& engine, const DenoiserModel& model,
                            std::span<const TrainingPair> batch, ModelGradient& grad);

}  // namespace tslab::detail
