#include <algorithm>
#include <cmath>
#include <numeric>

#include "conv_engine.hpp"
#include "tslab/denoiser.hpp"
#include "tslab/errors.hpp"
#include "tslab/metrics.hpp"

namespace tslab {

void TrainConfig::validate() const {
  if (patch_size < 8) throw ArgumentError("TrainConfig: patch_size must be >= 8");
  if (patch_stride < 1) throw ArgumentError("TrainConfig: patch_stride must be >= 1");
  if (epochs < 1) throw ArgumentError("TrainConfig: epochs must be >= 1");
  if (steps_per_epoch < 0) throw ArgumentError("TrainConfig: steps_per_epoch must be >= 0");
  if (batch_size < 1) throw ArgumentError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("TrainConfig: learning_rate must be positive");
  if (!(lr_decay > 0.0)) throw ArgumentError("TrainConfig: lr_decay must be positive");
  if (validation_patches < 0) throw ArgumentError("TrainConfig: validation_patches must be >= 0");
  if (arch.layers < 2 || arch.channels < 1) throw ArgumentError("TrainConfig: invalid architecture");
}

std::vector<PixelGrid> extract_patches(std::span<const PixelGrid> images, int size, int stride) {
  if (size < 1 || stride < 1) throw ArgumentError("extract_patches: size and stride must be positive");
  std::vector<PixelGrid> patches;
  for (const auto& image : images) {
    for (int top = 0; top + size <= image.height(); top += stride)
      for (int left = 0; left + size <= image.width(); left += stride)
        patches.push_back(image.crop(top, left, size, size));
  }
  return patches;
}

namespace {

// Flat views over the parameters for the optimizer update.
template <typename Fn>
void for_each_parameter(DenoiserModel& model, const ModelGradient& grad, Fn&& fn) {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    const auto& g = grad.layers[l];
    for (std::size_t i = 0; i < layer.weights.size(); ++i) fn(offset++, layer.weights[i], g.weights[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i) fn(offset++, layer.bias[i], g.bias[i]);
  }
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t parameters)
      : kind_(cfg.optimizer), momentum_(cfg.momentum), first_(parameters, 0.0),
        second_(cfg.optimizer == OptimizerKind::Adam ? parameters : 0, 0.0) {}

  void step(DenoiserModel& model, const ModelGradient& grad, double lr) {
    ++t_;
    if (kind_ == OptimizerKind::SgdMomentum) {
      for_each_parameter(model, grad, [&](std::size_t i, double& p, double g) {
        first_[i] = momentum_ * first_[i] + g;
        p -= lr * first_[i];
      });
      return;
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for_each_parameter(model, grad, [&](std::size_t i, double& p, double g) {
      first_[i] = beta1 * first_[i] + (1.0 - beta1) * g;
      second_[i] = beta2 * second_[i] + (1.0 - beta2) * g * g;
      p -= lr * (first_[i] / c1) / (std::sqrt(second_[i] / c2) + eps);
    });
  }

 private:
  OptimizerKind kind_;
  double momentum_;
  std::vector<double> first_;
  std::vector<double> second_;
  std::size_t t_ = 0;
};

void shuffle(std::vector<std::size_t>& order, SeededRng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

double mean_psnr(const DenoiserModel& model, std::span<const TrainingPair> pairs) {
  double total = 0.0;
  for (const auto& p : pairs) total += psnr(forward(model, p.noisy), p.clean);
  return total / static_cast<double>(pairs.size());
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const PixelGrid> corpus,
                  const DenoiserModel* initial) {
  config.validate();
  if (corpus.empty()) throw ArgumentError("train: empty corpus");

  SeededRng split_rng(config.seed, 2);
  SeededRng batch_rng(config.seed, 3);
  SeededRng noise_rng(config.seed, 4);
  SeededRng val_rng(config.seed, 5);

  std::vector<PixelGrid> patches = extract_patches(corpus, config.patch_size, config.patch_stride);
  if (patches.empty()) throw ArgumentError("train: corpus images are smaller than patch_size");

  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, split_rng);
  const std::size_t held_out =
      std::min<std::size_t>(static_cast<std::size_t>(config.validation_patches), patches.size() - 1);
  std::vector<TrainingPair> validation;
  for (std::size_t i = 0; i < held_out; ++i) {
    const PixelGrid& clean = patches[order[i]];
    const auto noise = gaussian_noise(clean.size(), config.strategy.sigma(), val_rng);
    validation.push_back({add_noise(clean, noise), clean});
  }
  std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(held_out), order.end());

  TrainResult result;
  if (initial != nullptr) {
    initial->validate();
    result.model = *initial;
    result.model.seed = config.seed;
  } else {
    result.model = init_model(config.arch, config.seed);
  }
  result.model.sigma_trained = config.strategy.sigma();
  DenoiserModel& model = result.model;
  TrainHistory& history = result.history;
  if (!validation.empty()) {
    double total = 0.0;
    for (const auto& p : validation) total += psnr(p.noisy, p.clean);
    history.val_noisy_psnr = total / static_cast<double>(validation.size());
  }

  NoiseStrategy strategy = config.strategy;
  strategy.reset();
  Optimizer optimizer(config, model.parameter_count());
  const std::size_t batch_size = std::min<std::size_t>(config.batch_size, pool.size());
  const std::size_t steps_per_epoch =
      config.steps_per_epoch > 0 ? static_cast<std::size_t>(config.steps_per_epoch)
                                 : (pool.size() + batch_size - 1) / batch_size;
  const int p = config.patch_size;
  const std::size_t dim = static_cast<std::size_t>(p) * p;

  shuffle(pool, batch_rng);
  std::size_t cursor = 0;
  std::size_t total_steps = 0;
  double lr = config.learning_rate;
  std::vector<TrainingPair> batch;
  batch.reserve(batch_size);
  detail::ConvEngine engine(model, p, p, static_cast<int>(batch_size));
  ModelGradient grad = ModelGradient::zeros_like(model);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      batch.clear();
      for (std::size_t b = 0; b < batch_size; ++b) {
        if (cursor == pool.size()) {
          shuffle(pool, batch_rng);
          cursor = 0;
        }
        const PixelGrid& clean = patches[pool[cursor++]];
        const NoiseField noise = strategy.next_noise(dim, noise_rng);
        batch.push_back({add_noise(clean, noise), clean});
      }
      grad.scale(0.0);
      const double loss = detail::batch_param_gradient(engine, model, batch, grad);
      if (total_steps == 0) history.initial_loss = loss;
      epoch_loss += loss;
      optimizer.step(model, grad, lr);
      ++total_steps;
      if (!model.all_finite())
        throw std::runtime_error("train: non-finite weights after step " + std::to_string(total_steps));
    }
    history.loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
    history.steps.push_back(total_steps);
    history.val_psnr.push_back(validation.empty() ? 0.0 : mean_psnr(model, validation));
    lr *= config.lr_decay;
  }
  return result;
}

}  // namespace tslab
