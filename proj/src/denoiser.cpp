#include "tslab/denoiser.hpp"

#include <algorithm>
#include <cmath>

#include "conv_engine.hpp"
#include "tslab/errors.hpp"

namespace tslab {

std::size_t DenoiserModel::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const auto& l : layers) total += l.weights.size() + l.bias.size();
  return total;
}

void DenoiserModel::validate() const {
  if (layers.size() < 2) throw ArgumentError("DenoiserModel: at least two layers required");
  if (layers.front().in_channels != 1) throw ArgumentError("DenoiserModel: first layer must take 1 channel");
  if (layers.back().out_channels != 1) throw ArgumentError("DenoiserModel: last layer must emit 1 channel");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in_channels <= 0 || l.out_channels <= 0)
      throw ArgumentError("DenoiserModel: channel counts must be positive");
    if (l.weights.size() != l.weight_count() || l.bias.size() != static_cast<std::size_t>(l.out_channels))
      throw ArgumentError("DenoiserModel: tensor size mismatch in layer " + std::to_string(i));
    if (i > 0 && layers[i - 1].out_channels != l.in_channels)
      throw ArgumentError("DenoiserModel: channel mismatch entering layer " + std::to_string(i));
  }
}

bool DenoiserModel::all_finite() const noexcept {
  for (const auto& l : layers) {
    for (double v : l.weights)
      if (!std::isfinite(v)) return false;
    for (double v : l.bias)
      if (!std::isfinite(v)) return false;
  }
  return true;
}

ModelGradient ModelGradient::zeros_like(const DenoiserModel& model) {
  ModelGradient g;
  g.layers.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    ConvLayer z;
    z.in_channels = l.in_channels;
    z.out_channels = l.out_channels;
    z.weights.assign(l.weights.size(), 0.0);
    z.bias.assign(l.bias.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

void ModelGradient::scale(double factor) {
  for (auto& l : layers) {
    for (double& v : l.weights) v *= factor;
    for (double& v : l.bias) v *= factor;
  }
}

DenoiserModel init_model(const ModelArch& arch, std::uint64_t seed) {
  if (arch.layers < 2) throw ArgumentError("init_model: layer count must be >= 2");
  if (arch.channels < 1) throw ArgumentError("init_model: channel width must be >= 1");
  SeededRng rng(seed, 0x1417);
  DenoiserModel model;
  model.seed = seed;
  for (int i = 0; i < arch.layers; ++i) {
    ConvLayer l;
    l.in_channels = i == 0 ? 1 : arch.channels;
    l.out_channels = i + 1 == arch.layers ? 1 : arch.channels;
    const double stddev = std::sqrt(2.0 / (9.0 * l.in_channels));
    l.weights.resize(l.weight_count());
    for (double& w : l.weights) w = stddev * rng.normal();
    l.bias.assign(static_cast<std::size_t>(l.out_channels), 0.0);
    model.layers.push_back(std::move(l));
  }
  return model;
}

namespace {

// Derivative of the clamp: 1 where the pre-clamp output is inside [0,1].
bool passes(double y) { return y >= 0.0 && y <= 1.0; }

void check_shape(std::span<const double> values, int height, int width, const char* what) {
  if (height <= 0 || width <= 0) throw ArgumentError(std::string(what) + ": empty image");
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw ArgumentError(std::string(what) + ": value count does not match shape");
}

}  // namespace

std::vector<double> predict_noise(const DenoiserModel& model, std::span<const double> input,
                                  int height, int width) {
  check_shape(input, height, width, "predict_noise");
  detail::ConvEngine engine(model, height, width, 1);
  engine.forward(input);
  auto p = engine.prediction();
  return {p.begin(), p.end()};
}

std::vector<double> forward_values(const DenoiserModel& model, std::span<const double> input,
                                   int height, int width) {
  std::vector<double> out = predict_noise(model, input, height, width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double pre = model.residual ? input[i] - out[i] : out[i];
    out[i] = std::clamp(pre, 0.0, 1.0);
  }
  return out;
}

PixelGrid forward(const DenoiserModel& model, const PixelGrid& noisy) {
  if (noisy.empty()) throw ArgumentError("forward: empty input");
  return PixelGrid(noisy.height(), noisy.width(),
                   forward_values(model, noisy.values(), noisy.height(), noisy.width()));
}

double mse_loss(const DenoiserModel& model, std::span<const double> input,
                std::span<const double> clean, int height, int width) {
  check_shape(clean, height, width, "mse_loss");
  const auto out = forward_values(model, input, height, width);
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += (out[i] - clean[i]) * (out[i] - clean[i]);
  return s / static_cast<double>(out.size());
}

namespace {

// Given engine.forward(input) has run: fills `dpred` with d(loss)/d(prediction)
// and `dresidual` with the direct d(loss)/d(input) through the residual path,
// where loss = sum over images of MSE / weight_denominator. Returns the summed MSE.
double output_gradient(const DenoiserModel& model, const detail::ConvEngine& engine,
                       std::span<const double> input, std::span<const double> clean,
                       double weight_denominator, std::vector<double>& dpred,
                       std::vector<double>& dresidual) {
  const auto pred = engine.prediction();
  const std::size_t hw = static_cast<std::size_t>(engine.height()) * engine.width();
  const double scale = 2.0 / (static_cast<double>(hw) * weight_denominator);
  dpred.assign(pred.size(), 0.0);
  dresidual.assign(pred.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double pre = model.residual ? input[i] - pred[i] : pred[i];
    const double out = std::clamp(pre, 0.0, 1.0);
    const double diff = out - clean[i];
    total += diff * diff;
    const double g = passes(pre) ? scale * diff : 0.0;
    if (model.residual) {
      dresidual[i] = g;
      dpred[i] = -g;
    } else {
      dpred[i] = g;
    }
  }
  return total / static_cast<double>(hw);
}

}  // namespace

namespace detail {

double batch_param_gradient(ConvEngine& engine, const DenoiserModel& model,
                            std::span<const TrainingPair> batch, ModelGradient& grad) {
  if (batch.empty()) throw ArgumentError("grad_wrt_params: empty batch");
  const int h = engine.height();
  const int w = engine.width();
  if (static_cast<int>(batch.size()) != engine.batch())
    throw ArgumentError("grad_wrt_params: batch size does not match engine");
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<double> input;
  std::vector<double> clean;
  input.reserve(batch.size() * hw);
  clean.reserve(batch.size() * hw);
  for (const auto& pair : batch) {
    if (pair.noisy.height() != h || pair.noisy.width() != w || !pair.clean.same_shape(pair.noisy))
      throw ArgumentError("grad_wrt_params: all pairs must share one shape");
    input.insert(input.end(), pair.noisy.values().begin(), pair.noisy.values().end());
    clean.insert(clean.end(), pair.clean.values().begin(), pair.clean.values().end());
  }
  engine.forward(input);
  std::vector<double> dpred;
  std::vector<double> dresidual;
  const double denom = static_cast<double>(batch.size());
  const double loss = output_gradient(model, engine, input, clean, denom, dpred, dresidual);
  engine.backward(dpred, &grad, {});
  return loss / denom;
}

}  // namespace detail

ModelGradient grad_wrt_params(const DenoiserModel& model, std::span<const TrainingPair> batch,
                              double* loss_out) {
  if (batch.empty()) throw ArgumentError("grad_wrt_params: empty batch");
  detail::ConvEngine engine(model, batch.front().noisy.height(), batch.front().noisy.width(),
                            static_cast<int>(batch.size()));
  ModelGradient grad = ModelGradient::zeros_like(model);
  const double loss = detail::batch_param_gradient(engine, model, batch, grad);
  if (loss_out != nullptr) *loss_out = loss;
  return grad;
}

std::vector<double> grad_wrt_input(const DenoiserModel& model, std::span<const double> x,
                                   std::span<const double> clean, int height, int width,
                                   double* loss_out) {
  check_shape(x, height, width, "grad_wrt_input");
  check_shape(clean, height, width, "grad_wrt_input");
  detail::ConvEngine engine(model, height, width, 1);
  engine.forward(x);
  std::vector<double> dpred;
  std::vector<double> dresidual;
  const double loss = output_gradient(model, engine, x, clean, 1.0, dpred, dresidual);
  std::vector<double> dx(x.size());
  engine.backward(dpred, nullptr, dx);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dresidual[i];
  if (loss_out != nullptr) *loss_out = loss;
  return dx;
}

PixelGrid add_noise(const PixelGrid& clean, const NoiseField& noise) {
  if (clean.size() != noise.dim()) throw ArgumentError("add_noise: dimension mismatch");
  std::vector<double> v(clean.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = clean.values()[i] + noise.values()[i];
  return PixelGrid::clamped(clean.height(), clean.width(), v);
}

}  // namespace tslab
