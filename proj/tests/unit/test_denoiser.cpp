#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tslab/denoiser.hpp"
#include "tslab/errors.hpp"

using namespace tslab;

namespace {

PixelGrid random_grid(int h, int w, double lo, double hi, SeededRng& rng) {
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (double& x : v) x = rng.uniform(lo, hi);
  return PixelGrid(h, w, std::move(v));
}

// Small weights keep every output pixel inside the clamp range.
DenoiserModel small_model(int layers, int channels, std::uint64_t seed) {
  DenoiserModel m = init_model({layers, channels}, seed);
  SeededRng rng(seed, 99);
  for (auto& l : m.layers) {
    for (double& w : l.weights) w *= 0.3;
    for (double& b : l.bias) b = rng.uniform(-0.05, 0.05);
  }
  return m;
}

DenoiserModel zero_model(int layers, int channels) {
  DenoiserModel m = init_model({layers, channels}, 0);
  for (auto& l : m.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return m;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-12 ? 0.0 : std::abs(a - b) / scale;
}

double batch_loss(const DenoiserModel& m, const std::vector<TrainingPair>& batch) {
  double total = 0.0;
  for (const auto& p : batch)
    total += mse_loss(m, p.noisy.values(), p.clean.values(), p.noisy.height(), p.noisy.width());
  return total / static_cast<double>(batch.size());
}

double& parameter(DenoiserModel& m, std::size_t layer, std::size_t index) {
  auto& l = m.layers[layer];
  return index < l.weights.size() ? l.weights[index] : l.bias[index - l.weights.size()];
}

double gradient_entry(const ModelGradient& g, std::size_t layer, std::size_t index) {
  const auto& l = g.layers[layer];
  return index < l.weights.size() ? l.weights[index] : l.bias[index - l.weights.size()];
}

}  // namespace

TEST_CASE("init_model") {
  const DenoiserModel a = init_model({}, 7);
  CHECK(a.layers.size() == 5);
  CHECK(a.layers[1].in_channels == 16);
  CHECK(a.layers.front().in_channels == 1);
  CHECK(a.layers.back().out_channels == 1);
  CHECK(a == init_model({}, 7));
  CHECK_FALSE(a == init_model({}, 8));
  CHECK(a.parameter_count() == (16 * 9 + 16) + 3 * (16 * 16 * 9 + 16) + (16 * 9 + 1));
  CHECK_THROWS_AS(init_model({0, 16}, 1), ArgumentError);
  CHECK_THROWS_AS(init_model({1, 16}, 1), ArgumentError);
  CHECK_THROWS_AS(init_model({3, 0}, 1), ArgumentError);
}

TEST_CASE("forward output range and zero model identity") {
  SeededRng rng(1);
  const PixelGrid x = random_grid(12, 9, 0.0, 1.0, rng);
  const PixelGrid y = forward(init_model({}, 3), x);
  CHECK(y.same_shape(x));
  for (double v : y.values()) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(forward(zero_model(3, 4), x) == x);

  DenoiserModel biased = zero_model(2, 2);
  biased.layers.back().bias[0] = 0.25;
  const PixelGrid shifted = forward(biased, x);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(shifted.values()[i] == std::clamp(x.values()[i] - 0.25, 0.0, 1.0));
  CHECK_THROWS_AS(forward(biased, PixelGrid()), ArgumentError);
}

TEST_CASE("residual convention on a hand-built noise predictor") {
  // Layer 0 splits x into relu(x) and relu(-x); layer 1 recombines them as
  // x - c. For a constant clean patch c this predicts exactly the noise.
  DenoiserModel m = zero_model(2, 2);
  m.layers[0].weights[0 * 9 + 4] = 1.0;
  m.layers[0].weights[1 * 9 + 4] = -1.0;
  m.layers[1].weights[0 * 9 + 4] = 1.0;
  m.layers[1].weights[1 * 9 + 4] = -1.0;
  m.layers[1].bias[0] = -0.5;
  const PixelGrid clean(16, 16, std::vector<double>(256, 0.5));
  SeededRng rng(4);
  const NoiseField n = gaussian_noise(256, 0.1, rng);
  const PixelGrid noisy = add_noise(clean, n);
  const auto pred = predict_noise(m, noisy.values(), 16, 16);
  for (std::size_t i = 0; i < pred.size(); ++i)
    CHECK(pred[i] == doctest::Approx(noisy.values()[i] - 0.5).epsilon(1e-15));
  const PixelGrid out = forward(m, noisy);
  for (double v : out.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("parameter gradient matches central differences") {
  DenoiserModel m = small_model(2, 4, 11);
  SeededRng rng(12);
  std::vector<TrainingPair> batch;
  for (int b = 0; b < 2; ++b) {
    const PixelGrid clean = random_grid(8, 8, 0.3, 0.7, rng);
    batch.push_back({random_grid(8, 8, 0.3, 0.7, rng), clean});
  }
  double loss = 0.0;
  const ModelGradient g = grad_wrt_params(m, batch, &loss);
  CHECK(loss == doctest::Approx(batch_loss(m, batch)).epsilon(1e-12));
  const double h = 1e-5;
  for (int t = 0; t < 20; ++t) {
    const std::size_t layer = rng.below(m.layers.size());
    const std::size_t index = rng.below(m.layers[layer].weights.size() + m.layers[layer].bias.size());
    DenoiserModel plus = m;
    DenoiserModel minus = m;
    parameter(plus, layer, index) += h;
    parameter(minus, layer, index) -= h;
    const double fd = (batch_loss(plus, batch) - batch_loss(minus, batch)) / (2 * h);
    INFO("layer " << layer << " index " << index);
    CHECK(relative_error(gradient_entry(g, layer, index), fd) <= 1e-3);
  }
}

TEST_CASE("input gradient matches central differences") {
  const DenoiserModel m = small_model(2, 4, 21);
  SeededRng rng(22);
  const PixelGrid clean = random_grid(8, 8, 0.3, 0.7, rng);
  const PixelGrid x = random_grid(8, 8, 0.3, 0.7, rng);
  const auto g = grad_wrt_input(m, x.values(), clean.values(), 8, 8);
  const double h = 1e-5;
  for (int t = 0; t < 20; ++t) {
    const std::size_t i = rng.below(x.size());
    std::vector<double> plus(x.values().begin(), x.values().end());
    std::vector<double> minus = plus;
    plus[i] += h;
    minus[i] -= h;
    const double fd =
        (mse_loss(m, plus, clean.values(), 8, 8) - mse_loss(m, minus, clean.values(), 8, 8)) / (2 * h);
    INFO("pixel " << i);
    CHECK(relative_error(g[i], fd) <= 1e-3);
  }
}

TEST_CASE("gradients of the default architecture match central differences") {
  const DenoiserModel m = small_model(5, 16, 31);
  SeededRng rng(32);
  const PixelGrid clean = random_grid(10, 10, 0.3, 0.7, rng);
  const PixelGrid x = random_grid(10, 10, 0.3, 0.7, rng);
  const auto g = grad_wrt_input(m, x.values(), clean.values(), 10, 10);
  for (int t = 0; t < 10; ++t) {
    const std::size_t i = rng.below(x.size());
    std::vector<double> plus(x.values().begin(), x.values().end());
    std::vector<double> minus = plus;
    plus[i] += 1e-5;
    minus[i] -= 1e-5;
    const double fd =
        (mse_loss(m, plus, clean.values(), 10, 10) - mse_loss(m, minus, clean.values(), 10, 10)) / 2e-5;
    CHECK(relative_error(g[i], fd) <= 1e-3);
  }
}

TEST_CASE("zero model input gradient is 2(x - clean)/n") {
  const DenoiserModel m = zero_model(3, 4);
  SeededRng rng(5);
  const PixelGrid clean = random_grid(6, 7, 0.1, 0.9, rng);
  const PixelGrid x = random_grid(6, 7, 0.1, 0.9, rng);
  const auto g = grad_wrt_input(m, x.values(), clean.values(), 6, 7);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(g[i] == doctest::Approx(2.0 * (x.values()[i] - clean.values()[i]) / 42.0).epsilon(1e-14));
  const auto zero = grad_wrt_input(m, x.values(), x.values(), 6, 7);
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("zero-residual batch has zero parameter gradient") {
  const DenoiserModel m = zero_model(3, 4);
  SeededRng rng(6);
  const PixelGrid clean = random_grid(8, 8, 0.1, 0.9, rng);
  const std::vector<TrainingPair> batch{{clean, clean}, {clean, clean}};
  const ModelGradient g = grad_wrt_params(m, batch);
  for (const auto& l : g.layers) {
    for (double v : l.weights) CHECK(v == 0.0);
    for (double v : l.bias) CHECK(v == 0.0);
  }
}

TEST_CASE("duplicated batch has the single-sample gradient") {
  const DenoiserModel m = small_model(3, 4, 41);
  SeededRng rng(42);
  const TrainingPair p{random_grid(8, 8, 0.2, 0.8, rng), random_grid(8, 8, 0.2, 0.8, rng)};
  const std::vector<TrainingPair> one{p};
  const std::vector<TrainingPair> three{p, p, p};
  const ModelGradient a = grad_wrt_params(m, one);
  const ModelGradient b = grad_wrt_params(m, three);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t i = 0; i < a.layers[l].weights.size(); ++i)
      CHECK(b.layers[l].weights[i] == doctest::Approx(a.layers[l].weights[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i)
      CHECK(b.layers[l].bias[i] == doctest::Approx(a.layers[l].bias[i]).epsilon(1e-12));
  }
}

TEST_CASE("mixed shapes in a batch are rejected") {
  const DenoiserModel m = small_model(2, 2, 1);
  const std::vector<TrainingPair> bad{{PixelGrid(8, 8), PixelGrid(8, 8)}, {PixelGrid(8, 9), PixelGrid(8, 9)}};
  CHECK_THROWS_AS(grad_wrt_params(m, bad), ArgumentError);
  CHECK_THROWS_AS(grad_wrt_params(m, std::span<const TrainingPair>{}), ArgumentError);
}

TEST_CASE("a small gradient step lowers the loss") {
  DenoiserModel m = init_model({3, 4}, 51);
  SeededRng rng(52);
  const PixelGrid clean = random_grid(8, 8, 0.3, 0.7, rng);
  const PixelGrid noisy = add_noise(clean, gaussian_noise(64, 0.1, rng));
  const std::vector<TrainingPair> batch{{noisy, clean}};
  double before = 0.0;
  const ModelGradient g = grad_wrt_params(m, batch, &before);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    for (std::size_t i = 0; i < m.layers[l].weights.size(); ++i) m.layers[l].weights[i] -= 1e-3 * g.layers[l].weights[i];
    for (std::size_t i = 0; i < m.layers[l].bias.size(); ++i) m.layers[l].bias[i] -= 1e-3 * g.layers[l].bias[i];
  }
  CHECK(batch_loss(m, batch) < before);
}

TEST_CASE("training on a single patch lowers the loss") {
  const std::vector<PixelGrid> corpus = synthetic_corpus(1, 8, 8, 3);
  TrainConfig cfg;
  cfg.arch = {3, 4};
  cfg.patch_size = 8;
  cfg.epochs = 1;
  cfg.steps_per_epoch = 60;
  cfg.batch_size = 1;
  cfg.learning_rate = 1e-3;
  cfg.seed = 9;
  const TrainResult r = train(cfg, corpus);
  CHECK(r.history.loss.size() == 1);
  CHECK(r.history.val_psnr.front() == 0.0);
  CHECK(r.history.loss.front() < r.history.initial_loss);
  CHECK(r.model.all_finite());
}

TEST_CASE("training is deterministic and records its history") {
  const std::vector<PixelGrid> corpus = synthetic_corpus(4, 32, 32, 5);
  TrainConfig cfg;
  cfg.arch = {3, 4};
  cfg.patch_size = 16;
  cfg.patch_stride = 8;
  cfg.epochs = 3;
  cfg.steps_per_epoch = 4;
  cfg.batch_size = 3;
  cfg.validation_patches = 4;
  cfg.strategy = NoiseStrategy::ts_def({10, 25.0 / 255.0});
  cfg.seed = 17;
  const TrainResult a = train(cfg, corpus);
  const TrainResult b = train(cfg, corpus);
  CHECK(a.model == b.model);
  CHECK(a.history == b.history);
  CHECK(a.history.loss.size() == 3);
  CHECK(a.history.steps == std::vector<std::size_t>{4, 8, 12});
  for (double l : a.history.loss) CHECK(l >= 0.0);
  CHECK(a.history.val_noisy_psnr > 15.0);
  CHECK(a.model.sigma_trained == 25.0 / 255.0);
  CHECK(a.model.seed == 17);
  cfg.seed = 18;
  CHECK_FALSE(train(cfg, corpus).model == a.model);

  // Resuming keeps the architecture of the initial model.
  cfg.arch = {5, 16};
  const TrainResult resumed = train(cfg, corpus, &a.model);
  CHECK(resumed.model.layers.size() == 3);
}

TEST_CASE("training argument errors") {
  TrainConfig cfg;
  CHECK_THROWS_AS(train(cfg, std::span<const PixelGrid>{}), ArgumentError);
  cfg.patch_size = 4;
  const auto corpus = synthetic_corpus(1, 32, 32, 1);
  CHECK_THROWS_AS(train(cfg, corpus), ArgumentError);
  cfg.patch_size = 40;
  CHECK_THROWS_AS(train(cfg, corpus), ArgumentError);
  cfg.patch_size = 16;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(cfg, corpus), ArgumentError);
}

TEST_CASE("patch extraction") {
  const auto corpus = synthetic_corpus(2, 40, 60, 1);
  const auto patches = extract_patches(corpus, 20, 20);
  CHECK(patches.size() == 2 * 2 * 3);
  CHECK(patches[1] == corpus[0].crop(0, 20, 20, 20));
  CHECK(patches[3] == corpus[0].crop(20, 0, 20, 20));
}

TEST_CASE("synthetic corpus") {
  const auto a = synthetic_corpus(3, 24, 32, 8);
  CHECK(a.size() == 3);
  CHECK(a == synthetic_corpus(3, 24, 32, 8));
  CHECK_FALSE(a[0] == a[1]);
  for (const auto& g : a) {
    CHECK(g.height() == 24);
    CHECK(g.width() == 32);
    for (double v : g.values()) {
      CHECK(v >= 0.1);
      CHECK(v <= 0.9);
    }
  }
  // Adding images does not change earlier ones.
  CHECK(synthetic_corpus(5, 24, 32, 8)[2] == a[2]);
}

TEST_CASE("model serialization round trip") {
  DenoiserModel m = init_model({3, 5}, 77);
  m.sigma_trained = 25.0 / 255.0;
  m.residual = true;
  const auto bytes = serialize_model(m);
  CHECK(bytes.size() == 32 + 3 * 8 + m.parameter_count() * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TSDN");
  CHECK(bytes[4] == kModelFormatVersion);
  const DenoiserModel back = deserialize_model(bytes);
  CHECK(back == m);

  const auto path = std::filesystem::temp_directory_path() / "tslab_test_model.tsdn";
  save_model(m, path);
  const DenoiserModel loaded = load_model(path);
  SeededRng rng(3);
  const PixelGrid probe = random_grid(9, 9, 0.0, 1.0, rng);
  CHECK(forward(loaded, probe) == forward(m, probe));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), FileError);
}

TEST_CASE("model format errors") {
  const DenoiserModel m = init_model({2, 2}, 1);
  const auto good = serialize_model(m);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  try {
    deserialize_model(bad_magic);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }

  auto bad_version = good;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize_model(bad_version), UnsupportedVersionError);

  const std::vector<unsigned char> header_cut(good.begin(), good.begin() + 30);
  try {
    deserialize_model(header_cut);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 28);
  }

  const std::vector<unsigned char> payload_cut(good.begin(), good.end() - 3);
  try {
    deserialize_model(payload_cut);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == good.size() - 3);
  }

  auto trailing = good;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_model(trailing), FormatError);

  auto bad_flag = good;
  bad_flag[8] = 7;
  try {
    deserialize_model(bad_flag);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 8);
  }
}
