#include "tslab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tslab/attack.hpp"
#include "tslab/csv.hpp"
#include "tslab/denoiser.hpp"
#include "tslab/errors.hpp"
#include "tslab/metrics.hpp"
#include "tslab/pgm.hpp"
#include "tslab/probe.hpp"
#include "tslab/ts_sampler.hpp"
#include "tslab/typical_set.hpp"

namespace tslab {

namespace {

constexpr std::uint64_t kDefaultCorpusSeed = 2024;
constexpr std::uint64_t kDefaultTestSeed = 777;
constexpr std::uint64_t kNoiseStream = 0x5EED;
constexpr std::uint64_t kSecondNoiseOffset = 1'000'000;
constexpr double kDefaultSigma = 25.0 / 255.0;

std::ostream& log_of(RunContext& ctx) {
  static std::ostream null_stream(nullptr);
  return ctx.log != nullptr ? *ctx.log : null_stream;
}

std::uint64_t global_seed(Config& cfg) { return cfg.get_u64("seed", 1); }

void check_unused(const Config& cfg) {
  const auto unused = cfg.unused_keys();
  if (unused.empty()) return;
  std::string list;
  for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
  throw ArgumentError("unknown config keys: " + list);
}

std::optional<double> optional_double(Config& cfg, const std::string& key) {
  if (!cfg.has(key)) {
    cfg.get_string(key, "none");
    return std::nullopt;
  }
  return cfg.get_double(key, 0.0);
}

int positive_int(Config& cfg, const std::string& key, std::int64_t fallback, std::int64_t min = 1) {
  const auto v = cfg.get_int(key, fallback);
  if (v < min || v > 1'000'000'000) throw ArgumentError("config key '" + key + "' out of range");
  return static_cast<int>(v);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open output file: " + path.string());
  return out;
}

NormKind parse_norm(const std::string& key, const std::string& name) {
  if (name == "linf") return NormKind::Linf;
  if (name == "l2") return NormKind::L2;
  throw ArgumentError("config key '" + key + "': expected linf or l2, got '" + name + "'");
}

std::string norm_name(NormKind k) {
  switch (k) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::Linf: return "linf";
  }
  return "?";
}

TypicalSetSpec read_spec(Config& cfg, const std::string& sec) {
  TypicalSetSpec spec;
  spec.dim = static_cast<std::size_t>(positive_int(cfg, sec + ".dim", 4096));
  spec.sigma = cfg.get_double(sec + ".sigma", kDefaultSigma);
  spec.epsilon = cfg.get_double(sec + ".epsilon", 0.05);
  spec.delta = cfg.get_double(sec + ".delta", 0.05);
  spec.validate();
  return spec;
}

NoiseStrategy read_strategy(Config& cfg, const std::string& sec) {
  const StrategyKind kind = strategy_from_string(cfg.get_string(sec + ".strategy", "normal"));
  TsConfig ts;
  ts.sigma = cfg.get_double(sec + ".sigma", kDefaultSigma);
  if (kind == StrategyKind::TsPres || kind == StrategyKind::TsDef)
    ts.iterations = positive_int(cfg, sec + ".ts_iterations", 10, 0);
  const double sigma2 = kind == StrategyKind::Mixed ? cfg.get_double(sec + ".sigma2", 15.0 / 255.0) : 0.0;
  return NoiseStrategy(kind, ts, sigma2);
}

AttackConfig read_attack(Config& cfg, std::uint64_t seed) {
  AttackConfig a;
  a.budget_norm = parse_norm("attack.norm", cfg.get_string("attack.norm", "linf"));
  a.epsilon = cfg.get_double("attack.epsilon", 3.0 / 255.0);
  a.alpha = cfg.get_double("attack.alpha", 2.0 / 255.0);
  a.steps = positive_int(cfg, "attack.steps", 5, 0);
  a.random_init = cfg.get_bool("attack.random_init", true);
  a.clamp_valid_range = cfg.get_bool("attack.clamp", true);
  a.seed = cfg.get_u64("attack.seed", seed);
  a.validate();
  return a;
}

DenoiserModel read_model(Config& cfg, const std::string& key) {
  return load_model(cfg.require_string(key));
}

struct NoiseSettings {
  double sigma = kDefaultSigma;
  std::uint64_t seed = 0;
};

NoiseSettings read_noise(Config& cfg, std::uint64_t seed) {
  NoiseSettings s;
  s.sigma = cfg.get_double("noise.sigma", kDefaultSigma);
  if (!(s.sigma > 0.0)) throw ArgumentError("noise.sigma must be positive");
  s.seed = cfg.get_u64("noise.seed", seed);
  return s;
}

NoiseField test_noise(const NoiseSettings& s, std::size_t dim, std::size_t index) {
  SeededRng rng = SeededRng(s.seed, kNoiseStream).split(index);
  return gaussian_noise(dim, s.sigma, rng);
}

std::vector<AttackSample> make_dataset(const ImageSet& set, const NoiseSettings& noise) {
  std::vector<AttackSample> ds;
  ds.reserve(set.images.size());
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    const NoiseField n = test_noise(noise, set.images[i].size(), i);
    ds.push_back({set.ids[i], set.images[i], add_noise(set.images[i], n)});
  }
  return ds;
}

std::vector<double> difference(const PixelGrid& a, const PixelGrid& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.values()[i] - b.values()[i];
  return d;
}

}  // namespace

ImageSet load_image_set(Config& cfg, const std::string& sec, std::uint64_t default_seed,
                        std::size_t default_count, int default_size) {
  ImageSet set;
  const std::string source = cfg.get_string(sec + ".source", "synthetic");
  if (source == "synthetic") {
    const auto count = static_cast<std::size_t>(positive_int(cfg, sec + ".count", static_cast<std::int64_t>(default_count)));
    const int height = positive_int(cfg, sec + ".height", default_size);
    const int width = positive_int(cfg, sec + ".width", default_size);
    const std::uint64_t seed = cfg.get_u64(sec + ".seed", default_seed);
    const std::string half = cfg.get_string(sec + ".half", "all");
    std::size_t begin = 0;
    std::size_t end = count;
    if (half == "first") {
      end = count / 2;
    } else if (half == "second") {
      begin = count / 2;
    } else if (half != "all") {
      throw ArgumentError("config key '" + sec + ".half': expected all, first or second");
    }
    auto images = synthetic_corpus(count, height, width, seed);
    for (std::size_t i = begin; i < end; ++i) {
      set.ids.push_back(sec + "-" + std::to_string(i));
      set.images.push_back(std::move(images[i]));
    }
  } else if (source == "pgm") {
    std::vector<std::filesystem::path> paths;
    if (cfg.has(sec + ".files")) {
      std::stringstream ss(cfg.require_string(sec + ".files"));
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) paths.emplace_back(item.substr(b, e - b + 1));
      }
    } else {
      const std::filesystem::path dir = cfg.require_string(sec + ".dir");
      if (!std::filesystem::is_directory(dir)) throw FileError("not a directory: " + dir.string());
      for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") paths.push_back(entry.path());
      std::sort(paths.begin(), paths.end());
    }
    for (const auto& p : paths) {
      set.ids.push_back(p.stem().string());
      set.images.push_back(read_pgm(p));
    }
  } else {
    throw ArgumentError("config key '" + sec + ".source': expected synthetic or pgm");
  }
  if (set.images.empty()) throw ArgumentError("image set [" + sec + "] is empty");
  return set;
}

int cmd_verify(RunContext& ctx) {
  Config& cfg = ctx.config;
  const std::uint64_t seed = global_seed(cfg);
  const TypicalSetSpec spec = read_spec(cfg, "verify");
  const double eta = cfg.get_double("verify.eta", 3.0 / 255.0);
  if (!(eta >= 0.0)) throw ArgumentError("verify.eta must be >= 0");
  const std::string norms = cfg.get_string("verify.norm", "both");
  const auto trials = static_cast<std::size_t>(positive_int(cfg, "verify.trials", 10000));
  VerifierOptions opt;
  opt.rel_l1_tol = cfg.get_double("verify.rel_l1_tol", opt.rel_l1_tol);
  opt.clean_threshold = cfg.get_double("verify.clean_threshold", opt.clean_threshold);
  opt.conditional_threshold = cfg.get_double("verify.conditional_threshold", opt.conditional_threshold);
  opt.random_perturbations =
      static_cast<std::size_t>(positive_int(cfg, "verify.random_perturbations", 1, 0));
  check_unused(cfg);

  std::vector<NormKind> kinds;
  if (norms == "both") {
    kinds = {NormKind::L2, NormKind::Linf};
  } else {
    kinds = {parse_norm("verify.norm", norms)};
  }

  bool all_passed = true;
  auto out = open_output(ctx.out_dir / "verify.csv");
  CsvWriter csv(out);
  csv.header({"norm", "check", "trials", "violations", "rate", "threshold", "passed"});
  const SeededRng rng(seed, 0x7E51F7);
  for (NormKind k : kinds) {
    const VerifierReport report = monte_carlo_verify(spec, eta, k, trials, rng, opt);
    for (const auto& c : report.checks) {
      csv.row(norm_name(k), c.name, c.trials, c.violations, c.rate(), c.threshold, c.passed());
      log_of(ctx) << norm_name(k) << ' ' << c.name << ": " << c.violations << '/' << c.trials
                  << (c.passed() ? " ok" : " FAIL") << '\n';
    }
    all_passed = all_passed && report.passed();
  }

  const double l1_tol = opt.rel_l1_tol * static_cast<double>(spec.dim) * spec.sigma;
  auto bounds_out = open_output(ctx.out_dir / "bounds.csv");
  CsvWriter bounds(bounds_out);
  bounds.header({"quantity", "value"});
  const Interval l2 = l2_concentration_bounds(spec);
  const Interval l1 = l1_concentration_bounds(spec, l1_tol);
  const DeviationBound b2 = b2_bound(spec, eta);
  const DeviationBound binf = binf_bound(spec, eta);
  const Interval vol_eps = log2_volume_bounds(spec.epsilon, spec);
  const Interval vol_b2 = log2_volume_bounds(b2, spec);
  const Interval vol_binf = log2_volume_bounds(binf, spec);
  const Interval shift_l2 = logpdf_shift_bounds(spec, eta, NormKind::L2);
  const Interval shift_linf = logpdf_shift_bounds(spec, eta, NormKind::Linf, l1_tol);
  bounds.row("dim", spec.dim);
  bounds.row("sigma", spec.sigma);
  bounds.row("epsilon_bits", spec.epsilon);
  bounds.row("eta", eta);
  bounds.row("entropy_bits", differential_entropy_bits(spec.sigma));
  bounds.row("l2_sq_lo", l2.lo);
  bounds.row("l2_sq_hi", l2.hi);
  bounds.row("l1_lo", l1.lo);
  bounds.row("l1_hi", l1.hi);
  bounds.row("b2_bits", b2.value);
  bounds.row("binf_bits", binf.value);
  bounds.row("log2_volume_eps_lo", vol_eps.lo);
  bounds.row("log2_volume_eps_hi", vol_eps.hi);
  bounds.row("log2_volume_b2_lo", vol_b2.lo);
  bounds.row("log2_volume_b2_hi", vol_b2.hi);
  bounds.row("log2_volume_binf_lo", vol_binf.lo);
  bounds.row("log2_volume_binf_hi", vol_binf.hi);
  bounds.row("logpdf_shift_l2_lo_nats", shift_l2.lo);
  bounds.row("logpdf_shift_l2_hi_nats", shift_l2.hi);
  bounds.row("logpdf_shift_linf_lo_nats", shift_linf.lo);
  bounds.row("logpdf_shift_linf_hi_nats", shift_linf.hi);
  bounds.row("typical_set_miss_probability", typical_set_miss_probability(spec));
  return all_passed ? kExitOk : kExitThreshold;
}

int cmd_sample(RunContext& ctx) {
  Config& cfg = ctx.config;
  const std::uint64_t seed = global_seed(cfg);
  const NoiseStrategy strategy = read_strategy(cfg, "sample");
  const auto dim = static_cast<std::size_t>(positive_int(cfg, "sample.dim", 4096));
  const auto draws = static_cast<std::size_t>(positive_int(cfg, "sample.draws", 1000));
  const auto bins = static_cast<std::size_t>(positive_int(cfg, "sample.bins", 40));
  check_unused(cfg);

  SeededRng rng(seed, 0x5A3B1E);
  const DensityHistogram hist = density_histogram(strategy, dim, draws, rng, bins);
  auto out = open_output(ctx.out_dir / "histogram.csv");
  CsvWriter csv(out);
  csv.header({"bin_center", "count"});
  for (const auto& b : hist.bins) csv.row(b.center, b.count);
  auto summary_out = open_output(ctx.out_dir / "summary.csv");
  CsvWriter summary(summary_out);
  summary.header({"strategy", "dim", "draws", "mean_statistic_bits", "entropy_bits"});
  summary.row(to_string(strategy.kind()), dim, draws, hist.mean_statistic, hist.entropy_bits);
  log_of(ctx) << to_string(strategy.kind()) << ": mean -(1/n)log2 f = " << format_double(hist.mean_statistic)
              << " bits, h = " << format_double(hist.entropy_bits) << " bits\n";
  return kExitOk;
}

int cmd_train(RunContext& ctx) {
  Config& cfg = ctx.config;
  const std::uint64_t seed = global_seed(cfg);
  TrainConfig tc;
  tc.strategy = read_strategy(cfg, "train");
  tc.arch.layers = positive_int(cfg, "train.layers", tc.arch.layers, 2);
  tc.arch.channels = positive_int(cfg, "train.channels", tc.arch.channels);
  tc.patch_size = positive_int(cfg, "train.patch_size", tc.patch_size);
  tc.patch_stride = positive_int(cfg, "train.patch_stride", tc.patch_stride);
  tc.epochs = positive_int(cfg, "train.epochs", tc.epochs);
  tc.steps_per_epoch = positive_int(cfg, "train.steps_per_epoch", tc.steps_per_epoch, 0);
  tc.batch_size = positive_int(cfg, "train.batch_size", tc.batch_size);
  tc.learning_rate = cfg.get_double("train.learning_rate", tc.learning_rate);
  tc.lr_decay = cfg.get_double("train.lr_decay", tc.lr_decay);
  const std::string optimizer = cfg.get_string("train.optimizer", "adam");
  if (optimizer == "adam") {
    tc.optimizer = OptimizerKind::Adam;
  } else if (optimizer == "sgd-momentum") {
    tc.optimizer = OptimizerKind::SgdMomentum;
    tc.momentum = cfg.get_double("train.momentum", tc.momentum);
  } else {
    throw ArgumentError("train.optimizer: expected adam or sgd-momentum");
  }
  tc.validation_patches = positive_int(cfg, "train.validation_patches", tc.validation_patches, 0);
  tc.seed = seed;
  tc.validate();
  const std::string resume = cfg.get_string("train.resume", "");
  const auto min_gain = optional_double(cfg, "train.min_val_gain_db");
  const ImageSet corpus = load_image_set(cfg, "corpus", kDefaultCorpusSeed, 40, 96);
  check_unused(cfg);

  std::optional<DenoiserModel> initial;
  if (!resume.empty()) initial = load_model(resume);
  const TrainResult result = train(tc, corpus.images, initial ? &*initial : nullptr);
  save_model(result.model, ctx.out_dir / "model.tsdn");

  auto out = open_output(ctx.out_dir / "history.csv");
  CsvWriter csv(out);
  csv.header({"epoch", "steps", "loss", "val_psnr", "val_noisy_psnr"});
  for (std::size_t e = 0; e < result.history.loss.size(); ++e)
    csv.row(e + 1, result.history.steps[e], result.history.loss[e], result.history.val_psnr[e],
            result.history.val_noisy_psnr);
  const double final_psnr = result.history.val_psnr.back();
  const double gain = final_psnr - result.history.val_noisy_psnr;
  log_of(ctx) << "trained " << to_string(tc.strategy.kind()) << " model: validation PSNR "
              << format_double(final_psnr) << " dB (noisy " << format_double(result.history.val_noisy_psnr)
              << " dB)\n";
  if (min_gain && !(gain >= *min_gain)) return kExitThreshold;
  return kExitOk;
}

int cmd_attack(RunContext& ctx) {
  Config& cfg = ctx.config;
  const std::uint64_t seed = global_seed(cfg);
  const DenoiserModel model = read_model(cfg, "model.path");
  std::optional<DenoiserModel> source;
  if (cfg.has("attack.source_model")) source = read_model(cfg, "attack.source_model");
  const AttackConfig acfg = read_attack(cfg, seed);
  const NoiseSettings noise = read_noise(cfg, seed);
  const bool write_images = cfg.get_bool("attack.write_images", true);
  const auto min_drop = optional_double(cfg, "attack.min_drop_db");
  const auto max_drop = optional_double(cfg, "attack.max_drop_db");
  const ImageSet images = load_image_set(cfg, "data", kDefaultTestSeed, 100, 64);
  check_unused(cfg);

  const auto dataset = make_dataset(images, noise);
  AttackSuiteResult suite;
  if (source) {
    const AttackSuiteResult crafted = attack_suite(*source, dataset, acfg);
    std::vector<PixelGrid> adversarial;
    for (const auto& row : crafted.rows) adversarial.push_back(row.adversarial);
    suite = score_adversarials(model, dataset, adversarial, acfg.budget_norm);
  } else {
    suite = attack_suite(model, dataset, acfg);
  }

  if (write_images) {
    const auto dir = ctx.out_dir / "adv";
    std::filesystem::create_directories(dir);
    for (const auto& row : suite.rows) write_pgm(row.adversarial, dir / (row.id + ".pgm"), 65535);
  }
  auto out = open_output(ctx.out_dir / "attack.csv");
  CsvWriter csv(out);
  csv.header({"id", "budget_norm", "epsilon", "perturbation", "psnr_before", "ssim_before", "mae_before",
              "psnr_after", "ssim_after", "mae_after", "psnr_drop"});
  for (const auto& r : suite.rows)
    csv.row(r.id, norm_name(acfg.budget_norm), acfg.epsilon, r.perturbation, r.before.psnr, r.before.ssim,
            r.before.mae, r.after.psnr, r.after.ssim, r.after.mae, r.before.psnr - r.after.psnr);
  const AttackSummary& s = suite.summary;
  auto summary_out = open_output(ctx.out_dir / "summary.csv");
  CsvWriter summary(summary_out);
  summary.header({"count", "psnr_before", "psnr_after", "psnr_drop", "ssim_before", "ssim_after", "mae_before",
                  "mae_after", "degraded_fraction"});
  summary.row(s.count, s.psnr_before, s.psnr_after, s.psnr_drop, s.ssim_before, s.ssim_after, s.mae_before,
              s.mae_after, s.degraded_fraction);
  log_of(ctx) << "mean PSNR " << format_double(s.psnr_before) << " -> " << format_double(s.psnr_after)
              << " dB (drop " << format_double(s.psnr_drop) << ")\n";
  if (min_drop && !(s.psnr_drop >= *min_drop)) return kExitThreshold;
  if (max_drop && !(s.psnr_drop <= *max_drop)) return kExitThreshold;
  return kExitOk;
}

namespace {

struct ProbeInputs {
  DenoiserModel model;
  PixelGrid u;
  NoiseSettings noise;
  std::size_t index = 0;
  AttackConfig attack;
};

NoiseField second_noise(const ProbeInputs& in) {
  return test_noise(in.noise, in.u.size(), in.index + kSecondNoiseOffset);
}

// Adversarial image for u + n and the perturbation it adds.
std::pair<PixelGrid, std::vector<double>> craft(const ProbeInputs& in, const NoiseField& n) {
  const PixelGrid noisy = add_noise(in.u, n);
  PixelGrid adv = denoising_pgd(in.model, in.u, noisy, in.attack);
  std::vector<double> v = difference(adv, noisy);
  return {std::move(adv), std::move(v)};
}

int probe_radar(RunContext& ctx, const ProbeInputs& in, int ni, int nj, bool check) {
  const NoiseField n = test_noise(in.noise, in.u.size(), in.index);
  const auto [adv, v] = craft(in, n);
  const ProbeGrid grid = radar_probe(in.model, in.u, n, v, ni, nj);
  auto out = open_output(ctx.out_dir / "radar.csv");
  write_probe_csv(grid, out);
  const int last = nj - 1;
  int argmax = 0;
  for (int i = 1; i < ni; ++i)
    if (grid.score(i, last) > grid.score(argmax, last)) argmax = i;
  double back = -kInfinitePsnr;
  for (int i = 0; i < ni; ++i) {
    const double deg = grid.theta[i] * 180.0 / std::numbers::pi;
    if (deg >= 90.0 - 1e-9 && deg <= 270.0 + 1e-9) back = std::max(back, grid.score(i, last));
  }
  const double front = grid.score(0, last);
  const bool aligned = argmax <= 1 || argmax >= ni - 1;
  const bool quiet = back <= 0.25 * front;
  log_of(ctx) << "radar: argmax theta index " << argmax << " of " << ni << ", score(0) "
              << format_double(front) << " dB, back-half max " << format_double(back) << " dB\n";
  return (check && !(aligned && quiet)) ? kExitThreshold : kExitOk;
}

int probe_sphere(RunContext& ctx, const ProbeInputs& in, int ni, int nj, Config& cfg, bool check) {
  const auto k = cfg.get_int("probe.k", 1);
  if (k != 1 && k != 2) throw ArgumentError("probe.k must be 1 or 2");
  const auto radius_opt = optional_double(cfg, "probe.radius");
  check_unused(cfg);
  const NoiseField n1 = test_noise(in.noise, in.u.size(), in.index);
  const NoiseField n2 = second_noise(in);
  const auto [adv1, v1] = craft(in, n1);
  double radius = norm(v1, NormKind::L2);
  if (k == 2) radius = norm(craft(in, n2).second, NormKind::L2);
  if (radius_opt) radius = *radius_opt;
  const ProbeGrid grid =
      sphere_probe(in.model, in.u, k == 1 ? n1 : n2, n1.values(), n2.values(), v1, ni, nj, radius);
  auto out = open_output(ctx.out_dir / "sphere.csv");
  write_probe_csv(grid, out);
  int bi = 0;
  int bj = 0;
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < nj; ++j)
      if (grid.score(i, j) > grid.score(bi, bj)) {
        bi = i;
        bj = j;
      }
  const double along_e1 = std::abs(std::cos(grid.outer[bj]) * std::cos(grid.theta[bi]));
  const double cell = std::max(2.0 * std::numbers::pi / ni, std::numbers::pi / (nj - 1));
  const bool aligned = along_e1 >= std::cos(cell) - 1e-12;
  log_of(ctx) << "sphere: max score " << format_double(grid.score(bi, bj)) << " dB at |cos to e1| "
              << format_double(along_e1) << "\n";
  return (check && radius > 0.0 && !aligned) ? kExitThreshold : kExitOk;
}

int probe_blend(RunContext& ctx, const ProbeInputs& in, Config& cfg, bool check) {
  const auto lambdas = cfg.get_doubles("probe.lambdas", {0.0, 0.25, 0.5, 0.75, 1.0});
  check_unused(cfg);
  const NoiseField n1 = test_noise(in.noise, in.u.size(), in.index);
  const NoiseField n2 = second_noise(in);
  const PixelGrid a1 = craft(in, n1).first;
  const PixelGrid a2 = craft(in, n2).first;
  auto out = open_output(ctx.out_dir / "blend.csv");
  CsvWriter csv(out);
  csv.header({"lambda", "score"});
  bool all_adversarial = true;
  for (double lambda : lambdas) {
    const PixelGrid sample = blend_adversarials(in.u, a1, a2, lambda);
    const PixelGrid reference = add_noise(in.u, blend_noises(n1, n2, lambda));
    const double score = degradation(in.model, in.u, reference, sample);
    csv.row(lambda, score);
    all_adversarial = all_adversarial && score > 0.0;
    log_of(ctx) << "blend lambda " << format_double(lambda) << ": " << format_double(score) << " dB\n";
  }
  return (check && !all_adversarial) ? kExitThreshold : kExitOk;
}

int probe_patch(RunContext& ctx, const ProbeInputs& in, Config& cfg, bool check) {
  Region region;
  region.top = positive_int(cfg, "probe.region_top", 24, 0);
  region.left = positive_int(cfg, "probe.region_left", 24, 0);
  region.height = positive_int(cfg, "probe.region_height", 16, 0);
  region.width = positive_int(cfg, "probe.region_width", 16, 0);
  const std::string method_name = cfg.get_string("probe.method", "both");
  check_unused(cfg);
  std::vector<PatchMethod> methods;
  if (method_name == "both")
    methods = {PatchMethod::LocalCraft, PatchMethod::CropGlobal};
  else
    methods = {patch_method_from_string(method_name)};

  const NoiseField n = test_noise(in.noise, in.u.size(), in.index);
  const PixelGrid noisy = add_noise(in.u, n);
  const PixelGrid benign = forward(in.model, noisy);
  const double in_before = region_psnr(benign, in.u, region, true);
  const double out_before = region_psnr(benign, in.u, region, false);
  auto out = open_output(ctx.out_dir / "patch.csv");
  CsvWriter csv(out);
  csv.header({"method", "psnr_inside_before", "psnr_inside_after", "psnr_outside_before", "psnr_outside_after",
              "outside_pixels_modified"});
  bool ok = true;
  for (PatchMethod m : methods) {
    const PixelGrid adv = patch_attack(in.model, in.u, noisy, region, m, in.attack);
    std::size_t modified = 0;
    for (int y = 0; y < in.u.height(); ++y)
      for (int x = 0; x < in.u.width(); ++x)
        if (!region.contains(y, x) && adv.at(y, x) != noisy.at(y, x)) ++modified;
    const PixelGrid attacked = forward(in.model, adv);
    const double in_after = region_psnr(attacked, in.u, region, true);
    const double out_after = region_psnr(attacked, in.u, region, false);
    csv.row(to_string(m), in_before, in_after, out_before, out_after, modified);
    ok = ok && modified == 0 && in_after < in_before && std::abs(out_after - out_before) < 0.1;
    log_of(ctx) << to_string(m) << ": inside " << format_double(in_before) << " -> " << format_double(in_after)
                << " dB, outside " << format_double(out_before) << " -> " << format_double(out_after) << " dB\n";
  }
  return (check && !ok) ? kExitThreshold : kExitOk;
}

}  // namespace

int cmd_probe(RunContext& ctx) {
  Config& cfg = ctx.config;
  const std::uint64_t seed = global_seed(cfg);
  const std::string kind = cfg.get_string("probe.kind", "radar");
  ProbeInputs in;
  in.model = read_model(cfg, "model.path");
  in.attack = read_attack(cfg, seed);
  in.noise = read_noise(cfg, seed);
  const ImageSet images = load_image_set(cfg, "data", kDefaultTestSeed, 1, 64);
  in.index = static_cast<std::size_t>(positive_int(cfg, "probe.image", 0, 0));
  if (in.index >= images.images.size()) throw ArgumentError("probe.image index out of range");
  in.u = images.images[in.index];
  const bool check = cfg.get_bool("probe.check", false);

  if (kind == "radar") {
    const int ni = positive_int(cfg, "probe.ni", 72);
    const int nj = positive_int(cfg, "probe.nj", 10, 2);
    check_unused(cfg);
    return probe_radar(ctx, in, ni, nj, check);
  }
  if (kind == "sphere") {
    const int ni = positive_int(cfg, "probe.ni", 36);
    const int nj = positive_int(cfg, "probe.nj", 19, 2);
    return probe_sphere(ctx, in, ni, nj, cfg, check);
  }
  if (kind == "blend") return probe_blend(ctx, in, cfg, check);
  if (kind == "patch") return probe_patch(ctx, in, cfg, check);
  throw ArgumentError("probe.kind: expected radar, sphere, blend or patch");
}

int cmd_eval(RunContext& ctx) {
  Config& cfg = ctx.config;
  const std::uint64_t seed = global_seed(cfg);
  const DenoiserModel model = read_model(cfg, "model.path");
  std::optional<DenoiserModel> model_b;
  if (cfg.has("eval.model_b")) model_b = read_model(cfg, "eval.model_b");
  const AttackConfig acfg = read_attack(cfg, seed);
  const NoiseSettings noise = read_noise(cfg, seed);
  const double threshold_m = cfg.get_double("eval.threshold_m", 0.0);
  const auto min_transfer = optional_double(cfg, "eval.min_transfer_fraction");
  const ImageSet images = load_image_set(cfg, "data", kDefaultTestSeed, 50, 64);
  check_unused(cfg);

  const auto dataset = make_dataset(images, noise);
  auto out = open_output(ctx.out_dir / "metrics.csv");
  CsvWriter csv(out);
  csv.header({"id", "image", "psnr", "ssim", "mae"});
  std::ofstream transfer_out;
  std::optional<CsvWriter> transfer;
  if (model_b) {
    transfer_out = open_output(ctx.out_dir / "transfer.csv");
    transfer.emplace(transfer_out);
    transfer->header({"id", "outcome", "loss_noisy", "loss_a_benign", "loss_a_adv", "loss_b_benign", "loss_b_adv"});
  }
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const AttackSample& s = dataset[i];
    SeededRng rng = attack_rng(acfg, i);
    const PixelGrid adv = run_attack(model, s.clean, s.noisy, acfg, rng);
    const auto emit = [&](const char* name, const PixelGrid& img) {
      const MetricReport r = evaluate(img, s.clean);
      csv.row(s.id, name, r.psnr, r.ssim, r.mae);
    };
    emit("clean", s.clean);
    emit("noisy", s.noisy);
    emit("denoised", forward(model, s.noisy));
    emit("adversarial", adv);
    emit("adversarial-denoised", forward(model, adv));
    if (model_b) {
      const Transferability t = transferability_check(model, *model_b, s.clean, s.noisy, adv, threshold_m);
      ++counts[static_cast<int>(t)];
      const auto loss = [&](const DenoiserModel& m, const PixelGrid& x) {
        return mse(forward(m, x).values(), s.clean.values());
      };
      transfer->row(s.id, to_string(t), mse(s.noisy.values(), s.clean.values()), loss(model, s.noisy),
                    loss(model, adv), loss(*model_b, s.noisy), loss(*model_b, adv));
    }
  }
  if (!model_b) {
    if (min_transfer) throw ArgumentError("eval.min_transfer_fraction requires eval.model_b");
    return kExitOk;
  }
  const double fraction = static_cast<double>(counts[0]) / static_cast<double>(dataset.size());
  auto summary_out = open_output(ctx.out_dir / "summary.csv");
  CsvWriter summary(summary_out);
  summary.header({"images", "transferable", "not_transferable", "attack_failed", "transferable_fraction",
                  "threshold_m"});
  summary.row(dataset.size(), counts[0], counts[1], counts[2], fraction, threshold_m);
  log_of(ctx) << "transferable: " << counts[0] << '/' << dataset.size() << '\n';
  if (min_transfer && !(fraction >= *min_transfer)) return kExitThreshold;
  return kExitOk;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"verify", "sample", "train", "attack", "probe", "eval"};
  return names;
}

int run_command(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err) {
  try {
    RunContext ctx;
    ctx.config = Config::load(options.config_path);
    if (options.seed) ctx.config.set("seed", std::to_string(*options.seed));
    ctx.out_dir = options.out_dir;
    ctx.log = &log;
    std::filesystem::create_directories(ctx.out_dir);

    int code = kExitUsage;
    if (command == "verify") {
      code = cmd_verify(ctx);
    } else if (command == "sample") {
      code = cmd_sample(ctx);
    } else if (command == "train") {
      code = cmd_train(ctx);
    } else if (command == "attack") {
      code = cmd_attack(ctx);
    } else if (command == "probe") {
      code = cmd_probe(ctx);
    } else if (command == "eval") {
      code = cmd_eval(ctx);
    } else {
      err << "tslab: unknown command '" << command << "'\n";
      return kExitUsage;
    }
    auto manifest = open_output(ctx.out_dir / "manifest.txt");
    manifest << "command = " << command << "\n" << ctx.config.manifest();
    return code;
  } catch (const ArgumentError& e) {
    err << "tslab " << command << ": usage error: " << e.what() << '\n';
  } catch (const FormatError& e) {
    err << "tslab " << command << ": format error: " << e.what() << '\n';
  } catch (const UnsupportedVersionError& e) {
    err << "tslab " << command << ": " << e.what() << '\n';
  } catch (const FileError& e) {
    err << "tslab " << command << ": file error: " << e.what() << '\n';
  } catch (const DegeneracyError& e) {
    err << "tslab " << command << ": degenerate input: " << e.what() << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    err << "tslab " << command << ": file error: " << e.what() << '\n';
  }
  return kExitUsage;
}

}  // namespace tslab
