#include <algorithm>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "tslab/denoiser.hpp"
#include "tslab/harness.hpp"
#include "tslab/pgm.hpp"

using namespace tslab;
namespace fs = std::filesystem;

namespace {

class Workspace {
 public:
  explicit Workspace(const std::string& name) : root_(fs::temp_directory_path() / ("tslab_harness_" + name)) {
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Workspace() { fs::remove_all(root_); }

  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(root_ / file, std::ios::binary) << text;
    return root_ / file;
  }
  fs::path path(const std::string& p) const { return root_ / p; }

 private:
  fs::path root_;
};

struct Outcome {
  int code;
  std::string log;
  std::string err;
};

Outcome run(const std::string& command, const fs::path& config, const fs::path& out,
            std::optional<std::uint64_t> seed = std::nullopt) {
  std::ostringstream log;
  std::ostringstream err;
  RunOptions opt;
  opt.config_path = config;
  opt.out_dir = out;
  opt.seed = seed;
  const int code = run_command(command, opt, log, err);
  return {code, log.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const char* kTinyTrain =
    "seed = 3\n"
    "[train]\nlayers = 3\nchannels = 4\npatch_size = 16\npatch_stride = 16\nepochs = 2\n"
    "steps_per_epoch = 5\nbatch_size = 2\nvalidation_patches = 2\n"
    "[corpus]\ncount = 4\nheight = 32\nwidth = 32\n";

fs::path tiny_model(const Workspace& ws) {
  const auto cfg = ws.write("train.cfg", kTinyTrain);
  REQUIRE(run("train", cfg, ws.path("model")).code == kExitOk);
  return ws.path("model") / "model.tsdn";
}

}  // namespace

TEST_CASE("verify exit codes") {
  Workspace ws("verify");
  const auto ok = ws.write("ok.cfg", "seed = 1\n[verify]\ntrials = 300\n");
  const Outcome a = run("verify", ok, ws.path("a"));
  CHECK(a.code == kExitOk);
  const std::string csv = slurp(ws.path("a") / "verify.csv");
  CHECK(csv.rfind("norm,check,trials,violations,rate,threshold,passed\n", 0) == 0);
  CHECK(slurp(ws.path("a") / "bounds.csv").find("b2_bits,") != std::string::npos);
  const std::string manifest = slurp(ws.path("a") / "manifest.txt");
  CHECK(manifest.find("command = verify") != std::string::npos);
  CHECK(manifest.find("seed = 1") != std::string::npos);
  CHECK(manifest.find("trials = 300") != std::string::npos);
  CHECK(manifest.find("epsilon = 0.05") != std::string::npos);

  const auto tight = ws.write("tight.cfg", "[verify]\ntrials = 200\nepsilon = 1e-6\n");
  CHECK(run("verify", tight, ws.path("b")).code == kExitThreshold);
  CHECK(slurp(ws.path("b") / "verify.csv").find(",false\n") != std::string::npos);

  CHECK(run("verify", ws.write("bad.cfg", "[verify\ntrials = 3\n"), ws.path("c")).code == kExitUsage);
  const Outcome typo = run("verify", ws.write("typo.cfg", "[verify]\ntrails = 3\n"), ws.path("d"));
  CHECK(typo.code == kExitUsage);
  CHECK(typo.err.find("verify.trails") != std::string::npos);
  CHECK(run("verify", ws.path("missing.cfg"), ws.path("e")).code == kExitUsage);
  CHECK(run("verify", ws.write("neg.cfg", "[verify]\nsigma = -1\n"), ws.path("f")).code == kExitUsage);
  CHECK(run("bogus", ok, ws.path("g")).code == kExitUsage);
}

TEST_CASE("sample command") {
  Workspace ws("sample");
  const auto one = ws.write("one.cfg", "[sample]\ndraws = 1\n");
  REQUIRE(run("sample", one, ws.path("one")).code == kExitOk);
  CHECK(line_count(slurp(ws.path("one") / "histogram.csv")) == 2);

  const auto normal = ws.write("normal.cfg", "seed = 5\n[sample]\ndraws = 200\ndim = 1600\n");
  const auto def = ws.write("def.cfg", "seed = 5\n[sample]\ndraws = 200\ndim = 1600\nstrategy = ts-def\n");
  REQUIRE(run("sample", normal, ws.path("n1")).code == kExitOk);
  REQUIRE(run("sample", normal, ws.path("n2")).code == kExitOk);
  REQUIRE(run("sample", def, ws.path("d")).code == kExitOk);
  CHECK(slurp(ws.path("n1") / "histogram.csv") == slurp(ws.path("n2") / "histogram.csv"));
  CHECK(slurp(ws.path("n1") / "summary.csv") == slurp(ws.path("n2") / "summary.csv"));
  CHECK(run("sample", normal, ws.path("n3"), 6).code == kExitOk);
  CHECK(slurp(ws.path("n1") / "histogram.csv") != slurp(ws.path("n3") / "histogram.csv"));
  CHECK(slurp(ws.path("n3") / "manifest.txt").find("seed = 6") != std::string::npos);

  const auto mean_of = [&](const fs::path& p) {
    const std::string s = slurp(p);
    const auto row = s.substr(s.find('\n') + 1);
    std::stringstream ss(row);
    std::string field;
    for (int i = 0; i < 4; ++i) std::getline(ss, field, ',');
    return std::stod(field);
  };
  CHECK(mean_of(ws.path("d") / "summary.csv") > mean_of(ws.path("n1") / "summary.csv"));
}

TEST_CASE("train command") {
  Workspace ws("train");
  const auto cfg = ws.write("train.cfg", kTinyTrain);
  REQUIRE(run("train", cfg, ws.path("a")).code == kExitOk);
  REQUIRE(run("train", cfg, ws.path("b")).code == kExitOk);
  CHECK(slurp(ws.path("a") / "model.tsdn") == slurp(ws.path("b") / "model.tsdn"));
  const std::string history = slurp(ws.path("a") / "history.csv");
  CHECK(history == slurp(ws.path("b") / "history.csv"));
  CHECK(history.rfind("epoch,steps,loss,val_psnr,val_noisy_psnr\n1,5,", 0) == 0);
  CHECK(line_count(history) == 3);

  const auto missing = ws.write("missing.cfg",
                                "[train]\nresume = /nonexistent/model.tsdn\npatch_size = 16\n"
                                "[corpus]\ncount = 2\nheight = 32\nwidth = 32\n");
  const Outcome m = run("train", missing, ws.path("c"));
  CHECK(m.code == kExitUsage);
  CHECK(m.err.find("file error") != std::string::npos);

  const auto demanding = ws.write("demanding.cfg", std::string(kTinyTrain).replace(
                                                       std::string(kTinyTrain).find("[corpus]"), 0,
                                                       "min_val_gain_db = 100\n"));
  CHECK(run("train", demanding, ws.path("d")).code == kExitThreshold);
  CHECK(run("train", ws.write("opt.cfg", "[train]\noptimizer = lbfgs\n"), ws.path("e")).code == kExitUsage);
}

TEST_CASE("attack command") {
  Workspace ws("attack");
  const fs::path model = tiny_model(ws);
  const std::string base = "[model]\npath = " + model.string() + "\n[data]\ncount = 3\nheight = 24\nwidth = 24\n";
  const auto cfg = ws.write("attack.cfg", base);
  REQUIRE(run("attack", cfg, ws.path("a")).code == kExitOk);
  REQUIRE(run("attack", cfg, ws.path("b")).code == kExitOk);
  CHECK(slurp(ws.path("a") / "attack.csv") == slurp(ws.path("b") / "attack.csv"));
  CHECK(line_count(slurp(ws.path("a") / "attack.csv")) == 4);
  const auto adv = ws.path("a") / "adv" / "data-0.pgm";
  REQUIRE(fs::exists(adv));
  CHECK(slurp(adv).rfind("P5\n24 24\n65535\n", 0) == 0);
  CHECK(read_pgm(adv).height() == 24);

  const auto idle = ws.write("idle.cfg", base + "[attack]\nsteps = 0\nrandom_init = false\nwrite_images = false\n");
  REQUIRE(run("attack", idle, ws.path("c")).code == kExitOk);
  const std::string summary = slurp(ws.path("c") / "summary.csv");
  CHECK(summary.find("\n3,") != std::string::npos);
  CHECK(summary.substr(summary.find('\n') + 1).find(",0,") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.path("c") / "adv"));

  const auto strict = ws.write("strict.cfg", base + "[attack]\nmin_drop_db = 50\n");
  CHECK(run("attack", strict, ws.path("d")).code == kExitThreshold);

  const auto nomodel = ws.write("nomodel.cfg", "[model]\npath = /nonexistent.tsdn\n");
  const Outcome o = run("attack", nomodel, ws.path("e"));
  CHECK(o.code == kExitUsage);
  CHECK(o.err.find("file error") != std::string::npos);

  const auto corrupt = ws.write("corrupt.tsdn", "TSDX");
  const auto badmodel = ws.write("badmodel.cfg", "[model]\npath = " + corrupt.string() + "\n");
  const Outcome f = run("attack", badmodel, ws.path("f"));
  CHECK(f.code == kExitUsage);
  CHECK(f.err.find("byte offset 0") != std::string::npos);
}

TEST_CASE("probe command") {
  Workspace ws("probe");
  const fs::path model = tiny_model(ws);
  const std::string base = "[model]\npath = " + model.string() + "\n[data]\ncount = 1\nheight = 32\nwidth = 32\n";

  REQUIRE(run("probe", ws.write("radar.cfg", base + "[probe]\nkind = radar\nni = 8\nnj = 3\n"), ws.path("r")).code ==
          kExitOk);
  const std::string radar = slurp(ws.path("r") / "radar.csv");
  CHECK(line_count(radar) == 25);
  CHECK(radar.rfind("theta,gamma_or_phi,score\n0,0,0\n", 0) == 0);

  REQUIRE(run("probe", ws.write("sphere.cfg", base + "[probe]\nkind = sphere\nni = 6\nnj = 5\nradius = 0\n"),
              ws.path("s"))
              .code == kExitOk);
  const std::string sphere = slurp(ws.path("s") / "sphere.csv");
  CHECK(line_count(sphere) == 31);
  std::stringstream rows(sphere.substr(sphere.find('\n') + 1));
  std::string line;
  while (std::getline(rows, line)) CHECK(line.substr(line.rfind(',') + 1) == "0");

  REQUIRE(run("probe", ws.write("blend.cfg", base + "[probe]\nkind = blend\nlambdas = 0.25,0.5\n"), ws.path("b"))
              .code == kExitOk);
  const std::string blend = slurp(ws.path("b") / "blend.csv");
  CHECK(blend.rfind("lambda,score\n0.25,", 0) == 0);
  CHECK(line_count(blend) == 3);

  const auto patch = ws.write("patch.cfg", base +
                                               "[probe]\nkind = patch\nregion_top = 8\nregion_left = 8\n"
                                               "region_height = 16\nregion_width = 16\n");
  REQUIRE(run("probe", patch, ws.path("p")).code == kExitOk);
  const std::string pcsv = slurp(ws.path("p") / "patch.csv");
  CHECK(pcsv.find("local-craft,") != std::string::npos);
  CHECK(pcsv.find("crop-global,") != std::string::npos);
  CHECK(pcsv.find(",0\n") != std::string::npos);

  const auto outside = ws.write("outside.cfg", base + "[probe]\nkind = patch\nregion_top = 30\n");
  CHECK(run("probe", outside, ws.path("o")).code == kExitUsage);
  CHECK(run("probe", ws.write("kind.cfg", base + "[probe]\nkind = cube\n"), ws.path("k")).code == kExitUsage);
}

TEST_CASE("eval command") {
  Workspace ws("eval");
  const fs::path model = tiny_model(ws);
  const std::string base = "[model]\npath = " + model.string() + "\n[data]\ncount = 2\nheight = 16\nwidth = 16\n";
  REQUIRE(run("eval", ws.write("eval.cfg", base), ws.path("a")).code == kExitOk);
  const std::string metrics = slurp(ws.path("a") / "metrics.csv");
  CHECK(metrics.rfind("id,image,psnr,ssim,mae\ndata-0,clean,inf,1,0\n", 0) == 0);
  CHECK(line_count(metrics) == 11);
  CHECK_FALSE(fs::exists(ws.path("a") / "transfer.csv"));

  const auto pair = ws.write("pair.cfg", base + "[eval]\nmodel_b = " + model.string() + "\n");
  REQUIRE(run("eval", pair, ws.path("b")).code != kExitUsage);
  const std::string transfer = slurp(ws.path("b") / "transfer.csv");
  CHECK(transfer.rfind("id,outcome,loss_noisy,loss_a_benign,loss_a_adv,loss_b_benign,loss_b_adv\n", 0) == 0);
  CHECK(line_count(transfer) == 3);
  CHECK(slurp(ws.path("b") / "summary.csv").rfind("images,transferable,not_transferable,attack_failed", 0) == 0);

  const auto strict = ws.write("strict.cfg", base + "[eval]\nmodel_b = " + model.string() +
                                                 "\nmin_transfer_fraction = 1.5\n");
  CHECK(run("eval", strict, ws.path("c")).code == kExitThreshold);
  const auto missing = ws.write("missing.cfg", base + "[eval]\nmodel_b = /nonexistent.tsdn\n");
  CHECK(run("eval", missing, ws.path("d")).code == kExitUsage);
}

TEST_CASE("pgm image sets") {
  Workspace ws("pgmset");
  fs::create_directories(ws.path("imgs"));
  const auto images = synthetic_corpus(2, 16, 16, 1);
  write_pgm(images[0], ws.path("imgs") / "b.pgm", 255);
  write_pgm(images[1], ws.path("imgs") / "a.pgm", 65535);
  Config cfg = Config::parse("[data]\nsource = pgm\ndir = " + ws.path("imgs").string() + "\n");
  const ImageSet set = load_image_set(cfg, "data", 1, 1, 16);
  CHECK(set.ids == std::vector<std::string>{"a", "b"});
  CHECK(set.images[1].height() == 16);

  const auto p2 = ws.write("ascii.pgm", "P2\n1 1\n255\n0\n");
  Config bad = Config::parse("[data]\nsource = pgm\nfiles = " + p2.string() + "\n");
  CHECK_THROWS(load_image_set(bad, "data", 1, 1, 16));

  const fs::path model = tiny_model(ws);
  const auto cfg_file = ws.write("eval.cfg", "[model]\npath = " + model.string() +
                                                 "\n[data]\nsource = pgm\nfiles = " + p2.string() + "\n");
  const Outcome o = run("eval", cfg_file, ws.path("out"));
  CHECK(o.code == kExitUsage);
  CHECK(o.err.find("unsupported format") != std::string::npos);
}

#ifdef TSLAB_CLI_PATH
TEST_CASE("command-line parsing") {
  const std::string cli = TSLAB_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(cli) == kExitUsage);
  CHECK(status(cli + " verify") == kExitUsage);
  CHECK(status(cli + " frobnicate --config x") == kExitUsage);
  CHECK(status(cli + " verify --config /nonexistent.cfg") == kExitUsage);
  CHECK(status(cli + " --help") == 0);

  Workspace ws("cli");
  const auto cfg = ws.write("v.cfg", "[verify]\ntrials = 50\nnorm = linf\n");
  CHECK(status(cli + " verify --config " + cfg.string() + " --seed 9 --out " + ws.path("o").string()) == kExitOk);
  CHECK(slurp(ws.path("o") / "manifest.txt").find("seed = 9") != std::string::npos);
}
#endif
