#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tslab/config.hpp"
#include "tslab/numerics.hpp"

namespace tslab {

enum ExitCode : int { kExitOk = 0, kExitThreshold = 1, kExitUsage = 2 };

struct RunOptions {
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;  ///< overrides the config's top-level seed
  std::filesystem::path out_dir = "tslab-out";
};

/// Loaded configuration plus the resolved output directory. Commands read
/// their parameters through `config`, which records every resolved value.
struct RunContext {
  Config config;
  std::filesystem::path out_dir;
  std::ostream* log = nullptr;
};

int cmd_verify(RunContext& ctx);
int cmd_sample(RunContext& ctx);
int cmd_train(RunContext& ctx);
int cmd_attack(RunContext& ctx);
int cmd_probe(RunContext& ctx);
int cmd_eval(RunContext& ctx);

const std::vector<std::string>& command_names();

/// Loads the config, applies the seed override, runs the command, writes
/// manifest.txt and maps errors onto exit codes (usage and format errors: 2).
int run_command(const std::string& command, const RunOptions& options, std::ostream& log,
                std::ostream& err);

/// Clean images named by the [<section>] keys: source = synthetic | pgm.
/// synthetic: count, height, width, seed, half = all | first | second.
/// pgm: files (comma separated) or dir (every *.pgm, sorted by name).
struct ImageSet {
  std::vector<std::string> ids;
  std::vector<PixelGrid> images;
};
ImageSet load_image_set(Config& config, const std::string& section, std::uint64_t default_seed,
                        std::size_t default_count, int default_size);

}  // namespace tslab
