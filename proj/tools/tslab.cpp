#include <iostream>

#include "CLI11.hpp"
#include "tslab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tslab: typical-set adversarial robustness lab for image denoisers"};
  app.require_subcommand(1);

  tslab::RunOptions options;
  std::uint64_t seed = 0;
  for (const auto& name : tslab::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", options.config_path, "key=value config file")->required();
    sub->add_option("--seed", seed, "override the config's top-level seed");
    sub->add_option("--out", options.out_dir, "output directory")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tslab::kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed") > 0) options.seed = seed;
  return tslab::run_command(chosen->get_name(), options, std::cout, std::cerr);
}
