#include "anosov/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for contact Anosov flows"};
  app.require_subcommand(1, 1);

  anosov::cli::RunOptions opt;
  std::string out;
  std::uint64_t seed = 0;
  for (const std::string& name : anosov::cli::commands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", opt.config_path, "JSON config file")->required();
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "base orbit seed (overrides orbit.seed)");
    sub->add_option("--threads", opt.threads, "worker threads for the orbit ensemble")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : anosov::cli::kConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  opt.command = sub->get_name();
  if (sub->count("--out")) opt.out_dir = out;
  if (sub->count("--seed")) opt.seed = seed;
  return anosov::cli::run(opt, std::cerr);
}
