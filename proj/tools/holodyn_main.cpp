#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "holodyn/cli.hpp"
#include "holodyn/errors.hpp"
#include "holodyn/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"holodyn: coding-tree measures for holomorphic maps"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed_override = 0;
  int threads = 0;
  bool have_seed = false, have_out = false;

  auto* run = app.add_subcommand("run", "execute one configured experiment");
  run->add_option("--config", config_path, "JSON config file")->required();
  auto* out_opt = run->add_option("--out", out_dir, "override the output directory");
  auto* seed_opt = run->add_option("--seed-override", seed_override, "override the root seed");
  run->add_option("--threads", threads, "worker thread cap (0 = default)");

  std::vector<std::string> manifests;
  auto* rep = app.add_subcommand("report", "merge run manifests into a summary table");
  rep->add_option("manifests", manifests, "manifest.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }
  have_out = out_opt->count() > 0;
  have_seed = seed_opt->count() > 0;

  try {
    if (run->parsed()) {
      holodyn::cli::RunOverrides ov;
      if (have_out) ov.out_dir = out_dir;
      if (have_seed) ov.seed = seed_override;
      if (threads > 0) ov.threads = threads;
      const auto manifest = holodyn::cli::run_config(
          holodyn::io::read_json_file(config_path), ov);
      std::cout << manifest.dump(2) << "\n";
    } else {
      std::cout << holodyn::cli::report(manifests);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return holodyn::cli::exit_code_for(e);
  }
  return 0;
}
