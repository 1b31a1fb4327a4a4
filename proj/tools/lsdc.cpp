#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lsdc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Low-storage distributed coding: design, sweeps, baselines and network experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  const std::pair<const char*, lsdc::Verb> verbs[] = {
      {"design", lsdc::Verb::design},
      {"sweep", lsdc::Verb::sweep},
      {"dir", lsdc::Verb::dir},
      {"gen", lsdc::Verb::gen},
      {"baselines", lsdc::Verb::baselines},
  };
  const char* help[] = {
      "design at the first lambda of the grid",
      "sweep the lambda grid and run the configured baselines",
      "multi-sink network experiment",
      "write synthetic data to <out>/data.csv",
      "run only the baselines",
  };
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < std::size(verbs); ++k) {
    CLI::App* sub = app.add_subcommand(verbs[k].first, help[k]);
    sub->add_option("-c,--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("-s,--seed", seed, "design seed (overrides design.seed)");
    sub->add_option("-j,--threads", threads, "worker threads (overrides output.threads)")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    lsdc::ExperimentConfig config = lsdc::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    for (std::size_t k = 0; k < subs.size(); ++k) {
      if (!subs[k]->parsed()) continue;
      const lsdc::ExperimentResult result = lsdc::run_experiment(config, verbs[k].second);
      if (verbs[k].second != lsdc::Verb::gen) {
        lsdc::emit_curves(result.points, config.output_dir);
        std::cout << "wrote " << result.points.size() << " rows to "
                  << (std::filesystem::path(config.output_dir) / "curves.csv").string() << "\n";
      }
      std::cout << result.summary;
    }
  } catch (const std::exception& e) {
    std::cerr << "lsdc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
