// Experiment runner. `poets run` executes one manifest (a JSON config plus
// command-line overrides) across seeds and writes per-seed CSVs and a summary;
// `poets compare` merges the mean curves of several completed manifests into
// one wide CSV for side-by-side plots.

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poets/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string token;
  for (char ch : text) {
    if (ch == ',') {
      if (!token.empty()) seeds.push_back(std::stoull(token));
      token.clear();
    } else {
      token += ch;
    }
  }
  if (!token.empty()) seeds.push_back(std::stoull(token));
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy-ensemble bandit experiments"};
  app.require_subcommand(0, 1);

  std::string config_path, seeds_text, out_dir, method;
  int parallel = 1;

  // `run` is also the default when no subcommand is given.
  CLI::App* run_cmd = app.add_subcommand("run", "execute a manifest");
  for (CLI::App* target : {run_cmd, &app}) {
    target->add_option("--config", config_path, "JSON experiment config");
    target->add_option("--seeds", seeds_text, "comma-separated seed list override");
    target->add_option("--out", out_dir, "output directory override");
    target->add_option("--method", method, "method override: poets|grpo|exact_ts");
    target->add_option("--parallel", parallel, "number of seed workers");
  }

  CLI::App* compare_cmd = app.add_subcommand("compare", "merge completed manifests");
  std::vector<std::string> compare_configs;
  std::string compare_out;
  compare_cmd->add_option("--config", compare_configs, "configs to merge (repeatable)")
      ->required();
  compare_cmd->add_option("--out", compare_out, "merged CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (compare_cmd->parsed()) {
      std::vector<poets::ExperimentManifest> manifests;
      for (const std::string& path : compare_configs)
        manifests.push_back(poets::load_manifest(path));
      return poets::compare(manifests, compare_out);
    }

    if (config_path.empty()) {
      poets::log_message("error", "--config is required");
      return 2;
    }
    poets::ExperimentManifest manifest = poets::load_manifest(config_path);
    if (!seeds_text.empty()) manifest.seeds = parse_seed_list(seeds_text);
    if (!out_dir.empty()) manifest.out_dir = out_dir;
    if (!method.empty()) {
      manifest.method = method;
      if (method == "grpo") {
        manifest.trainer.n_members = 1;
        manifest.trainer.lambda = 0.0;
      }
    }
    return poets::run(manifest, parallel);
  } catch (const poets::ConfigError& e) {
    poets::log_message("error", std::string("config error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    poets::log_message("error", std::string("abort: ") + e.what());
    return 3;
  }
}
