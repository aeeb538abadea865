#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "poets/diagnostics.hpp"
#include "poets/envs.hpp"
#include "poets/trainer.hpp"

namespace poets {

// A fully resolved experiment: which method to run, on which environment,
// with which seeds, and where the artifacts go. Built from a JSON config file
// plus command-line overrides.
struct ExperimentManifest {
  std::string config_path;  // provenance only
  std::string method = "poets";  // "poets" | "grpo" | "exact_ts"
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::vector<std::string> metrics;  // summary filter; empty selects all
  TrainerConfig trainer;
  std::vector<BanditSpec> env_specs;
  double oracle_eta_floor = 1e-3;  // belief noise floor for noiseless envs

  void validate() const;  // throws ConfigError
};

// Parse a manifest from JSON. The "grpo" method is the degenerate single-
// policy baseline: it forces n_members = 1 and lambda = 0 regardless of the
// trainer block.
ExperimentManifest manifest_from_json(const nlohmann::json& config);
ExperimentManifest load_manifest(const std::string& path);

// The exact-posterior reference method: per round, draw a reward vector from
// the Gaussian belief, act by its closed-form optimal policy, observe one
// reward, condition the belief. Returns the same per-round metrics as the
// trainer (jsd is 0; there is only one policy).
std::vector<MetricsRecord> run_exact_ts(const ExperimentManifest& manifest,
                                        std::uint64_t seed);

// Run one seed of the manifest's method and return its metric rows.
std::vector<MetricsRecord> run_seed(const ExperimentManifest& manifest,
                                    std::uint64_t seed);

// Execute the whole manifest: every seed (optionally across `parallel`
// workers), one CSV per seed at <out>/<method>/seed<k>.csv, plus
// <out>/summary.json with per-round mean and standard error per metric across
// seeds (and the regret-bound trace for exact_ts). Returns a process exit
// code: 0 success, 2 configuration error, 3 numerical abort.
int run(const ExperimentManifest& manifest, int parallel = 1);

// Merge the per-round mean metrics of several completed manifests into one
// wide CSV at out_path (columns round, then <method>_<metric> per manifest).
// Manifests of unequal length are truncated to the shortest with a warning.
int compare(const std::vector<ExperimentManifest>& manifests, const std::string& out_path);

// Fixed column order of every per-seed CSV.
extern const char* const kCsvHeader;

// Logging controlled by the POETS_LOG environment variable
// (debug < info < warn < error; default warn). Messages go to stderr.
void log_message(const std::string& level, const std::string& message);

}  // namespace poets
