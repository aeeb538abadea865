#include "poets/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "poets/oracle.hpp"

namespace poets {

const char* const kCsvHeader =
    "round,best_seen,expected_reward,entropy,jsd,soft_regret,cum_soft_regret";

namespace {

const std::vector<std::string> kAllMetrics = {
    "best_seen", "expected_reward", "entropy", "jsd", "soft_regret", "cum_soft_regret"};

int log_rank(const std::string& level) {
  if (level == "debug") return 0;
  if (level == "info") return 1;
  if (level == "warn") return 2;
  return 3;
}

int active_log_rank() {
  static const int rank = [] {
    const char* env = std::getenv("POETS_LOG");
    return env ? log_rank(env) : log_rank("warn");
  }();
  return rank;
}

double metric_value(const MetricsRecord& r, const std::string& name) {
  if (name == "best_seen") return r.best_seen;
  if (name == "expected_reward") return r.expected_reward;
  if (name == "entropy") return r.entropy;
  if (name == "jsd") return r.jsd;
  if (name == "soft_regret") return r.soft_regret;
  if (name == "cum_soft_regret") return r.cum_soft_regret;
  throw ConfigError("unknown metric: " + name);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

BanditSpec spec_from_json(const nlohmann::json& je) {
  BanditSpec spec;
  spec.kind = je.value("kind", spec.kind);
  spec.n_actions = je.value("n_actions", spec.n_actions);
  spec.kernel = je.value("kernel", spec.kernel);
  spec.lengthscale = je.value("lengthscale", spec.lengthscale);
  spec.noise_std = je.value("noise_std", spec.noise_std);
  spec.bounded = je.value("bounded", spec.bounded);
  spec.seed = je.value("seed", spec.seed);
  spec.plateau_frac = je.value("plateau_frac", spec.plateau_frac);
  spec.gap = je.value("gap", spec.gap);

  const std::string features = je.value("features", std::string("grid"));
  if (features == "grid") {
    // realize() defaults to the 1-D grid when no features are given
  } else if (features == "onehot") {
    spec.action_features =
        Eigen::MatrixXd::Identity(spec.n_actions, spec.n_actions);
  } else if (features == "random") {
    const int dim = je.value("feature_dim", 4);
    RngStream frng(mix_seeds(spec.seed, 0xFEA7));
    spec.action_features.resize(spec.n_actions, dim);
    for (int a = 0; a < spec.n_actions; ++a)
      for (int d = 0; d < dim; ++d) spec.action_features(a, d) = frng.normal();
  } else {
    throw ConfigError("unknown feature scheme: " + features);
  }
  return spec;
}

TrainerConfig trainer_from_json(const nlohmann::json& jt) {
  TrainerConfig cfg;
  cfg.n_members = jt.value("n_members", cfg.n_members);
  cfg.group_size = jt.value("group_size", cfg.group_size);
  cfg.buffer_capacity = jt.value("buffer_capacity", cfg.buffer_capacity);
  cfg.coeffs.alpha = jt.value("alpha", cfg.coeffs.alpha);
  cfg.coeffs.beta = jt.value("beta", cfg.coeffs.beta);
  cfg.trunk_lr = jt.value("trunk_lr", cfg.trunk_lr);
  cfg.branch_lr = jt.value("branch_lr", cfg.branch_lr);
  cfg.adam_beta1 = jt.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = jt.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = jt.value("adam_eps", cfg.adam_eps);
  cfg.grad_clip_norm = jt.value("grad_clip_norm", cfg.grad_clip_norm);
  cfg.clip_eps = jt.value("clip_eps", cfg.clip_eps);
  cfg.standardize = jt.value("standardize", cfg.standardize);
  cfg.temperature = jt.value("temperature", cfg.temperature);
  cfg.lambda = jt.value("lambda", cfg.lambda);
  cfg.total_rounds = jt.value("total_rounds", cfg.total_rounds);
  cfg.rank = jt.value("rank", cfg.rank);
  cfg.trunk_init = jt.value("trunk_init", cfg.trunk_init);
  cfg.ramp_scale = jt.value("ramp_scale", cfg.ramp_scale);
  return cfg;
}

void write_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << kCsvHeader << "\n";
  for (const MetricsRecord& r : records) {
    out << r.round;
    for (const std::string& name : kAllMetrics)
      out << ',' << format_double(metric_value(r, name));
    out << "\n";
  }
}

}  // namespace

void log_message(const std::string& level, const std::string& message) {
  if (log_rank(level) >= active_log_rank()) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[poets:" << level << "] " << message << "\n";
  }
}

void ExperimentManifest::validate() const {
  if (method != "poets" && method != "grpo" && method != "exact_ts")
    throw ConfigError("unknown method: " + method);
  if (seeds.empty()) throw ConfigError("seed list must not be empty");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw ConfigError("seeds must be distinct");
  if (out_dir.empty()) throw ConfigError("output directory must be set");
  if (env_specs.empty()) throw ConfigError("manifest needs an env spec");
  for (const std::string& m : metrics)
    (void)metric_value(MetricsRecord{}, m);  // rejects unknown names
  trainer.validate();
}

ExperimentManifest manifest_from_json(const nlohmann::json& config) {
  ExperimentManifest m;
  m.method = config.value("method", m.method);
  if (config.contains("seeds"))
    m.seeds = config.at("seeds").get<std::vector<std::uint64_t>>();
  m.out_dir = config.value("out", std::string());
  if (config.contains("metrics"))
    m.metrics = config.at("metrics").get<std::vector<std::string>>();
  if (config.contains("trainer")) m.trainer = trainer_from_json(config.at("trainer"));
  m.oracle_eta_floor = config.value("oracle_eta_floor", m.oracle_eta_floor);

  if (config.contains("env")) {
    const nlohmann::json& je = config.at("env");
    const int contexts = je.value("contexts", 1);
    if (contexts < 1) throw ConfigError("contexts must be >= 1");
    for (int c = 0; c < contexts; ++c) m.env_specs.push_back(spec_from_json(je));
  }

  // The single-policy baseline is the degenerate corner of the same trainer:
  // one member, no bootstrap reweighting.
  if (m.method == "grpo") {
    m.trainer.n_members = 1;
    m.trainer.lambda = 0.0;
  }
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  nlohmann::json config;
  try {
    in >> config;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentManifest m = manifest_from_json(config);
  m.config_path = path;
  return m;
}

std::vector<MetricsRecord> run_exact_ts(const ExperimentManifest& manifest,
                                        std::uint64_t seed) {
  const BanditSpec& spec = manifest.env_specs.front();
  RngStream env_rng(mix_seeds(spec.seed, seed));
  RealizedBandit bandit = realize(spec, env_rng);
  const RewardVector true_r{bandit.true_rewards(), false};

  const double eta = std::max(spec.noise_std, manifest.oracle_eta_floor);
  GaussianBelief belief = make_prior(kernel_matrix(spec), eta);
  const PolicyDistribution ref = distribution_from_probs(
      Eigen::VectorXd::Constant(spec.n_actions, 1.0 / spec.n_actions));
  const RegularizationCoeffs& coeffs = manifest.trainer.coeffs;

  RngStream rng(seed);
  std::vector<MetricsRecord> records;
  records.reserve(static_cast<std::size_t>(manifest.trainer.total_rounds));
  double best = -std::numeric_limits<double>::infinity();
  double cum_regret = 0.0;

  for (int round = 0; round < manifest.trainer.total_rounds; ++round) {
    const TsRound ts = exact_ts_round(belief, ref, coeffs, rng);

    MetricsRecord rec;
    rec.round = round;
    rec.jsd = 0.0;
    rec.entropy = entropy(ts.policy);
    rec.expected_reward = ts.policy.probs.dot(true_r.values);
    rec.soft_regret = soft_regret(ts.policy, true_r, ref, coeffs);
    cum_regret += rec.soft_regret;
    rec.cum_soft_regret = cum_regret;

    const int action = rng.categorical(ts.policy.probs);
    const double y = bandit.evaluate(action, rng);
    best = std::max(best, y);
    rec.best_seen = best;
    belief = posterior_update(belief, action, y);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<MetricsRecord> run_seed(const ExperimentManifest& manifest,
                                    std::uint64_t seed) {
  if (manifest.method == "exact_ts") return run_exact_ts(manifest, seed);
  TrainerConfig cfg = manifest.trainer;
  cfg.seed = seed;
  return run_experiment(cfg, manifest.env_specs);
}

namespace {

nlohmann::json summarize(const ExperimentManifest& manifest,
                         const std::vector<std::vector<MetricsRecord>>& per_seed) {
  const std::vector<std::string>& selected =
      manifest.metrics.empty() ? kAllMetrics : manifest.metrics;
  const std::size_t n_rounds = per_seed.front().size();
  const double k = static_cast<double>(per_seed.size());

  nlohmann::json jm;
  for (const std::string& name : selected) {
    std::vector<double> mean(n_rounds, 0.0), stderr_v(n_rounds, 0.0);
    for (std::size_t t = 0; t < n_rounds; ++t) {
      double sum = 0.0;
      for (const auto& rows : per_seed) sum += metric_value(rows[t], name);
      mean[t] = sum / k;
      if (per_seed.size() > 1) {
        double ss = 0.0;
        for (const auto& rows : per_seed) {
          const double d = metric_value(rows[t], name) - mean[t];
          ss += d * d;
        }
        stderr_v[t] = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
      }
    }
    jm[name] = {{"mean", mean}, {"stderr", stderr_v}};
  }

  nlohmann::json summary;
  summary["method"] = manifest.method;
  summary["seeds"] = manifest.seeds;
  summary["rounds"] = n_rounds;
  summary["metrics"] = std::move(jm);

  if (manifest.method == "exact_ts") {
    const BanditSpec& spec = manifest.env_specs.front();
    const double eta = std::max(spec.noise_std, manifest.oracle_eta_floor);
    const GaussianBelief prior = make_prior(kernel_matrix(spec), eta);
    const int horizon = manifest.trainer.total_rounds;
    const std::vector<double> gamma_trace = greedy_gamma_trace(prior, horizon, eta);
    std::vector<double> bound_trace(gamma_trace.size());
    for (std::size_t t = 0; t < gamma_trace.size(); ++t)
      bound_trace[t] =
          regret_bound(static_cast<int>(t) + 1, gamma_trace[t], spec.n_actions, eta);
    summary["bound"] = {{"beta_conf", confidence_beta(spec.n_actions)},
                        {"c_eta", noise_constant(eta)},
                        {"eta", eta},
                        {"gamma", gamma_trace.empty() ? 0.0 : gamma_trace.back()},
                        {"trace", bound_trace}};
  }
  return summary;
}

}  // namespace

int run(const ExperimentManifest& manifest, int parallel) {
  try {
    manifest.validate();
    namespace fs = std::filesystem;
    const fs::path method_dir = fs::path(manifest.out_dir) / manifest.method;
    fs::create_directories(method_dir);

    const std::size_t n_seeds = manifest.seeds.size();
    std::vector<std::vector<MetricsRecord>> per_seed(n_seeds);

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mu;
    auto worker = [&] {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= n_seeds) return;
        try {
          const std::uint64_t seed = manifest.seeds[idx];
          log_message("info", "running " + manifest.method + " seed " +
                                  std::to_string(seed));
          per_seed[idx] = run_seed(manifest, seed);
          write_csv((method_dir / ("seed" + std::to_string(seed) + ".csv")).string(),
                    per_seed[idx]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };

    const int n_workers =
        std::max(1, std::min<int>(parallel, static_cast<int>(n_seeds)));
    if (n_workers == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      threads.reserve(static_cast<std::size_t>(n_workers));
      for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
      for (std::thread& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    const nlohmann::json summary = summarize(manifest, per_seed);
    std::ofstream out(fs::path(manifest.out_dir) / "summary.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write summary.json in " + manifest.out_dir);
    out << summary.dump(2) << "\n";
    return 0;
  } catch (const ConfigError& e) {
    log_message("error", std::string("config error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log_message("error", std::string("numerical abort: ") + e.what());
    return 3;
  }
}

namespace {

struct CsvTable {
  std::vector<std::string> columns;              // without the round column
  std::vector<std::vector<double>> rows;         // [round][column]
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read csv: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty csv: " + path);
  std::stringstream header(line);
  std::string cell;
  bool first = true;
  while (std::getline(header, cell, ',')) {
    if (!first) table.columns.push_back(cell);
    first = false;
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    bool lead = true;
    while (std::getline(row, cell, ',')) {
      if (!lead) values.push_back(std::stod(cell));
      lead = false;
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

}  // namespace

int compare(const std::vector<ExperimentManifest>& manifests,
            const std::string& out_path) {
  try {
    if (manifests.empty()) throw ConfigError("compare needs at least one manifest");

    // Per manifest: per-round mean of each metric across its seed CSVs.
    std::vector<CsvTable> mean_tables;
    std::vector<std::string> labels;
    std::size_t min_rounds = std::numeric_limits<std::size_t>::max();
    for (const ExperimentManifest& m : manifests) {
      m.validate();
      namespace fs = std::filesystem;
      CsvTable acc;
      bool first_seed = true;
      for (std::uint64_t seed : m.seeds) {
        const fs::path p = fs::path(m.out_dir) / m.method /
                           ("seed" + std::to_string(seed) + ".csv");
        CsvTable t = read_csv(p.string());
        if (first_seed) {
          acc = std::move(t);
          first_seed = false;
        } else {
          if (t.rows.size() != acc.rows.size())
            throw ConfigError("seed CSVs of one manifest disagree on length");
          for (std::size_t r = 0; r < t.rows.size(); ++r)
            for (std::size_t c = 0; c < t.rows[r].size(); ++c)
              acc.rows[r][c] += t.rows[r][c];
        }
      }
      const double k = static_cast<double>(m.seeds.size());
      for (auto& row : acc.rows)
        for (double& v : row) v /= k;
      min_rounds = std::min(min_rounds, acc.rows.size());
      mean_tables.push_back(std::move(acc));
      labels.push_back(m.method);
    }

    // Disambiguate repeated method names.
    for (std::size_t i = 0; i < labels.size(); ++i) {
      int repeat = 1;
      for (std::size_t j = 0; j < i; ++j)
        if (manifests[j].method == manifests[i].method) ++repeat;
      if (repeat > 1) labels[i] += "_" + std::to_string(repeat);
    }

    bool truncated = false;
    for (const CsvTable& t : mean_tables)
      if (t.rows.size() != min_rounds) truncated = true;
    if (truncated)
      log_message("warn", "compare: manifests have unequal round counts; "
                          "truncating to " + std::to_string(min_rounds));

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + out_path);
    out << "round";
    for (std::size_t i = 0; i < mean_tables.size(); ++i)
      for (const std::string& col : mean_tables[i].columns)
        out << ',' << labels[i] << '_' << col;
    out << "\n";
    for (std::size_t r = 0; r < min_rounds; ++r) {
      out << r;
      for (const CsvTable& t : mean_tables)
        for (double v : t.rows[r]) out << ',' << format_double(v);
      out << "\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    log_message("error", std::string("config error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log_message("error", std::string("numerical abort: ") + e.what());
    return 3;
  }
}

}  // namespace poets
