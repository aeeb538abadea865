#include "poets/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "poets/oracle.hpp"
#include "poets/serialize.hpp"

namespace poets {

void TrainerConfig::validate() const {
  if (n_members < 1) throw ConfigError("n_members must be >= 1");
  if (group_size < 1) throw ConfigError("group_size must be >= 1");
  if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
  if (trunk_lr < 0.0 || branch_lr < 0.0) throw ConfigError("learning rates must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");
  if (clip_eps < 0.0) throw ConfigError("clip_eps must be >= 0");
  if (grad_clip_norm < 0.0) throw ConfigError("grad_clip_norm must be >= 0");
  if (total_rounds < 0) throw ConfigError("total_rounds must be >= 0");
  if (rank < 1) throw ConfigError("rank must be >= 1");
  if (coeffs.alpha < 0.0 || coeffs.beta < 0.0)
    throw ConfigError("alpha and beta must be >= 0");
  if (trunk_init != "zero" && trunk_init != "ramp")
    throw ConfigError("trunk_init must be 'zero' or 'ramp'");
}

TrainerState init_state(const TrainerConfig& config, int n_actions, int n_contexts) {
  config.validate();
  if (n_contexts < 1) throw ConfigError("need at least one context");

  TrainerState state;
  state.rng = RngStream(config.seed);
  state.params =
      make_ensemble(n_actions, n_contexts, config.rank, config.n_members, state.rng);

  if (config.trunk_init == "ramp") {
    // Downward logit ramp in the action index, identical for every context:
    // the frozen reference policy then concentrates on low-index actions.
    for (int a = 0; a < n_actions; ++a) {
      const double logit = -config.ramp_scale * static_cast<double>(a) / (n_actions - 1);
      for (int c = 0; c < n_contexts; ++c) state.params.trunk(a, c) = logit;
    }
  }

  state.features.reserve(static_cast<std::size_t>(n_contexts));
  state.ref_dists.reserve(static_cast<std::size_t>(n_contexts));
  state.buffers.reserve(static_cast<std::size_t>(n_contexts));
  for (int c = 0; c < n_contexts; ++c) {
    ContextFeatures x;
    x.id = c;
    x.phi = Eigen::VectorXd::Zero(n_contexts);
    x.phi[c] = 1.0;
    state.features.push_back(std::move(x));
    // All members coincide at init (zero branch-B), so member 0 is the
    // ensemble average; this snapshot is the frozen reference.
    state.ref_dists.push_back(
        member_distribution(state.params, 0, state.features[c], config.temperature));
    state.buffers.emplace_back(config.buffer_capacity);
  }

  state.adam.m = ParamGradient::zeros_like(state.params);
  state.adam.v = ParamGradient::zeros_like(state.params);
  return state;
}

namespace {

void adam_update_tensor(Eigen::MatrixXd& theta, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                        const Eigen::MatrixXd& g, double lr, const TrainerConfig& cfg,
                        double bias1, double bias2) {
  m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
  v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
  theta.array() -=
      lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + cfg.adam_eps);
}

}  // namespace

void optimizer_step(TrainerState& state, const ParamGradient& grad,
                    const TrainerConfig& config) {
  if (!grad.all_finite()) throw NumericalError("non-finite gradient in optimizer step");

  ParamGradient g = grad;
  if (config.grad_clip_norm > 0.0) {
    const double norm = std::sqrt(g.squared_norm());
    if (norm > config.grad_clip_norm) g.scale(config.grad_clip_norm / norm);
  }

  AdamState& adam = state.adam;
  ++adam.step;
  const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam.step));
  const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam.step));

  adam_update_tensor(state.params.trunk, adam.m.trunk, adam.v.trunk, g.trunk,
                     config.trunk_lr, config, bias1, bias2);
  for (int i = 0; i < state.params.n_members(); ++i) {
    adam_update_tensor(state.params.branch_a[i], adam.m.branch_a[i], adam.v.branch_a[i],
                       g.branch_a[i], config.branch_lr, config, bias1, bias2);
    adam_update_tensor(state.params.branch_b[i], adam.m.branch_b[i], adam.v.branch_b[i],
                       g.branch_b[i], config.branch_lr, config, bias1, bias2);
  }
}

MetricsRecord run_round(TrainerState& state, Environment& env,
                        const TrainerConfig& config) {
  const int n = config.n_members;
  const int g_size = config.group_size;
  const int ctx = state.round % env.n_contexts();
  const ContextFeatures& x = state.features[static_cast<std::size_t>(ctx)];
  const PolicyDistribution& ref = state.ref_dists[static_cast<std::size_t>(ctx)];

  // Behavior-policy metrics, taken before this round's updates.
  std::vector<PolicyDistribution> dists(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    dists[static_cast<std::size_t>(i)] =
        member_distribution(state.params, i, x, config.temperature);
  Eigen::VectorXd mix_probs = Eigen::VectorXd::Zero(state.params.n_actions());
  for (const PolicyDistribution& d : dists) mix_probs += d.probs;
  mix_probs /= static_cast<double>(n);
  PolicyDistribution mixture;
  mixture.probs = mix_probs;
  mixture.log_probs = mix_probs.unaryExpr([](double p) { return safe_log(p); });

  const RewardVector true_r{env.true_rewards(ctx), false};

  MetricsRecord record;
  record.round = state.round;
  record.jsd = normalized_jsd(dists);
  record.entropy = entropy(mixture);
  record.expected_reward = mixture.probs.dot(true_r.values);
  record.soft_regret = soft_regret(mixture, true_r, ref, config.coeffs);

  // Work on a local RNG copy so an environment failure leaves no trace.
  RngStream rng = state.rng;
  RolloutBatch batch = sample_group(state.params, x, g_size, config.temperature, rng);
  Eigen::VectorXd rewards(g_size);
  for (int j = 0; j < g_size; ++j)
    rewards[j] = env.evaluate(ctx, batch.actions[j], rng);
  PoissonWeights weights = draw_weights(rng, n, g_size, config.lambda);

  // Environment evaluation succeeded: commit.
  state.rng = rng;
  batch.rewards = std::move(rewards);
  batch.old_log_probs.resize(n, g_size);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < g_size; ++j)
      batch.old_log_probs(i, j) = dists[static_cast<std::size_t>(i)].log_probs[batch.actions[j]];

  state.best_seen = std::max(state.best_seen, batch.rewards.maxCoeff());
  state.cum_soft_regret += record.soft_regret;
  record.best_seen = state.best_seen;
  record.cum_soft_regret = state.cum_soft_regret;

  ReplayBuffers& buffers = state.buffers[static_cast<std::size_t>(ctx)];
  buffers.push(std::move(batch), std::move(weights));

  // Replay every stored batch, oldest first; one optimizer update per batch,
  // accumulated over all members (the trunk sees every member's gradient, each
  // branch only its own).
  for (int t = 1; t <= buffers.size(); ++t) {
    const ReplayBuffers::Entry entry = buffers.fetch(t);
    ParamGradient accum = ParamGradient::zeros_like(state.params);
    bool any = false;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd w = entry.weights.w.row(i);
      Eigen::VectorXd old_lp;
      const Eigen::VectorXd* old_lp_ptr = nullptr;
      if (config.clip_eps > 0.0) {
        old_lp = entry.batch.old_log_probs.row(i);
        old_lp_ptr = &old_lp;
      }
      std::optional<ParamGradient> g = batch_gradient(
          entry.batch, w, state.params, i, x, ref, config.coeffs, config.temperature,
          config.standardize, config.clip_eps, old_lp_ptr);
      if (g) {
        accum.add_scaled(*g, 1.0);
        any = true;
      }
    }
    if (any) optimizer_step(state, accum, config);
  }

  ++state.round;
  return record;
}

std::vector<MetricsRecord> run_experiment(const TrainerConfig& config,
                                          const std::vector<BanditSpec>& env_specs) {
  config.validate();
  if (env_specs.empty()) throw ConfigError("run_experiment needs at least one env spec");

  // Environment draws are independent across run seeds: mix both seeds into
  // the realization stream.
  RngStream env_rng(mix_seeds(env_specs.front().seed, config.seed));
  ContextualEnv env = contextual(env_specs, env_rng);

  TrainerState state =
      init_state(config, env.bandit(0).n_actions(), env.n_contexts());

  std::vector<MetricsRecord> records;
  records.reserve(static_cast<std::size_t>(config.total_rounds));
  for (int round = 0; round < config.total_rounds; ++round)
    records.push_back(run_round(state, env, config));
  return records;
}

nlohmann::json checkpoint_to_json(const TrainerState& state) {
  nlohmann::json j;
  j["round"] = state.round;
  j["best_seen"] = state.best_seen;
  j["cum_soft_regret"] = state.cum_soft_regret;
  j["rng"] = state.rng.save_state();
  j["rank"] = state.params.rank;

  j["trunk"] = json_from_matrix(state.params.trunk);
  j["branch_a"] = nlohmann::json::array();
  j["branch_b"] = nlohmann::json::array();
  for (int i = 0; i < state.params.n_members(); ++i) {
    j["branch_a"].push_back(json_from_matrix(state.params.branch_a[i]));
    j["branch_b"].push_back(json_from_matrix(state.params.branch_b[i]));
  }

  j["adam_step"] = state.adam.step;
  j["adam_m_trunk"] = json_from_matrix(state.adam.m.trunk);
  j["adam_v_trunk"] = json_from_matrix(state.adam.v.trunk);
  j["adam_m_branch_a"] = nlohmann::json::array();
  j["adam_v_branch_a"] = nlohmann::json::array();
  j["adam_m_branch_b"] = nlohmann::json::array();
  j["adam_v_branch_b"] = nlohmann::json::array();
  for (int i = 0; i < state.params.n_members(); ++i) {
    j["adam_m_branch_a"].push_back(json_from_matrix(state.adam.m.branch_a[i]));
    j["adam_v_branch_a"].push_back(json_from_matrix(state.adam.v.branch_a[i]));
    j["adam_m_branch_b"].push_back(json_from_matrix(state.adam.m.branch_b[i]));
    j["adam_v_branch_b"].push_back(json_from_matrix(state.adam.v.branch_b[i]));
  }

  j["features"] = nlohmann::json::array();
  j["ref_probs"] = nlohmann::json::array();
  j["ref_log_probs"] = nlohmann::json::array();
  j["buffers"] = nlohmann::json::array();
  for (std::size_t c = 0; c < state.features.size(); ++c) {
    j["features"].push_back(json_from_vector(state.features[c].phi));
    // Probabilities and logs are stored verbatim (not renormalized on load) so
    // a resumed run continues bit-identically.
    j["ref_probs"].push_back(json_from_vector(state.ref_dists[c].probs));
    j["ref_log_probs"].push_back(json_from_vector(state.ref_dists[c].log_probs));
    j["buffers"].push_back(state.buffers[c].to_json());
  }
  return j;
}

TrainerState checkpoint_from_json(const nlohmann::json& j) {
  TrainerState state;
  state.round = j.at("round").get<int>();
  state.best_seen = j.at("best_seen").get<double>();
  state.cum_soft_regret = j.at("cum_soft_regret").get<double>();
  state.rng.restore_state(j.at("rng").get<std::string>());

  state.params.rank = j.at("rank").get<int>();
  state.params.trunk = matrix_from_json(j.at("trunk"));
  for (const auto& ja : j.at("branch_a")) state.params.branch_a.push_back(matrix_from_json(ja));
  for (const auto& jb : j.at("branch_b")) state.params.branch_b.push_back(matrix_from_json(jb));

  state.adam.step = j.at("adam_step").get<long>();
  state.adam.m.trunk = matrix_from_json(j.at("adam_m_trunk"));
  state.adam.v.trunk = matrix_from_json(j.at("adam_v_trunk"));
  for (const auto& ja : j.at("adam_m_branch_a")) state.adam.m.branch_a.push_back(matrix_from_json(ja));
  for (const auto& ja : j.at("adam_v_branch_a")) state.adam.v.branch_a.push_back(matrix_from_json(ja));
  for (const auto& jb : j.at("adam_m_branch_b")) state.adam.m.branch_b.push_back(matrix_from_json(jb));
  for (const auto& jb : j.at("adam_v_branch_b")) state.adam.v.branch_b.push_back(matrix_from_json(jb));

  const auto& jf = j.at("features");
  const auto& jr = j.at("ref_probs");
  const auto& jl = j.at("ref_log_probs");
  const auto& jb = j.at("buffers");
  for (std::size_t c = 0; c < jf.size(); ++c) {
    ContextFeatures x;
    x.id = static_cast<int>(c);
    x.phi = vector_from_json(jf[c]);
    state.features.push_back(std::move(x));
    PolicyDistribution ref;
    ref.probs = vector_from_json(jr[c]);
    ref.log_probs = vector_from_json(jl[c]);
    state.ref_dists.push_back(std::move(ref));
    state.buffers.push_back(ReplayBuffers::from_json(jb[c]));
  }
  return state;
}

}  // namespace poets
