#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "predgame/env/env.hpp"
#include "predgame/nn/adam.hpp"
#include "predgame/nn/policy.hpp"
#include "predgame/ppo/ppo.hpp"

namespace predgame::ppo {

enum class Arch { FF, RNN };

struct HeuristicSpec {
  int agent_index = 0;
  int cycle_len = 1;
};

// One learner's on-policy segment. Arrays are [num_steps * num_envs] with
// step-major rows (idx = step * num_envs + lane), times the per-entry width.
struct AgentRollout {
  std::vector<double> obs;          // * obs_dim
  std::vector<int> actions;         // * n_heads
  std::vector<double> logp;
  std::vector<double> value;
  std::vector<double> reward;       // shared team reward
  std::vector<std::uint8_t> done;
  std::vector<double> h_in;         // * hidden_dim, recurrent only (post-reset)
  std::vector<double> bootstrap;    // [num_envs]
};

struct RolloutBuffer {
  std::size_t num_steps = 0;
  std::size_t num_envs = 0;
  std::vector<AgentRollout> per_agent;  // indexed by learner slot
  std::vector<double> episode_returns;  // episodes completed during collection
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
};

struct MetricsRow {
  long long update = 0;
  long long env_steps = 0;
  double lr = 0.0;
  double mean_return = 0.0;  // shared reward: identical for every agent
  std::vector<UpdateStats> per_agent;
};

// One full PPO update (epochs x shuffled minibatches) for a single agent's
// parameters against its rollout. Recurrent policies re-unroll full
// sequences per env-lane group from the stored segment-initial hidden state.
UpdateStats ppo_update(nn::Policy& policy, nn::AdamState& adam, const AgentRollout& roll,
                       const GaeResult& gae, const PPOConfig& cfg, double lr, Rng& update_rng,
                       std::size_t num_steps, std::size_t num_envs);

// Independent PPO over the Prediction Game: one actor-critic and one Adam
// state per learning agent, no parameter sharing, shared reward stream.
class IppoTrainer {
 public:
  IppoTrainer(env::EnvConfig env_cfg, std::vector<HeuristicSpec> heuristics, PPOConfig ppo_cfg,
              Arch arch, std::uint64_t seed);

  // Runs total_timesteps / (num_steps * num_envs) updates. row_sink, when
  // set, receives one row per update.
  void train(const std::function<void(const MetricsRow&)>& row_sink = nullptr,
             const std::string& checkpoint_dir = "");

  RolloutBuffer collect_rollouts();

  UpdateStats update_agent(std::size_t slot, const AgentRollout& roll, const GaeResult& gae,
                           double lr);

  long long num_updates() const;
  const PPOConfig& config() const { return ppo_cfg_; }
  const std::vector<int>& learner_agents() const { return learner_agents_; }
  std::size_t num_learners() const { return policies_.size(); }
  nn::Policy& policy(std::size_t slot) { return policies_[slot]; }
  const nn::Policy& policy(std::size_t slot) const { return policies_[slot]; }
  void set_policy(std::size_t slot, nn::Policy p);
  bool recurrent() const { return arch_ == Arch::RNN; }

  void save_checkpoints(const std::string& dir, const std::string& suffix = "") const;

 private:
  struct LaneState {
    env::PredictionGameEnv env;
    env::JointObservation obs;
    double episode_return = 0.0;
  };

  env::EnvConfig env_cfg_;
  PPOConfig ppo_cfg_;
  Arch arch_;
  std::vector<int> learner_agents_;  // env agent index per learner slot
  std::vector<nn::Policy> policies_;
  std::vector<nn::AdamState> adam_;
  std::vector<Rng> sample_rng_;
  std::vector<Rng> update_rng_;
  std::vector<LaneState> lanes_;
  std::vector<Eigen::MatrixXd> hidden_;  // per slot [H, num_envs]
  long long env_steps_done_ = 0;
};

// Normalizes to zero mean / unit population std (eps = 1e-8), in place.
void normalize_advantages(std::vector<double>& adv);

void write_metrics_header(std::ostream& out, std::size_t n_agents);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

}  // namespace predgame::ppo
