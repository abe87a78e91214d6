#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "predgame/rng.hpp"

namespace predgame::env {

enum class ObservationMode { Sighted, Blind };

struct EnvConfig {
  int n_agents = 4;
  int n_actions = 4;
  int episode_len = 10;
  std::uint64_t seed = 0;
  ObservationMode observation_mode = ObservationMode::Sighted;

  // Dimension of each agent's observation vector: one-hot of the left
  // neighbour's previous own action followed by one-hot of the right's.
  int obs_dim() const { return 2 * n_actions; }

  void validate() const;  // throws ConfigError
};

// Composite action: the agent's own action plus one predicted action per
// other agent, ordered by increasing agent index with self skipped. Scripted
// agents emit no predictions (empty vector).
struct MultiDiscreteAction {
  int own = 0;
  std::vector<int> predictions;
};

// Bijection between a full multi-discrete action and a single symbol in
// [0, A^N): base-A digits (own, predictions[0], ..., predictions[N-2]).
std::uint64_t flatten_action(const MultiDiscreteAction& a, int n_actions, int n_agents);
MultiDiscreteAction unflatten_action(std::uint64_t symbol, int n_actions, int n_agents);

struct JointObservation {
  std::vector<std::vector<double>> per_agent;
};

// Zero every observation vector, preserving shapes. Idempotent.
JointObservation apply_blind(const JointObservation& obs);

// Scripted periodic agent: repeats each action cycle_len steps, cycling
// through the action set mod n_actions, offset by a per-episode phase.
struct HeuristicPolicy {
  int agent_index = 0;
  int cycle_len = 1;
  int phase = 0;
  int n_actions = 4;
};

// a(t) = ((i mod A) + floor(t / k) + phase) mod A
int heuristic_action(const HeuristicPolicy& policy, int t);

struct EnvState {
  int t = 0;
  std::optional<std::vector<MultiDiscreteAction>> prev_joint_action;
  bool done = false;  // done <=> t == episode_len
};

struct StepResult {
  JointObservation obs;
  double reward = 0.0;
  bool done = false;
};

// The Prediction Game: N agents on a ring; each observes the previous own
// actions of its two immediate neighbours and emits its own action together
// with predictions for every other agent's own action. The shared reward is
// the fraction of correct predictions among the predicting agents.
class PredictionGameEnv {
 public:
  explicit PredictionGameEnv(EnvConfig config);

  // Must be called before reset(); scripted agents keep their own action
  // stream and are excluded from the predictor set.
  void register_heuristic(int agent_index, int cycle_len);

  // Starts a new episode. Heuristic phases are resampled from the instance
  // rng; the seeded overload reseeds that rng first.
  JointObservation reset();
  JointObservation reset(std::uint64_t seed);

  StepResult step(const std::vector<MultiDiscreteAction>& joint_action);

  // Scripted agent's action at the current timestep (empty predictions).
  MultiDiscreteAction heuristic_action_now(int agent_index) const;

  const EnvConfig& config() const { return config_; }
  EnvState state() const;
  int t() const { return t_; }
  bool done() const { return t_ >= config_.episode_len; }
  bool is_heuristic(int agent_index) const;
  int num_predictors() const { return n_predictors_; }
  const std::vector<HeuristicPolicy>& heuristics() const { return heuristics_; }

  // Learning-agent indices in increasing order.
  std::vector<int> learner_indices() const;

 private:
  JointObservation make_observation(const std::vector<int>& prev_own) const;
  JointObservation zero_observation() const;

  EnvConfig config_;
  std::vector<HeuristicPolicy> heuristics_;
  int n_predictors_ = 0;
  int t_ = 0;
  bool started_ = false;
  std::vector<int> prev_own_;  // own-action components from t-1
  std::optional<std::vector<MultiDiscreteAction>> prev_joint_;
  Rng rng_;
};

}  // namespace predgame::env
