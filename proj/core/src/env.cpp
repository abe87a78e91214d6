#include "predgame/env/env.hpp"

#include <algorithm>
#include <string>

#include "predgame/errors.hpp"

namespace predgame::env {

void EnvConfig::validate() const {
  if (n_agents < 2) throw ConfigError("n_agents must be >= 2, got " + std::to_string(n_agents));
  if (n_actions < 2) throw ConfigError("n_actions must be >= 2, got " + std::to_string(n_actions));
  if (episode_len < 1)
    throw ConfigError("episode_len must be >= 1, got " + std::to_string(episode_len));
}

std::uint64_t flatten_action(const MultiDiscreteAction& a, int n_actions, int n_agents) {
  if (static_cast<int>(a.predictions.size()) != n_agents - 1)
    throw ValidationError("flatten_action: expected " + std::to_string(n_agents - 1) +
                          " predictions, got " + std::to_string(a.predictions.size()));
  std::uint64_t symbol = static_cast<std::uint64_t>(a.own);
  for (int p : a.predictions) symbol = symbol * static_cast<std::uint64_t>(n_actions) + p;
  return symbol;
}

MultiDiscreteAction unflatten_action(std::uint64_t symbol, int n_actions, int n_agents) {
  MultiDiscreteAction a;
  a.predictions.assign(n_agents - 1, 0);
  const auto base = static_cast<std::uint64_t>(n_actions);
  for (int j = n_agents - 2; j >= 0; --j) {
    a.predictions[j] = static_cast<int>(symbol % base);
    symbol /= base;
  }
  a.own = static_cast<int>(symbol % base);
  return a;
}

JointObservation apply_blind(const JointObservation& obs) {
  JointObservation out;
  out.per_agent.reserve(obs.per_agent.size());
  for (const auto& v : obs.per_agent) out.per_agent.emplace_back(v.size(), 0.0);
  return out;
}

int heuristic_action(const HeuristicPolicy& policy, int t) {
  const int a = (policy.agent_index % policy.n_actions + t / policy.cycle_len + policy.phase) %
                policy.n_actions;
  return a;
}

PredictionGameEnv::PredictionGameEnv(EnvConfig config) : config_(config) {
  config_.validate();
  n_predictors_ = config_.n_agents;
  rng_.seed(config_.seed);
  prev_own_.assign(config_.n_agents, 0);
}

void PredictionGameEnv::register_heuristic(int agent_index, int cycle_len) {
  if (agent_index < 0 || agent_index >= config_.n_agents)
    throw ConfigError("heuristic agent index out of range: " + std::to_string(agent_index));
  if (cycle_len < 1)
    throw ConfigError("heuristic cycle_len must be >= 1, got " + std::to_string(cycle_len));
  if (is_heuristic(agent_index))
    throw ConfigError("agent " + std::to_string(agent_index) + " already registered as heuristic");
  heuristics_.push_back(HeuristicPolicy{agent_index, cycle_len, 0, config_.n_actions});
  n_predictors_ = config_.n_agents - static_cast<int>(heuristics_.size());
}

bool PredictionGameEnv::is_heuristic(int agent_index) const {
  return std::any_of(heuristics_.begin(), heuristics_.end(),
                     [&](const HeuristicPolicy& h) { return h.agent_index == agent_index; });
}

std::vector<int> PredictionGameEnv::learner_indices() const {
  std::vector<int> out;
  for (int i = 0; i < config_.n_agents; ++i)
    if (!is_heuristic(i)) out.push_back(i);
  return out;
}

JointObservation PredictionGameEnv::zero_observation() const {
  JointObservation obs;
  obs.per_agent.assign(config_.n_agents, std::vector<double>(config_.obs_dim(), 0.0));
  return obs;
}

JointObservation PredictionGameEnv::make_observation(const std::vector<int>& prev_own) const {
  if (config_.observation_mode == ObservationMode::Blind) return zero_observation();
  JointObservation obs = zero_observation();
  const int n = config_.n_agents;
  const int a = config_.n_actions;
  for (int i = 0; i < n; ++i) {
    const int left = (i - 1 + n) % n;
    const int right = (i + 1) % n;
    obs.per_agent[i][prev_own[left]] = 1.0;
    obs.per_agent[i][a + prev_own[right]] = 1.0;
  }
  return obs;
}

JointObservation PredictionGameEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  return reset();
}

JointObservation PredictionGameEnv::reset() {
  t_ = 0;
  started_ = true;
  std::fill(prev_own_.begin(), prev_own_.end(), 0);
  prev_joint_.reset();
  for (auto& h : heuristics_)
    h.phase = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(h.cycle_len)));
  return zero_observation();
}

EnvState PredictionGameEnv::state() const {
  EnvState s;
  s.t = t_;
  s.prev_joint_action = prev_joint_;
  s.done = done();
  return s;
}

MultiDiscreteAction PredictionGameEnv::heuristic_action_now(int agent_index) const {
  for (const auto& h : heuristics_)
    if (h.agent_index == agent_index) return MultiDiscreteAction{heuristic_action(h, t_), {}};
  throw ProtocolError("agent " + std::to_string(agent_index) + " is not a heuristic agent");
}

StepResult PredictionGameEnv::step(const std::vector<MultiDiscreteAction>& joint_action) {
  if (!started_) throw ProtocolError("step called before reset");
  if (done()) throw ProtocolError("step called on a finished episode");
  const int n = config_.n_agents;
  const int a = config_.n_actions;
  if (static_cast<int>(joint_action.size()) != n)
    throw ValidationError("expected " + std::to_string(n) + " actions, got " +
                          std::to_string(joint_action.size()));

  for (int i = 0; i < n; ++i) {
    const auto& act = joint_action[i];
    if (act.own < 0 || act.own >= a)
      throw ValidationError("agent " + std::to_string(i) + " own action out of range");
    const std::size_t expected = is_heuristic(i) ? 0 : static_cast<std::size_t>(n - 1);
    if (act.predictions.size() != expected)
      throw ValidationError("agent " + std::to_string(i) + " expected " +
                            std::to_string(expected) + " predictions, got " +
                            std::to_string(act.predictions.size()));
    for (int p : act.predictions)
      if (p < 0 || p >= a)
        throw ValidationError("agent " + std::to_string(i) + " prediction out of range");
  }

  // Shared reward: fraction of correct predictions over predicting agents.
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    if (is_heuristic(i)) continue;
    const auto& preds = joint_action[i].predictions;
    int slot = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (preds[slot] == joint_action[j].own) ++correct;
      ++slot;
    }
  }
  const double denom = static_cast<double>(n_predictors_) * (n - 1);
  const double reward = n_predictors_ > 0 ? correct / denom : 0.0;

  for (int i = 0; i < n; ++i) prev_own_[i] = joint_action[i].own;
  prev_joint_ = joint_action;
  ++t_;

  StepResult result;
  result.done = done();
  result.reward = reward;
  result.obs = result.done ? zero_observation() : make_observation(prev_own_);
  return result;
}

}  // namespace predgame::env
