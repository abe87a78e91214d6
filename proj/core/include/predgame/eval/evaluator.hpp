#pragma once

#include <cstdint>
#include <vector>

#include "predgame/env/env.hpp"
#include "predgame/nn/policy.hpp"
#include "predgame/ppo/trainer.hpp"

namespace predgame::eval {

struct StepRecord {
  int episode = 0;
  int t = 0;
  std::vector<double> obs;
  std::vector<int> action;     // one component per head
  std::vector<double> hidden;  // post-update state that produced the action; empty if not recorded
  double reward = 0.0;
};

struct AgentTrace {
  int agent_index = 0;
  std::vector<StepRecord> steps;
};

// Per-episode record of every scripted agent: phase drawn at reset and the
// emitted own-action stream.
struct HeuristicEpisode {
  int episode = 0;
  std::vector<int> agent_index;
  std::vector<int> cycle_len;
  std::vector<int> phase;
  std::vector<std::vector<int>> actions;  // [heuristic][t]
};

struct EvalTrace {
  int n_agents = 0;
  int n_actions = 0;
  std::vector<double> episode_returns;
  std::vector<AgentTrace> agents;  // learning agents only, slot order
  std::vector<HeuristicEpisode> heuristic_episodes;
};

// Rolls out n_episodes with the given policies driving the learning agents
// and any registered heuristics driving the rest. Stochastic mode samples
// from the policy heads; greedy mode takes the per-head argmax.
EvalTrace run_episodes(const std::vector<nn::Policy>& policies, const env::EnvConfig& cfg,
                       const std::vector<ppo::HeuristicSpec>& heuristics, int n_episodes,
                       std::uint64_t seed, bool stochastic, bool record_hidden);

}  // namespace predgame::eval
