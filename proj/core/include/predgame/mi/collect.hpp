#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predgame/eval/evaluator.hpp"
#include "predgame/mi/estimators.hpp"

namespace predgame::mi {

enum class Pairing { ObsAction, HiddenAction };

// Observation-action pairs for one agent. One-hot observations are treated
// as discrete symbols via exact vector identity; actions are flattened
// multi-discrete indices, so the pair takes the plug-in path.
SampleSet obs_action_samples(const eval::AgentTrace& trace, int n_actions, int n_agents);

// Hidden-state-action pairs (continuous vs discrete, Ross path). The hidden
// state is the post-update state that produced the action. Throws
// UnsupportedPairingError when the trace carries no hidden states.
SampleSet hidden_action_samples(const eval::AgentTrace& trace, int n_actions, int n_agents);

// Drops samples whose action class has <= k members so the Ross estimator's
// per-class requirement holds; *dropped reports how many were removed.
SampleSet filter_small_classes(const SampleSet& samples, int k, std::size_t* dropped);

// Runs evaluation rollouts and returns one sample set per learning agent
// (one sample per agent per timestep). HiddenAction requires recurrent
// policies.
std::vector<SampleSet> collect_mi_samples(const std::vector<nn::Policy>& policies,
                                          const env::EnvConfig& cfg,
                                          const std::vector<ppo::HeuristicSpec>& heuristics,
                                          int n_episodes, Pairing pairing, std::uint64_t seed,
                                          bool stochastic = true);

// ---- Trajectory log (CSV) ----
// Header: episode,t,agent,obs_0..obs_{d-1},act_0..act_{m-1}[,h_0..h_{H-1}],reward

void write_trajectory_csv(const std::string& path, const eval::EvalTrace& trace);

struct TrajectoryData {
  int obs_dim = 0;
  int n_action_components = 0;
  int hidden_dim = 0;  // 0 when the log has no hidden columns
  std::vector<eval::AgentTrace> agents;
};

TrajectoryData read_trajectory_csv(const std::string& path);

// ---- MI report (CSV) ----
// Header: agent,pairing,estimator,k,n,value_nats,value_bits

struct MIReportRow {
  std::string agent;  // agent index or "mean"
  Pairing pairing = Pairing::ObsAction;
  MIEstimate estimate;
};

void write_mi_report_csv(const std::string& path, const std::vector<MIReportRow>& rows);

const char* pairing_name(Pairing pairing);
const char* estimator_name(MIEstimator estimator);

}  // namespace predgame::mi
