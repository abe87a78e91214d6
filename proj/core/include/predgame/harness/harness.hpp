#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "predgame/env/env.hpp"
#include "predgame/eval/evaluator.hpp"
#include "predgame/mi/collect.hpp"
#include "predgame/ppo/trainer.hpp"

namespace predgame::harness {

enum class Scenario { Homogeneous4, ZeroShotHeuristicSwap, TrainWithHeuristics };

struct ScenarioSpec {
  Scenario scenario = Scenario::Homogeneous4;
  ppo::Arch arch = ppo::Arch::FF;
  bool blind = false;

  // Agents replaced by scripted partners (swap / train-with-heuristics) and
  // their cycle lengths, position-matched.
  std::vector<int> heuristic_agents = {2, 3};
  std::vector<int> heuristic_cycles = {3, 2};

  int n_seeds = 10;
  env::EnvConfig env_cfg;
  ppo::PPOConfig ppo_cfg;
  int eval_episodes = 1000;
  bool eval_stochastic = true;
  int mi_k = 3;
  mi::MIUnits mi_units = mi::MIUnits::Bits;
  std::uint64_t master_seed = 1;
  int jobs = 1;
  std::string out_dir = "runs";
  std::string baseline_dir;      // swap: directory holding baseline <seed>/ runs
  std::string config_snapshot;   // verbatim text frozen into each run directory

  void validate() const;
  std::string scenario_dir_name() const;
  std::string arch_dir_name() const;
  bool trains() const { return scenario != Scenario::ZeroShotHeuristicSwap; }
};

struct SeedOutcome {
  int seed = 0;
  double mean_return = 0.0;
  double mi_obs_action = std::numeric_limits<double>::quiet_NaN();
  double mi_hidden_action = std::numeric_limits<double>::quiet_NaN();
  std::string run_dir;
};

struct ScenarioOutcome {
  std::vector<SeedOutcome> seeds;
  std::string scenario_dir;  // <out_dir>/<scenario>/<arch>
};

// Runs all seeds of the configured scenario (possibly in parallel; each seed
// is single-context deterministic) and writes the run-directory artifacts.
ScenarioOutcome run_scenario(const ScenarioSpec& spec);

// Single-seed entry point used by run_scenario and the tests.
SeedOutcome run_seed(const ScenarioSpec& spec, int seed_index);

struct BootstrapCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  int resamples = 10000;
};

// Percentile bootstrap over seed-level values.
BootstrapCI bootstrap_ci(const std::vector<double>& values, double level = 0.95,
                         int resamples = 10000, std::uint64_t seed = 0);

struct ActionHistogram {
  std::vector<int> agent_index;  // per slot
  // counts[slot][component][action]
  std::vector<std::vector<std::vector<long long>>> counts;
};

ActionHistogram action_histogram(const eval::EvalTrace& trace);
void write_histogram_csv(const std::string& path, const ActionHistogram& hist);

// ---- Aggregation across completed runs ----

struct ResultRow {
  std::string scenario;
  std::string arch;
  bool blind = false;
  int seed = 0;
  std::string metric;
  double value = 0.0;
  std::string units;
};

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

struct SummaryRow {
  std::string scenario;
  std::string arch;
  bool blind = false;
  std::string metric;
  std::string units;
  BootstrapCI ci;
  int n_seeds = 0;
};

// Scans <runs_root>/<scenario>/<arch>/<seed>/results.csv and aggregates by
// (scenario, arch, blind, metric); never mixes architectures or blindness in
// one interval. Throws ArtifactNotFoundError when no runs are found.
std::vector<SummaryRow> summarize_runs(const std::string& runs_root, std::uint64_t seed = 0);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

}  // namespace predgame::harness
