#include "predgame/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "predgame/errors.hpp"
#include "predgame/nn/checkpoint.hpp"

namespace fs = std::filesystem;

namespace predgame::harness {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<ppo::HeuristicSpec> heuristic_specs(const ScenarioSpec& spec) {
  std::vector<ppo::HeuristicSpec> out;
  if (spec.scenario == Scenario::Homogeneous4) return out;
  for (std::size_t i = 0; i < spec.heuristic_agents.size(); ++i)
    out.push_back({spec.heuristic_agents[i], spec.heuristic_cycles[i]});
  return out;
}

env::EnvConfig effective_env(const ScenarioSpec& spec) {
  env::EnvConfig cfg = spec.env_cfg;
  cfg.observation_mode = spec.blind ? env::ObservationMode::Blind : env::ObservationMode::Sighted;
  return cfg;
}

struct EvalArtifacts {
  double mean_return = 0.0;
  double mi_obs = std::numeric_limits<double>::quiet_NaN();
  double mi_hidden = std::numeric_limits<double>::quiet_NaN();
  std::vector<mi::MIReportRow> mi_rows;
};

// Evaluation + MI diagnostics shared by all scenarios. Writes trajectory,
// histogram and MI report files into run_dir.
EvalArtifacts evaluate_and_diagnose(const ScenarioSpec& spec,
                                    const std::vector<nn::Policy>& policies,
                                    const std::vector<ppo::HeuristicSpec>& heuristics,
                                    std::uint64_t eval_seed, const std::string& run_dir) {
  const env::EnvConfig cfg = effective_env(spec);
  const bool recurrent = !policies.empty() && nn::is_recurrent(policies.front());
  const auto trace = eval::run_episodes(policies, cfg, heuristics, spec.eval_episodes, eval_seed,
                                        spec.eval_stochastic, recurrent);

  EvalArtifacts art;
  double sum = 0.0;
  for (double r : trace.episode_returns) sum += r;
  art.mean_return = trace.episode_returns.empty()
                        ? 0.0
                        : sum / static_cast<double>(trace.episode_returns.size());

  mi::write_trajectory_csv(run_dir + "/trajectory.csv", trace);
  write_histogram_csv(run_dir + "/histogram.csv", action_histogram(trace));

  std::vector<mi::MIEstimate> obs_estimates;
  std::vector<mi::MIEstimate> hidden_estimates;
  for (const auto& agent : trace.agents) {
    auto obs_samples = mi::obs_action_samples(agent, cfg.n_actions, cfg.n_agents);
    auto est = mi_plugin(obs_samples).converted(spec.mi_units);
    obs_estimates.push_back(est);
    art.mi_rows.push_back(
        {std::to_string(agent.agent_index), mi::Pairing::ObsAction, est});
  }
  if (recurrent) {
    for (const auto& agent : trace.agents) {
      auto hidden_samples = mi::hidden_action_samples(agent, cfg.n_actions, cfg.n_agents);
      std::size_t dropped = 0;
      auto filtered = mi::filter_small_classes(hidden_samples, spec.mi_k, &dropped);
      auto est = mi_ross(filtered, spec.mi_k, eval_seed).converted(spec.mi_units);
      hidden_estimates.push_back(est);
      art.mi_rows.push_back(
          {std::to_string(agent.agent_index), mi::Pairing::HiddenAction, est});
    }
  }
  if (!obs_estimates.empty()) {
    const auto mean = mi::mi_report_mean(obs_estimates);
    art.mi_obs = mean.value;
    art.mi_rows.push_back({"mean", mi::Pairing::ObsAction, mean});
  }
  if (!hidden_estimates.empty()) {
    const auto mean = mi::mi_report_mean(hidden_estimates);
    art.mi_hidden = mean.value;
    art.mi_rows.push_back({"mean", mi::Pairing::HiddenAction, mean});
  }
  mi::write_mi_report_csv(run_dir + "/mi_report.csv", art.mi_rows);
  return art;
}

}  // namespace

void ScenarioSpec::validate() const {
  env_cfg.validate();
  ppo_cfg.validate(arch == ppo::Arch::RNN);
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (mi_k < 1) throw ConfigError("mi_k must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (scenario != Scenario::Homogeneous4) {
    if (heuristic_agents.empty())
      throw ConfigError("scenario requires at least one heuristic agent");
    if (heuristic_agents.size() != heuristic_cycles.size())
      throw ConfigError("heuristic_agents and heuristic_cycles must have equal length");
    if (heuristic_agents.size() >= static_cast<std::size_t>(env_cfg.n_agents))
      throw ConfigError("at least one learning agent is required");
    for (int a : heuristic_agents)
      if (a < 0 || a >= env_cfg.n_agents) throw ConfigError("heuristic agent index out of range");
    for (int k : heuristic_cycles)
      if (k < 1) throw ConfigError("heuristic cycle length must be >= 1");
  }
  if (scenario == Scenario::ZeroShotHeuristicSwap && baseline_dir.empty())
    throw ConfigError("zero-shot swap requires baseline_dir (a completed homogeneous run)");
}

std::string ScenarioSpec::scenario_dir_name() const {
  switch (scenario) {
    case Scenario::Homogeneous4: return "homogeneous";
    case Scenario::ZeroShotHeuristicSwap: return "zero_shot_swap";
    case Scenario::TrainWithHeuristics: return "train_with_heuristics";
  }
  return "unknown";
}

std::string ScenarioSpec::arch_dir_name() const {
  std::string name = arch == ppo::Arch::RNN ? "rnn" : "ff";
  if (blind) name += "_blind";
  return name;
}

SeedOutcome run_seed(const ScenarioSpec& spec, int seed_index) {
  const std::string run_dir = spec.out_dir + "/" + spec.scenario_dir_name() + "/" +
                              spec.arch_dir_name() + "/" + std::to_string(seed_index);
  fs::create_directories(run_dir);
  if (!spec.config_snapshot.empty()) {
    std::ofstream snap(run_dir + "/config.cfg");
    snap << spec.config_snapshot;
  }

  const std::uint64_t seed_value = derive_seed(spec.master_seed, 9000 + seed_index);
  const std::uint64_t eval_seed = derive_seed(seed_value, 41);
  const auto heuristics = heuristic_specs(spec);
  const env::EnvConfig cfg = effective_env(spec);

  SeedOutcome outcome;
  outcome.seed = seed_index;
  outcome.run_dir = run_dir;

  std::vector<nn::Policy> policies;
  if (spec.trains()) {
    ppo::IppoTrainer trainer(cfg, heuristics, spec.ppo_cfg, spec.arch, seed_value);
    std::ofstream metrics(run_dir + "/metrics.csv");
    ppo::write_metrics_header(metrics, trainer.num_learners());
    trainer.train([&metrics](const ppo::MetricsRow& row) { ppo::write_metrics_row(metrics, row); },
                  run_dir);
    for (std::size_t slot = 0; slot < trainer.num_learners(); ++slot)
      policies.push_back(trainer.policy(slot));
  } else {
    // Zero-shot swap: evaluate baseline checkpoints, zero parameter updates.
    const std::string baseline_seed_dir = spec.baseline_dir + "/" + std::to_string(seed_index);
    env::PredictionGameEnv probe(cfg);
    for (const auto& h : heuristics) probe.register_heuristic(h.agent_index, h.cycle_len);
    for (int agent : probe.learner_indices()) {
      const std::string ckpt = baseline_seed_dir + "/agent_" + std::to_string(agent) + ".ckpt";
      if (!fs::exists(ckpt)) throw ArtifactNotFoundError("baseline checkpoint missing: " + ckpt);
      policies.push_back(nn::load_policy(ckpt));
    }
  }

  const auto art = evaluate_and_diagnose(spec, policies, heuristics, eval_seed, run_dir);
  outcome.mean_return = art.mean_return;
  outcome.mi_obs_action = art.mi_obs;
  outcome.mi_hidden_action = art.mi_hidden;

  const std::string units = spec.mi_units == mi::MIUnits::Bits ? "bits" : "nats";
  std::vector<ResultRow> rows;
  rows.push_back({spec.scenario_dir_name(), spec.arch == ppo::Arch::RNN ? "rnn" : "ff", spec.blind,
                  seed_index, "return", art.mean_return, "reward"});
  if (std::isfinite(art.mi_obs))
    rows.push_back({spec.scenario_dir_name(), spec.arch == ppo::Arch::RNN ? "rnn" : "ff",
                    spec.blind, seed_index, "mi_obs_action", art.mi_obs, units});
  if (std::isfinite(art.mi_hidden))
    rows.push_back({spec.scenario_dir_name(), spec.arch == ppo::Arch::RNN ? "rnn" : "ff",
                    spec.blind, seed_index, "mi_hidden_action", art.mi_hidden, units});
  write_results_csv(run_dir + "/results.csv", rows);
  return outcome;
}

ScenarioOutcome run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioOutcome outcome;
  outcome.scenario_dir =
      spec.out_dir + "/" + spec.scenario_dir_name() + "/" + spec.arch_dir_name();
  outcome.seeds.resize(spec.n_seeds);

  if (spec.jobs <= 1) {
    for (int s = 0; s < spec.n_seeds; ++s) outcome.seeds[s] = run_seed(spec, s);
    return outcome;
  }

  // Seeds are independent; run them in fixed-size waves.
  int next = 0;
  std::mutex error_mutex;
  std::exception_ptr first_error;
  while (next < spec.n_seeds) {
    const int wave = std::min(spec.jobs, spec.n_seeds - next);
    std::vector<std::thread> threads;
    threads.reserve(wave);
    for (int i = 0; i < wave; ++i) {
      const int s = next + i;
      threads.emplace_back([&, s]() {
        try {
          outcome.seeds[s] = run_seed(spec, s);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    next += wave;
  }
  return outcome;
}

BootstrapCI bootstrap_ci(const std::vector<double>& values, double level, int resamples,
                         std::uint64_t seed) {
  if (values.empty()) throw ValidationError("bootstrap_ci: empty input");
  BootstrapCI ci;
  ci.level = level;
  ci.resamples = resamples;
  double sum = 0.0;
  for (double v : values) sum += v;
  ci.mean = sum / static_cast<double>(values.size());

  if (values.size() == 1) {
    ci.lo = ci.hi = ci.mean;
    return ci;
  }

  Rng rng(derive_seed(seed, 0xb007));
  std::vector<double> means(resamples);
  const std::size_t n = values.size();
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.uniform_int(n)];
    means[b] = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto percentile = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const std::size_t lo_idx = static_cast<std::size_t>(pos);
    const std::size_t hi_idx = std::min<std::size_t>(lo_idx + 1, resamples - 1);
    const double frac = pos - static_cast<double>(lo_idx);
    return means[lo_idx] * (1.0 - frac) + means[hi_idx] * frac;
  };
  ci.lo = percentile((1.0 - level) / 2.0);
  ci.hi = percentile(1.0 - (1.0 - level) / 2.0);
  return ci;
}

ActionHistogram action_histogram(const eval::EvalTrace& trace) {
  ActionHistogram hist;
  for (const auto& agent : trace.agents) {
    hist.agent_index.push_back(agent.agent_index);
    const std::size_t n_comps = agent.steps.empty() ? 0 : agent.steps.front().action.size();
    std::vector<std::vector<long long>> comps(
        n_comps, std::vector<long long>(static_cast<std::size_t>(trace.n_actions), 0));
    for (const auto& step : agent.steps)
      for (std::size_t c = 0; c < step.action.size(); ++c) comps[c][step.action[c]] += 1;
    hist.counts.push_back(std::move(comps));
  }
  return hist;
}

void write_histogram_csv(const std::string& path, const ActionHistogram& hist) {
  std::ofstream out(path);
  if (!out) throw ArtifactNotFoundError("cannot open histogram for writing: " + path);
  out << "agent,component,action,count,frequency\n";
  for (std::size_t slot = 0; slot < hist.counts.size(); ++slot)
    for (std::size_t c = 0; c < hist.counts[slot].size(); ++c) {
      long long total = 0;
      for (long long count : hist.counts[slot][c]) total += count;
      for (std::size_t a = 0; a < hist.counts[slot][c].size(); ++a) {
        const double freq =
            total > 0 ? static_cast<double>(hist.counts[slot][c][a]) / static_cast<double>(total)
                      : 0.0;
        out << hist.agent_index[slot] << "," << c << "," << a << "," << hist.counts[slot][c][a]
            << "," << format_double(freq) << "\n";
      }
    }
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ArtifactNotFoundError("cannot open results for writing: " + path);
  out << "scenario,arch,blind,seed,metric,value,units\n";
  for (const auto& r : rows)
    out << r.scenario << "," << r.arch << "," << (r.blind ? "true" : "false") << "," << r.seed
        << "," << r.metric << "," << format_double(r.value) << "," << r.units << "\n";
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactNotFoundError("results file not found: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    ResultRow r;
    std::getline(row, r.scenario, ',');
    std::getline(row, r.arch, ',');
    std::getline(row, field, ',');
    r.blind = field == "true";
    std::getline(row, field, ',');
    r.seed = std::stoi(field);
    std::getline(row, r.metric, ',');
    std::getline(row, field, ',');
    r.value = std::stod(field);
    std::getline(row, r.units, ',');
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize_runs(const std::string& runs_root, std::uint64_t seed) {
  if (!fs::exists(runs_root)) throw ArtifactNotFoundError("runs root not found: " + runs_root);

  // Group key: scenario, arch, blind, metric.
  std::map<std::tuple<std::string, std::string, bool, std::string>,
           std::pair<std::string, std::vector<double>>>
      groups;
  for (const auto& entry : fs::recursive_directory_iterator(runs_root)) {
    if (!entry.is_regular_file() || entry.path().filename() != "results.csv") continue;
    for (const auto& row : read_results_csv(entry.path().string())) {
      auto& group = groups[{row.scenario, row.arch, row.blind, row.metric}];
      group.first = row.units;
      group.second.push_back(row.value);
    }
  }
  if (groups.empty()) throw ArtifactNotFoundError("no completed runs under " + runs_root);

  std::vector<SummaryRow> rows;
  for (const auto& [key, group] : groups) {
    SummaryRow row;
    row.scenario = std::get<0>(key);
    row.arch = std::get<1>(key);
    row.blind = std::get<2>(key);
    row.metric = std::get<3>(key);
    row.units = group.first;
    row.n_seeds = static_cast<int>(group.second.size());
    row.ci = bootstrap_ci(group.second, 0.95, 10000, seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ArtifactNotFoundError("cannot open summary for writing: " + path);
  out << "scenario,arch,blind,metric,mean,ci_lo,ci_hi,n_seeds,units\n";
  for (const auto& r : rows)
    out << r.scenario << "," << r.arch << "," << (r.blind ? "true" : "false") << "," << r.metric
        << "," << format_double(r.ci.mean) << "," << format_double(r.ci.lo) << ","
        << format_double(r.ci.hi) << "," << r.n_seeds << "," << r.units << "\n";
}

}  // namespace predgame::harness
