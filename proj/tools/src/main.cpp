#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "predgame/config/config.hpp"
#include "predgame/errors.hpp"
#include "predgame/harness/harness.hpp"
#include "predgame/mi/collect.hpp"
#include "predgame/nn/checkpoint.hpp"
#include "predgame/selftest/selftest.hpp"

namespace fs = std::filesystem;
using namespace predgame;

namespace {

// Exit codes: 0 ok, 1 runtime, 2 config, 3 unsupported request, 4 missing artifacts.
template <typename F>
int run_guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedPairingError& e) {
    std::cerr << "unsupported request: " << e.what() << "\n";
    return 3;
  } catch (const ArtifactNotFoundError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

fs::path find_preset(const std::string& name) {
  std::vector<fs::path> roots;
  if (const char* env_dir = std::getenv("PREDGAME_PRESET_DIR")) roots.emplace_back(env_dir);
#ifdef PREDGAME_PRESET_DIR
  roots.emplace_back(PREDGAME_PRESET_DIR);
#endif
  roots.emplace_back("presets");
  for (const auto& root : roots) {
    const fs::path candidate = root / (name + ".cfg");
    if (fs::exists(candidate)) return candidate;
  }
  throw ConfigError("preset not found: " + name);
}

struct ConfigInputs {
  std::string preset;
  std::vector<std::string> config_files;
  std::vector<std::string> overrides;  // key=value, last wins
};

void add_config_options(CLI::App* cmd, ConfigInputs& inputs) {
  cmd->add_option("--preset", inputs.preset, "Named preset from the presets directory");
  cmd->add_option("--config", inputs.config_files, "Config file(s); later files win");
  cmd->add_option("--set", inputs.overrides, "Override a key, e.g. --set ppo.learning_rate=1e-3");
}

// Layering: preset < config files < --set overrides.
cfg::RunConfig resolve_config(const ConfigInputs& inputs) {
  cfg::Config merged;
  if (!inputs.preset.empty())
    merged.merge_from(cfg::Config::parse_file(find_preset(inputs.preset).string()));
  for (const auto& file : inputs.config_files)
    merged.merge_from(cfg::Config::parse_file(file));
  for (const auto& kv : inputs.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    merged.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto run = cfg::RunConfig::from_config(merged);
  if (const char* root = std::getenv("PREDGAME_OUT_ROOT")) {
    if (fs::path(run.spec.out_dir).is_relative())
      run.spec.out_dir = (fs::path(root) / run.spec.out_dir).string();
  }
  return run;
}

int execute_scenario(cfg::RunConfig run) {
  run.spec.config_snapshot = run.to_config().serialize();
  run.spec.validate();
  const auto outcome = harness::run_scenario(run.spec);
  std::vector<double> returns;
  for (const auto& seed : outcome.seeds) returns.push_back(seed.mean_return);
  const auto ci = harness::bootstrap_ci(returns);
  std::cout << outcome.scenario_dir << ": mean return " << ci.mean << " (" << ci.lo << ", "
            << ci.hi << ") over " << outcome.seeds.size() << " seed(s)\n";
  return 0;
}

std::string timestamp_suffix() {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return std::to_string(std::chrono::duration_cast<std::chrono::seconds>(now).count());
}

int cmd_diagnose(const std::string& run_dir, const std::string& pairing, int k,
                 const std::string& units_name, int episodes) {
  const mi::MIUnits units = units_name == "nats" ? mi::MIUnits::Nats : mi::MIUnits::Bits;
  const bool want_obs = pairing == "obs" || pairing == "both";
  const bool want_hidden = pairing == "hidden" || pairing == "both";

  mi::TrajectoryData data;
  const std::string log_path = run_dir + "/trajectory.csv";
  if (fs::exists(log_path)) {
    data = mi::read_trajectory_csv(log_path);
  } else {
    // No logs: collect fresh evaluation rollouts from the checkpoints.
    const std::string cfg_path = run_dir + "/config.cfg";
    if (!fs::exists(cfg_path))
      throw ArtifactNotFoundError("run directory has neither trajectory.csv nor config.cfg: " +
                                  run_dir);
    const auto run = cfg::RunConfig::from_config(cfg::Config::parse_file(cfg_path));
    auto spec = run.spec;
    env::EnvConfig env_cfg = spec.env_cfg;
    env_cfg.observation_mode =
        spec.blind ? env::ObservationMode::Blind : env::ObservationMode::Sighted;
    std::vector<ppo::HeuristicSpec> heuristics;
    if (spec.scenario != harness::Scenario::Homogeneous4)
      for (std::size_t i = 0; i < spec.heuristic_agents.size(); ++i)
        heuristics.push_back({spec.heuristic_agents[i], spec.heuristic_cycles[i]});

    env::PredictionGameEnv probe(env_cfg);
    for (const auto& h : heuristics) probe.register_heuristic(h.agent_index, h.cycle_len);
    std::vector<nn::Policy> policies;
    for (int agent : probe.learner_indices()) {
      const std::string ckpt = run_dir + "/agent_" + std::to_string(agent) + ".ckpt";
      if (!fs::exists(ckpt)) throw ArtifactNotFoundError("checkpoint missing: " + ckpt);
      policies.push_back(nn::load_policy(ckpt));
    }
    const bool recurrent = !policies.empty() && nn::is_recurrent(policies.front());
    if (want_hidden && !recurrent)
      throw UnsupportedPairingError("hidden-action MI requested on a feed-forward run");
    const auto trace = eval::run_episodes(policies, env_cfg, heuristics,
                                          episodes > 0 ? episodes : spec.eval_episodes,
                                          derive_seed(spec.master_seed, 4242), true, recurrent);
    data.agents = trace.agents;
    data.obs_dim = env_cfg.obs_dim();
    data.n_action_components = env_cfg.n_agents;
    data.hidden_dim = recurrent ? 128 : 0;
  }

  if (want_hidden && data.hidden_dim == 0)
    throw UnsupportedPairingError("hidden-action MI requested but the run has no hidden states");

  // Actions are multi-discrete component tuples; infer the component alphabet.
  int n_actions = 2;
  for (const auto& agent : data.agents)
    for (const auto& step : agent.steps)
      for (int comp : step.action) n_actions = std::max(n_actions, comp + 1);

  std::vector<mi::MIReportRow> rows;
  std::vector<mi::MIEstimate> obs_estimates, hidden_estimates;
  for (const auto& agent : data.agents) {
    if (want_obs) {
      auto est = mi_plugin(mi::obs_action_samples(agent, n_actions, 0)).converted(units);
      obs_estimates.push_back(est);
      rows.push_back({std::to_string(agent.agent_index), mi::Pairing::ObsAction, est});
    }
    if (want_hidden) {
      auto samples = mi::hidden_action_samples(agent, n_actions, 0);
      std::size_t dropped = 0;
      auto filtered = mi::filter_small_classes(samples, k, &dropped);
      auto est = mi_ross(filtered, k, 4242).converted(units);
      hidden_estimates.push_back(est);
      rows.push_back({std::to_string(agent.agent_index), mi::Pairing::HiddenAction, est});
    }
  }
  if (!obs_estimates.empty())
    rows.push_back({"mean", mi::Pairing::ObsAction, mi::mi_report_mean(obs_estimates)});
  if (!hidden_estimates.empty())
    rows.push_back({"mean", mi::Pairing::HiddenAction, mi::mi_report_mean(hidden_estimates)});

  const std::string out_path = run_dir + "/mi_report_" + timestamp_suffix() + ".csv";
  mi::write_mi_report_csv(out_path, rows);
  for (const auto& row : rows)
    std::cout << row.agent << " " << mi::pairing_name(row.pairing) << " "
              << row.estimate.in_bits() << " bits (" << row.estimate.in_nats() << " nats)\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction Game workbench: train, evaluate and diagnose independent PPO agents"};
  app.require_subcommand(1);

  ConfigInputs train_inputs;
  auto* train = app.add_subcommand("train", "Run the configured scenario's training and eval");
  add_config_options(train, train_inputs);

  ConfigInputs eval_inputs;
  std::string eval_baseline;
  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate baseline checkpoints with scripted partners swapped in");
  add_config_options(eval_cmd, eval_inputs);
  eval_cmd->add_option("--baseline", eval_baseline,
                       "Directory with baseline <seed>/ runs (overrides run.baseline_dir)");

  std::string diag_run, diag_pairing = "both", diag_units = "bits";
  int diag_k = 3, diag_episodes = 0;
  auto* diagnose = app.add_subcommand("diagnose", "Mutual-information report for a run directory");
  diagnose->add_option("--run", diag_run, "Run directory")->required();
  diagnose->add_option("--pairing", diag_pairing, "obs | hidden | both")
      ->check(CLI::IsMember({"obs", "hidden", "both"}));
  diagnose->add_option("--units", diag_units, "bits | nats")
      ->check(CLI::IsMember({"bits", "nats"}));
  diagnose->add_option("--k", diag_k, "Neighbour count for the kNN estimator");
  diagnose->add_option("--episodes", diag_episodes,
                       "Evaluation episodes when no trajectory log exists");

  std::string report_root, report_out;
  auto* report = app.add_subcommand("report", "Aggregate completed runs into a summary CSV");
  report->add_option("--runs", report_root, "Runs root directory")->required();
  report->add_option("--out", report_out, "Output CSV (default <runs>/summary.csv)");

  auto* selftest_cmd = app.add_subcommand("selftest", "Run the fast oracle suite");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed())
    return run_guarded([&]() { return execute_scenario(resolve_config(train_inputs)); });

  if (eval_cmd->parsed())
    return run_guarded([&]() {
      auto run = resolve_config(eval_inputs);
      run.spec.scenario = harness::Scenario::ZeroShotHeuristicSwap;
      if (!eval_baseline.empty()) run.spec.baseline_dir = eval_baseline;
      return execute_scenario(std::move(run));
    });

  if (diagnose->parsed())
    return run_guarded(
        [&]() { return cmd_diagnose(diag_run, diag_pairing, diag_k, diag_units, diag_episodes); });

  if (report->parsed())
    return run_guarded([&]() {
      const auto rows = harness::summarize_runs(report_root);
      const std::string out = report_out.empty() ? report_root + "/summary.csv" : report_out;
      harness::write_summary_csv(out, rows);
      std::cout << "wrote " << rows.size() << " summary rows to " << out << "\n";
      return 0;
    });

  if (selftest_cmd->parsed())
    return run_guarded([&]() {
      const auto results = selftest::run_all(&std::cout);
      bool all_passed = true;
      for (const auto& r : results)
        if (!r.passed) {
          all_passed = false;
          std::cout << "failed: " << r.name << "\n";
        }
      return all_passed ? 0 : 1;
    });

  return 0;
}
