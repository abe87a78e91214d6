#include "predgame/config/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "predgame/errors.hpp"

namespace fs = std::filesystem;

namespace predgame::cfg {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

void parse_into(Config& config, std::istream& in, const std::string& source_name,
                const std::string& include_dir, int depth) {
  if (depth > 8) throw ConfigError(source_name + ": include nesting too deep");
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(source_name + ":" + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }

    if (line.rfind("include ", 0) == 0) {
      const std::string rel = trim(line.substr(8));
      const fs::path inc = fs::path(include_dir) / rel;
      std::ifstream file(inc);
      if (!file)
        throw ConfigError(source_name + ":" + std::to_string(line_no) +
                          ": cannot open include file " + inc.string());
      parse_into(config, file, inc.string(), inc.parent_path().string(), depth + 1);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ":" +
                        std::to_string(line.size() + 1) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ":1: empty key");
    config.set(section.empty() ? key : section + "." + key, value);
  }
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Config config;
  parse_into(config, in, path, fs::path(path).parent_path().string(), 0);
  return config;
}

Config Config::parse_string(const std::string& text, const std::string& source_name,
                            const std::string& include_dir) {
  std::istringstream in(text);
  Config config;
  parse_into(config, in, source_name, include_dir, 0);
  return config;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

void Config::merge_from(const Config& other) {
  for (const auto& [key, value] : other.entries_) entries_[key] = value;
}

std::string Config::serialize() const {
  std::ostringstream out;
  std::string current_section;
  bool first = true;
  for (const auto& [key, value] : entries_) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string bare = dot == std::string::npos ? key : key.substr(dot + 1);
    if (section != current_section || first) {
      if (!first) out << "\n";
      if (!section.empty()) out << "[" << section << "]\n";
      current_section = section;
      first = false;
    }
    out << bare << " = " << value << "\n";
  }
  return out.str();
}

namespace {

struct Binder {
  const Config& config;
  std::set<std::string> consumed;

  bool fetch(const std::string& key, std::string& out) {
    if (!config.has(key)) return false;
    consumed.insert(key);
    out = config.get(key);
    return true;
  }

  void bind(const std::string& key, std::string& target) {
    std::string raw;
    if (fetch(key, raw)) target = raw;
  }

  void bind(const std::string& key, bool& target) {
    std::string raw;
    if (!fetch(key, raw)) return;
    if (raw == "true") target = true;
    else if (raw == "false") target = false;
    else throw ConfigError(key + ": expected true or false, got '" + raw + "'");
  }

  template <typename Int>
  void bind_int(const std::string& key, Int& target) {
    std::string raw;
    if (!fetch(key, raw)) return;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      target = static_cast<Int>(v);
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected an integer, got '" + raw + "'");
    }
  }

  void bind(const std::string& key, double& target) {
    std::string raw;
    if (!fetch(key, raw)) return;
    try {
      std::size_t pos = 0;
      target = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a number, got '" + raw + "'");
    }
  }

  void bind(const std::string& key, std::vector<int>& target) {
    std::string raw;
    if (!fetch(key, raw)) return;
    std::vector<int> values;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        values.push_back(std::stoi(item, &pos));
        if (pos != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError(key + ": expected a comma-separated integer list, got '" + raw + "'");
      }
    }
    target = std::move(values);
  }
};

std::string scenario_to_string(harness::Scenario s) {
  switch (s) {
    case harness::Scenario::Homogeneous4: return "homogeneous";
    case harness::Scenario::ZeroShotHeuristicSwap: return "zero_shot_swap";
    case harness::Scenario::TrainWithHeuristics: return "train_with_heuristics";
  }
  return "homogeneous";
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig RunConfig::from_config(const Config& config) {
  RunConfig run;
  auto& spec = run.spec;
  Binder binder{config, {}};

  std::string scenario;
  if (binder.fetch("run.scenario", scenario)) {
    if (scenario == "homogeneous") spec.scenario = harness::Scenario::Homogeneous4;
    else if (scenario == "zero_shot_swap") spec.scenario = harness::Scenario::ZeroShotHeuristicSwap;
    else if (scenario == "train_with_heuristics")
      spec.scenario = harness::Scenario::TrainWithHeuristics;
    else
      throw ConfigError("run.scenario: unknown scenario '" + scenario + "'");
  }
  std::string arch;
  if (binder.fetch("run.arch", arch)) {
    if (arch == "ff") spec.arch = ppo::Arch::FF;
    else if (arch == "rnn") spec.arch = ppo::Arch::RNN;
    else throw ConfigError("run.arch: expected ff or rnn, got '" + arch + "'");
  }
  binder.bind("run.blind", spec.blind);
  binder.bind_int("run.seeds", spec.n_seeds);
  binder.bind_int("run.master_seed", spec.master_seed);
  binder.bind("run.out_dir", spec.out_dir);
  binder.bind("run.baseline_dir", spec.baseline_dir);
  binder.bind_int("run.jobs", spec.jobs);
  binder.bind_int("run.eval_episodes", spec.eval_episodes);
  binder.bind("run.eval_stochastic", spec.eval_stochastic);

  binder.bind_int("env.n_agents", spec.env_cfg.n_agents);
  binder.bind_int("env.n_actions", spec.env_cfg.n_actions);
  binder.bind_int("env.episode_len", spec.env_cfg.episode_len);

  binder.bind("heuristic.agents", spec.heuristic_agents);
  binder.bind("heuristic.cycles", spec.heuristic_cycles);

  binder.bind_int("ppo.total_timesteps", spec.ppo_cfg.total_timesteps);
  binder.bind_int("ppo.num_steps", spec.ppo_cfg.num_steps);
  binder.bind_int("ppo.num_envs", spec.ppo_cfg.num_envs);
  binder.bind_int("ppo.update_epochs", spec.ppo_cfg.update_epochs);
  binder.bind_int("ppo.num_minibatches", spec.ppo_cfg.num_minibatches);
  binder.bind("ppo.learning_rate", spec.ppo_cfg.learning_rate);
  binder.bind("ppo.anneal_lr", spec.ppo_cfg.anneal_lr);
  binder.bind("ppo.clip_eps", spec.ppo_cfg.clip_eps);
  binder.bind("ppo.entropy_coef", spec.ppo_cfg.entropy_coef);
  binder.bind("ppo.vf_coef", spec.ppo_cfg.vf_coef);
  binder.bind("ppo.max_grad_norm", spec.ppo_cfg.max_grad_norm);
  binder.bind("ppo.gamma", spec.ppo_cfg.gamma);
  binder.bind("ppo.gae_lambda", spec.ppo_cfg.gae_lambda);
  binder.bind_int("ppo.checkpoint_interval", spec.ppo_cfg.checkpoint_interval);

  binder.bind_int("mi.k", spec.mi_k);
  std::string units;
  if (binder.fetch("mi.units", units)) {
    if (units == "bits") spec.mi_units = mi::MIUnits::Bits;
    else if (units == "nats") spec.mi_units = mi::MIUnits::Nats;
    else throw ConfigError("mi.units: expected bits or nats, got '" + units + "'");
  }

  for (const auto& [key, value] : config.entries())
    if (!binder.consumed.count(key)) throw ConfigError("unknown config key: " + key);
  return run;
}

Config RunConfig::to_config() const {
  Config config;
  config.set("run.scenario", scenario_to_string(spec.scenario));
  config.set("run.arch", spec.arch == ppo::Arch::RNN ? "rnn" : "ff");
  config.set("run.blind", spec.blind ? "true" : "false");
  config.set("run.seeds", std::to_string(spec.n_seeds));
  config.set("run.master_seed", std::to_string(spec.master_seed));
  config.set("run.out_dir", spec.out_dir);
  if (!spec.baseline_dir.empty()) config.set("run.baseline_dir", spec.baseline_dir);
  config.set("run.jobs", std::to_string(spec.jobs));
  config.set("run.eval_episodes", std::to_string(spec.eval_episodes));
  config.set("run.eval_stochastic", spec.eval_stochastic ? "true" : "false");

  config.set("env.n_agents", std::to_string(spec.env_cfg.n_agents));
  config.set("env.n_actions", std::to_string(spec.env_cfg.n_actions));
  config.set("env.episode_len", std::to_string(spec.env_cfg.episode_len));

  auto join = [](const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(v[i]);
    }
    return out;
  };
  config.set("heuristic.agents", join(spec.heuristic_agents));
  config.set("heuristic.cycles", join(spec.heuristic_cycles));

  config.set("ppo.total_timesteps", std::to_string(spec.ppo_cfg.total_timesteps));
  config.set("ppo.num_steps", std::to_string(spec.ppo_cfg.num_steps));
  config.set("ppo.num_envs", std::to_string(spec.ppo_cfg.num_envs));
  config.set("ppo.update_epochs", std::to_string(spec.ppo_cfg.update_epochs));
  config.set("ppo.num_minibatches", std::to_string(spec.ppo_cfg.num_minibatches));
  config.set("ppo.learning_rate", format_number(spec.ppo_cfg.learning_rate));
  config.set("ppo.anneal_lr", spec.ppo_cfg.anneal_lr ? "true" : "false");
  config.set("ppo.clip_eps", format_number(spec.ppo_cfg.clip_eps));
  config.set("ppo.entropy_coef", format_number(spec.ppo_cfg.entropy_coef));
  config.set("ppo.vf_coef", format_number(spec.ppo_cfg.vf_coef));
  config.set("ppo.max_grad_norm", format_number(spec.ppo_cfg.max_grad_norm));
  config.set("ppo.gamma", format_number(spec.ppo_cfg.gamma));
  config.set("ppo.gae_lambda", format_number(spec.ppo_cfg.gae_lambda));
  config.set("ppo.checkpoint_interval", std::to_string(spec.ppo_cfg.checkpoint_interval));

  config.set("mi.k", std::to_string(spec.mi_k));
  config.set("mi.units", spec.mi_units == mi::MIUnits::Bits ? "bits" : "nats");
  return config;
}

}  // namespace predgame::cfg
