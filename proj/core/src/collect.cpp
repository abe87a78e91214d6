#include "predgame/mi/collect.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "predgame/errors.hpp"

namespace predgame::mi {

namespace {

std::int64_t flatten_components(const std::vector<int>& comps, int n_actions) {
  std::int64_t symbol = 0;
  for (int c : comps) symbol = symbol * n_actions + c;
  return symbol;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SampleSet obs_action_samples(const eval::AgentTrace& trace, int n_actions, int /*n_agents*/) {
  std::vector<std::int64_t> x;
  std::vector<std::int64_t> y;
  x.reserve(trace.steps.size());
  y.reserve(trace.steps.size());
  std::map<std::vector<double>, std::int64_t> symbol_of;
  for (const auto& step : trace.steps) {
    auto [it, inserted] =
        symbol_of.try_emplace(step.obs, static_cast<std::int64_t>(symbol_of.size()));
    x.push_back(it->second);
    y.push_back(flatten_components(step.action, n_actions));
  }
  return SampleSet::discrete_discrete(std::move(x), std::move(y));
}

SampleSet hidden_action_samples(const eval::AgentTrace& trace, int n_actions, int /*n_agents*/) {
  if (trace.steps.empty() || trace.steps.front().hidden.empty())
    throw UnsupportedPairingError(
        "hidden-action pairing requires a recurrent policy with recorded hidden states");
  const std::size_t dim = trace.steps.front().hidden.size();
  PointMatrix x;
  x.n = trace.steps.size();
  x.d = dim;
  x.data.reserve(x.n * dim);
  std::vector<std::int64_t> y;
  y.reserve(trace.steps.size());
  for (const auto& step : trace.steps) {
    if (step.hidden.size() != dim)
      throw ValidationError("hidden_action_samples: inconsistent hidden dimension");
    x.data.insert(x.data.end(), step.hidden.begin(), step.hidden.end());
    y.push_back(flatten_components(step.action, n_actions));
  }
  return SampleSet::continuous_discrete(std::move(x), std::move(y));
}

SampleSet filter_small_classes(const SampleSet& samples, int k, std::size_t* dropped) {
  if (samples.kind != SampleKind::ContinuousDiscrete)
    throw ValidationError("filter_small_classes expects continuous-discrete samples");
  std::map<std::int64_t, std::size_t> counts;
  for (std::int64_t label : samples.y_discrete) counts[label] += 1;

  PointMatrix x;
  x.d = samples.x_continuous.d;
  std::vector<std::int64_t> y;
  std::size_t removed = 0;
  for (std::size_t i = 0; i < samples.n; ++i) {
    if (counts[samples.y_discrete[i]] > static_cast<std::size_t>(k)) {
      const double* p = samples.x_continuous.point(i);
      x.data.insert(x.data.end(), p, p + x.d);
      y.push_back(samples.y_discrete[i]);
    } else {
      ++removed;
    }
  }
  x.n = y.size();
  if (dropped) *dropped = removed;
  return SampleSet::continuous_discrete(std::move(x), std::move(y));
}

std::vector<SampleSet> collect_mi_samples(const std::vector<nn::Policy>& policies,
                                          const env::EnvConfig& cfg,
                                          const std::vector<ppo::HeuristicSpec>& heuristics,
                                          int n_episodes, Pairing pairing, std::uint64_t seed,
                                          bool stochastic) {
  if (pairing == Pairing::HiddenAction)
    for (const auto& p : policies)
      if (!nn::is_recurrent(p))
        throw UnsupportedPairingError("hidden-action pairing requires recurrent policies");

  const bool record_hidden = pairing == Pairing::HiddenAction;
  const auto trace =
      eval::run_episodes(policies, cfg, heuristics, n_episodes, seed, stochastic, record_hidden);

  std::vector<SampleSet> out;
  out.reserve(trace.agents.size());
  for (const auto& agent : trace.agents)
    out.push_back(pairing == Pairing::ObsAction
                      ? obs_action_samples(agent, cfg.n_actions, cfg.n_agents)
                      : hidden_action_samples(agent, cfg.n_actions, cfg.n_agents));
  return out;
}

void write_trajectory_csv(const std::string& path, const eval::EvalTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ArtifactNotFoundError("cannot open trajectory log for writing: " + path);

  int obs_dim = 0;
  int n_comps = 0;
  int hidden_dim = 0;
  for (const auto& agent : trace.agents)
    if (!agent.steps.empty()) {
      obs_dim = static_cast<int>(agent.steps.front().obs.size());
      n_comps = static_cast<int>(agent.steps.front().action.size());
      hidden_dim = static_cast<int>(agent.steps.front().hidden.size());
      break;
    }

  out << "episode,t,agent";
  for (int j = 0; j < obs_dim; ++j) out << ",obs_" << j;
  for (int j = 0; j < n_comps; ++j) out << ",act_" << j;
  for (int j = 0; j < hidden_dim; ++j) out << ",h_" << j;
  out << ",reward\n";

  for (const auto& agent : trace.agents)
    for (const auto& step : agent.steps) {
      out << step.episode << "," << step.t << "," << agent.agent_index;
      for (double v : step.obs) out << "," << format_double(v);
      for (int a : step.action) out << "," << a;
      for (double h : step.hidden) out << "," << format_double(h);
      out << "," << format_double(step.reward) << "\n";
    }
}

TrajectoryData read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactNotFoundError("trajectory log not found: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty trajectory log: " + path);

  TrajectoryData data;
  {
    std::stringstream header(line);
    std::string col;
    int idx = 0;
    while (std::getline(header, col, ',')) {
      if (col.rfind("obs_", 0) == 0) ++data.obs_dim;
      else if (col.rfind("act_", 0) == 0) ++data.n_action_components;
      else if (col.rfind("h_", 0) == 0) ++data.hidden_dim;
      ++idx;
    }
    if (idx < 4) throw ValidationError("trajectory log header too short: " + path);
  }

  std::map<int, std::size_t> slot_of;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    auto next = [&]() {
      if (!std::getline(row, field, ',')) throw ValidationError("short row in " + path);
      return field;
    };
    eval::StepRecord rec;
    rec.episode = std::stoi(next());
    rec.t = std::stoi(next());
    const int agent = std::stoi(next());
    rec.obs.resize(data.obs_dim);
    for (int j = 0; j < data.obs_dim; ++j) rec.obs[j] = std::stod(next());
    rec.action.resize(data.n_action_components);
    for (int j = 0; j < data.n_action_components; ++j) rec.action[j] = std::stoi(next());
    rec.hidden.resize(data.hidden_dim);
    for (int j = 0; j < data.hidden_dim; ++j) rec.hidden[j] = std::stod(next());
    rec.reward = std::stod(next());

    auto [it, inserted] = slot_of.try_emplace(agent, data.agents.size());
    if (inserted) {
      data.agents.emplace_back();
      data.agents.back().agent_index = agent;
    }
    data.agents[it->second].steps.push_back(std::move(rec));
  }
  return data;
}

const char* pairing_name(Pairing pairing) {
  return pairing == Pairing::ObsAction ? "obs_action" : "hidden_action";
}

const char* estimator_name(MIEstimator estimator) {
  switch (estimator) {
    case MIEstimator::PlugIn: return "plugin";
    case MIEstimator::KSG: return "ksg";
    case MIEstimator::Ross: return "ross";
  }
  return "unknown";
}

void write_mi_report_csv(const std::string& path, const std::vector<MIReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ArtifactNotFoundError("cannot open MI report for writing: " + path);
  out << "agent,pairing,estimator,k,n,value_nats,value_bits\n";
  for (const auto& row : rows)
    out << row.agent << "," << pairing_name(row.pairing) << ","
        << estimator_name(row.estimate.estimator) << "," << row.estimate.k << ","
        << row.estimate.n << "," << format_double(row.estimate.in_nats()) << ","
        << format_double(row.estimate.in_bits()) << "\n";
}

}  // namespace predgame::mi
