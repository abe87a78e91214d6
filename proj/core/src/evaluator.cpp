#include "predgame/eval/evaluator.hpp"

#include <algorithm>

#include "predgame/errors.hpp"

namespace predgame::eval {

namespace {

std::vector<int> argmax_heads(const std::vector<Eigen::MatrixXd>& logits, int col) {
  std::vector<int> action(logits.size());
  for (std::size_t h = 0; h < logits.size(); ++h) {
    Eigen::Index best = 0;
    logits[h].col(col).maxCoeff(&best);
    action[h] = static_cast<int>(best);
  }
  return action;
}

}  // namespace

EvalTrace run_episodes(const std::vector<nn::Policy>& policies, const env::EnvConfig& cfg,
                       const std::vector<ppo::HeuristicSpec>& heuristics, int n_episodes,
                       std::uint64_t seed, bool stochastic, bool record_hidden) {
  env::EnvConfig env_cfg = cfg;
  env_cfg.seed = derive_seed(seed, 7001);
  env::PredictionGameEnv game(env_cfg);
  for (const auto& h : heuristics) game.register_heuristic(h.agent_index, h.cycle_len);

  const auto learners = game.learner_indices();
  if (learners.size() != policies.size())
    throw ProtocolError("run_episodes: policy count " + std::to_string(policies.size()) +
                        " does not match learning agents " + std::to_string(learners.size()));

  EvalTrace trace;
  trace.n_agents = env_cfg.n_agents;
  trace.n_actions = env_cfg.n_actions;
  trace.agents.resize(learners.size());
  for (std::size_t slot = 0; slot < learners.size(); ++slot) {
    trace.agents[slot].agent_index = learners[slot];
    trace.agents[slot].steps.reserve(static_cast<std::size_t>(n_episodes) * env_cfg.episode_len);
  }

  Rng sample_rng(derive_seed(seed, 7002));
  const int n_heads = env_cfg.n_agents;
  std::vector<env::MultiDiscreteAction> joint(static_cast<std::size_t>(env_cfg.n_agents));

  for (int episode = 0; episode < n_episodes; ++episode) {
    env::JointObservation obs = game.reset();

    HeuristicEpisode hep;
    hep.episode = episode;
    for (const auto& h : game.heuristics()) {
      hep.agent_index.push_back(h.agent_index);
      hep.cycle_len.push_back(h.cycle_len);
      hep.phase.push_back(h.phase);
      hep.actions.emplace_back();
    }

    std::vector<Eigen::VectorXd> hidden(policies.size());
    for (std::size_t slot = 0; slot < policies.size(); ++slot)
      if (nn::is_recurrent(policies[slot]))
        hidden[slot] = Eigen::VectorXd::Zero(nn::policy_hidden_dim(policies[slot]));

    double episode_return = 0.0;
    bool done = false;
    int t = 0;
    while (!done) {
      for (std::size_t slot = 0; slot < policies.size(); ++slot) {
        const int agent = learners[slot];
        const auto& v = obs.per_agent[agent];
        Eigen::MatrixXd x(v.size(), 1);
        for (std::size_t j = 0; j < v.size(); ++j) x(j, 0) = v[j];

        std::vector<Eigen::MatrixXd> logits;
        StepRecord rec;
        rec.episode = episode;
        rec.t = t;
        rec.obs = v;
        if (const auto* rnn = std::get_if<nn::RNNPolicy>(&policies[slot])) {
          auto cache = nn::rnn_step(*rnn, x, hidden[slot], Eigen::VectorXd::Ones(1));
          hidden[slot] = cache.h.col(0);
          logits = std::move(cache.logits);
          if (record_hidden)
            rec.hidden.assign(hidden[slot].data(), hidden[slot].data() + hidden[slot].size());
        } else {
          auto cache = nn::ff_forward(std::get<nn::FFPolicy>(policies[slot]), x);
          logits = std::move(cache.logits);
        }

        rec.action = stochastic ? nn::sample_heads(logits, 0, sample_rng).action
                                : argmax_heads(logits, 0);
        trace.agents[slot].steps.push_back(std::move(rec));
      }

      for (int agent = 0; agent < env_cfg.n_agents; ++agent) {
        if (game.is_heuristic(agent)) {
          joint[agent] = game.heuristic_action_now(agent);
        } else {
          const std::size_t slot = static_cast<std::size_t>(
              std::find(learners.begin(), learners.end(), agent) - learners.begin());
          const auto& comps = trace.agents[slot].steps.back().action;
          env::MultiDiscreteAction act;
          act.own = comps[0];
          act.predictions.assign(comps.begin() + 1, comps.end());
          joint[agent] = std::move(act);
        }
      }
      for (std::size_t h = 0; h < hep.agent_index.size(); ++h)
        hep.actions[h].push_back(joint[hep.agent_index[h]].own);

      auto result = game.step(joint);
      episode_return += result.reward;
      for (std::size_t slot = 0; slot < policies.size(); ++slot)
        trace.agents[slot].steps.back().reward = result.reward;
      obs = std::move(result.obs);
      done = result.done;
      ++t;
    }
    trace.episode_returns.push_back(episode_return);
    if (!hep.agent_index.empty()) trace.heuristic_episodes.push_back(std::move(hep));
  }
  return trace;
}

}  // namespace predgame::eval
