#include "predgame/ppo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "predgame/errors.hpp"
#include "predgame/nn/checkpoint.hpp"

namespace predgame::ppo {

namespace {

constexpr std::uint64_t kStreamEnvBase = 1000;
constexpr std::uint64_t kStreamInitBase = 2000;
constexpr std::uint64_t kStreamSampleBase = 3000;
constexpr std::uint64_t kStreamUpdateBase = 4000;

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= n;
  const double denom = std::sqrt(var) + 1e-8;
  for (double& a : adv) a = (a - mean) / denom;
}

IppoTrainer::IppoTrainer(env::EnvConfig env_cfg, std::vector<HeuristicSpec> heuristics,
                         PPOConfig ppo_cfg, Arch arch, std::uint64_t seed)
    : env_cfg_(env_cfg), ppo_cfg_(ppo_cfg), arch_(arch) {
  env_cfg_.validate();
  ppo_cfg_.validate(arch_ == Arch::RNN);

  lanes_.reserve(ppo_cfg_.num_envs);
  for (int lane = 0; lane < ppo_cfg_.num_envs; ++lane) {
    env::EnvConfig cfg = env_cfg_;
    cfg.seed = derive_seed(seed, kStreamEnvBase + static_cast<std::uint64_t>(lane));
    LaneState state{env::PredictionGameEnv(cfg), {}, 0.0};
    for (const auto& h : heuristics) state.env.register_heuristic(h.agent_index, h.cycle_len);
    state.obs = state.env.reset();
    lanes_.push_back(std::move(state));
  }
  learner_agents_ = lanes_.front().env.learner_indices();
  if (learner_agents_.empty()) throw ConfigError("IppoTrainer: no learning agents");

  const int obs_dim = env_cfg_.obs_dim();
  const int n_heads = env_cfg_.n_agents;  // own action + N-1 predictions
  const int hidden = 128;
  for (std::size_t slot = 0; slot < learner_agents_.size(); ++slot) {
    Rng init_rng(derive_seed(seed, kStreamInitBase + slot));
    if (arch_ == Arch::RNN) {
      auto p = nn::RNNPolicy::create(obs_dim, n_heads, env_cfg_.n_actions, hidden,
                                     nn::Activation::Relu);
      p.init_params(init_rng);
      policies_.emplace_back(std::move(p));
    } else {
      auto p = nn::FFPolicy::create(obs_dim, n_heads, env_cfg_.n_actions, hidden,
                                    nn::Activation::Relu);
      p.init_params(init_rng);
      policies_.emplace_back(std::move(p));
    }
    adam_.push_back(nn::adam_init(nn::policy_tensors(policies_.back()), ppo_cfg_.learning_rate));
    sample_rng_.emplace_back(derive_seed(seed, kStreamSampleBase + slot));
    update_rng_.emplace_back(derive_seed(seed, kStreamUpdateBase + slot));
    hidden_.emplace_back(Eigen::MatrixXd::Zero(hidden, ppo_cfg_.num_envs));
  }
}

void IppoTrainer::set_policy(std::size_t slot, nn::Policy p) {
  policies_[slot] = std::move(p);
  adam_[slot] = nn::adam_init(nn::policy_tensors(policies_[slot]), ppo_cfg_.learning_rate);
}

long long IppoTrainer::num_updates() const {
  const long long per_update = static_cast<long long>(ppo_cfg_.num_steps) * ppo_cfg_.num_envs;
  return std::max<long long>(1, ppo_cfg_.total_timesteps / per_update);
}

RolloutBuffer IppoTrainer::collect_rollouts() {
  const std::size_t S = static_cast<std::size_t>(ppo_cfg_.num_steps);
  const std::size_t L = static_cast<std::size_t>(ppo_cfg_.num_envs);
  const std::size_t D = static_cast<std::size_t>(env_cfg_.obs_dim());
  const std::size_t n_heads = static_cast<std::size_t>(env_cfg_.n_agents);
  const std::size_t H = static_cast<std::size_t>(recurrent() ? 128 : 0);
  const int n_agents = env_cfg_.n_agents;

  RolloutBuffer buf;
  buf.num_steps = S;
  buf.num_envs = L;
  buf.per_agent.resize(num_learners());
  for (auto& roll : buf.per_agent) {
    roll.obs.assign(S * L * D, 0.0);
    roll.actions.assign(S * L * n_heads, 0);
    roll.logp.assign(S * L, 0.0);
    roll.value.assign(S * L, 0.0);
    roll.reward.assign(S * L, 0.0);
    roll.done.assign(S * L, 0);
    if (recurrent()) roll.h_in.assign(S * L * H, 0.0);
    roll.bootstrap.assign(L, 0.0);
  }

  Eigen::MatrixXd obs_batch(D, L);
  std::vector<env::MultiDiscreteAction> joint(static_cast<std::size_t>(n_agents));

  for (std::size_t s = 0; s < S; ++s) {
    // Forward + sample every learner over all lanes.
    for (std::size_t slot = 0; slot < num_learners(); ++slot) {
      const int agent = learner_agents_[slot];
      auto& roll = buf.per_agent[slot];
      for (std::size_t lane = 0; lane < L; ++lane) {
        const auto& v = lanes_[lane].obs.per_agent[agent];
        for (std::size_t j = 0; j < D; ++j) obs_batch(j, lane) = v[j];
        std::copy(v.begin(), v.end(), roll.obs.begin() + (s * L + lane) * D);
      }

      std::vector<Eigen::MatrixXd> logits;
      Eigen::VectorXd values;
      if (recurrent()) {
        for (std::size_t lane = 0; lane < L; ++lane)
          Eigen::Map<Eigen::VectorXd>(roll.h_in.data() + (s * L + lane) * H, H) =
              hidden_[slot].col(lane);
        auto cache = nn::rnn_step(std::get<nn::RNNPolicy>(policies_[slot]), obs_batch,
                                  hidden_[slot], Eigen::VectorXd::Ones(L));
        hidden_[slot] = cache.h;
        logits = std::move(cache.logits);
        values = std::move(cache.value);
      } else {
        auto cache = nn::ff_forward(std::get<nn::FFPolicy>(policies_[slot]), obs_batch);
        logits = std::move(cache.logits);
        values = std::move(cache.value);
      }

      for (std::size_t lane = 0; lane < L; ++lane) {
        const auto sample = nn::sample_heads(logits, static_cast<int>(lane), sample_rng_[slot]);
        for (std::size_t hidx = 0; hidx < n_heads; ++hidx)
          roll.actions[(s * L + lane) * n_heads + hidx] = sample.action[hidx];
        roll.logp[s * L + lane] = sample.log_prob;
        roll.value[s * L + lane] = values[static_cast<Eigen::Index>(lane)];
      }
    }

    // Step every lane with the assembled joint action.
    for (std::size_t lane = 0; lane < L; ++lane) {
      auto& lane_state = lanes_[lane];
      for (int agent = 0; agent < n_agents; ++agent) {
        if (lane_state.env.is_heuristic(agent)) {
          joint[agent] = lane_state.env.heuristic_action_now(agent);
        } else {
          const std::size_t slot = static_cast<std::size_t>(
              std::find(learner_agents_.begin(), learner_agents_.end(), agent) -
              learner_agents_.begin());
          const auto& roll = buf.per_agent[slot];
          env::MultiDiscreteAction act;
          act.own = roll.actions[(s * L + lane) * n_heads + 0];
          act.predictions.resize(n_heads - 1);
          for (std::size_t j = 0; j + 1 < n_heads; ++j)
            act.predictions[j] = roll.actions[(s * L + lane) * n_heads + j + 1];
          joint[agent] = std::move(act);
        }
      }

      auto result = lane_state.env.step(joint);
      lane_state.episode_return += result.reward;
      for (auto& roll : buf.per_agent) {
        roll.reward[s * L + lane] = result.reward;
        roll.done[s * L + lane] = result.done ? 1 : 0;
      }
      if (result.done) {
        buf.episode_returns.push_back(lane_state.episode_return);
        lane_state.episode_return = 0.0;
        lane_state.obs = lane_state.env.reset();
        for (std::size_t slot = 0; slot < num_learners(); ++slot)
          if (recurrent()) hidden_[slot].col(lane).setZero();
      } else {
        lane_state.obs = std::move(result.obs);
      }
    }
  }

  // Bootstrap value of the post-segment state; does not advance the carried
  // hidden state.
  for (std::size_t slot = 0; slot < num_learners(); ++slot) {
    const int agent = learner_agents_[slot];
    for (std::size_t lane = 0; lane < L; ++lane) {
      const auto& v = lanes_[lane].obs.per_agent[agent];
      for (std::size_t j = 0; j < D; ++j) obs_batch(j, lane) = v[j];
    }
    Eigen::VectorXd values;
    if (recurrent()) {
      auto cache = nn::rnn_step(std::get<nn::RNNPolicy>(policies_[slot]), obs_batch,
                                hidden_[slot], Eigen::VectorXd::Ones(L));
      values = std::move(cache.value);
    } else {
      auto cache = nn::ff_forward(std::get<nn::FFPolicy>(policies_[slot]), obs_batch);
      values = std::move(cache.value);
    }
    for (std::size_t lane = 0; lane < L; ++lane)
      buf.per_agent[slot].bootstrap[lane] = values[static_cast<Eigen::Index>(lane)];
  }

  return buf;
}

UpdateStats IppoTrainer::update_agent(std::size_t slot, const AgentRollout& roll,
                                      const GaeResult& gae, double lr) {
  return ppo_update(policies_[slot], adam_[slot], roll, gae, ppo_cfg_, lr, update_rng_[slot],
                    static_cast<std::size_t>(ppo_cfg_.num_steps),
                    static_cast<std::size_t>(ppo_cfg_.num_envs));
}

namespace {

struct LossAccum {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  int batches = 0;

  UpdateStats finish() const {
    const double d = batches > 0 ? batches : 1;
    return {policy / d, value / d, entropy / d, grad_norm / d};
  }
};

// Per-sample PPO coefficients. Returns the minibatch policy objective mean.
struct PpoCoefs {
  Eigen::VectorXd coef_logp;
  Eigen::VectorXd coef_ent;
  Eigen::VectorXd dvalue;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

PpoCoefs ppo_coefficients(const Eigen::VectorXd& new_logp, const Eigen::VectorXd& entropy,
                          const Eigen::VectorXd& values, const std::vector<double>& old_logp,
                          const std::vector<double>& adv, const std::vector<double>& ret,
                          const PPOConfig& cfg, std::size_t total_in_minibatch) {
  const std::size_t m = adv.size();
  const double inv_m = 1.0 / static_cast<double>(total_in_minibatch);
  PpoCoefs out;
  out.coef_logp = Eigen::VectorXd::Zero(m);
  out.coef_ent = Eigen::VectorXd::Constant(m, -cfg.entropy_coef * inv_m);
  out.dvalue = Eigen::VectorXd::Zero(m);
  for (std::size_t b = 0; b < m; ++b) {
    const double ratio = std::exp(new_logp[b] - old_logp[b]);
    const double unclipped = ratio * adv[b];
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv[b];
    const double obj = std::min(unclipped, clipped);
    out.policy_loss -= obj * inv_m;
    if (unclipped <= clipped) out.coef_logp[b] = -adv[b] * ratio * inv_m;
    const double verr = values[b] - ret[b];
    out.value_loss += verr * verr * inv_m;
    out.dvalue[b] = cfg.vf_coef * 2.0 * verr * inv_m;
    out.entropy += entropy[b] * inv_m;
  }
  return out;
}

UpdateStats update_ff(nn::FFPolicy& policy, nn::AdamState& adam, const AgentRollout& roll,
                      const GaeResult& gae, const PPOConfig& cfg, double lr, Rng& update_rng,
                      std::size_t S, std::size_t L) {
  const std::size_t D = static_cast<std::size_t>(policy.obs_dim);
  const std::size_t n_heads = static_cast<std::size_t>(policy.n_heads);
  const std::size_t total = S * L;
  const std::size_t mb_size = total / static_cast<std::size_t>(cfg.num_minibatches);

  std::vector<std::size_t> perm(total);
  std::iota(perm.begin(), perm.end(), 0);

  LossAccum accum;
  adam.lr = lr;

  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    shuffle_indices(perm, update_rng);
    for (int mb = 0; mb < cfg.num_minibatches; ++mb) {
      const std::size_t begin = static_cast<std::size_t>(mb) * mb_size;

      Eigen::MatrixXd obs(D, mb_size);
      std::vector<std::vector<int>> actions(n_heads, std::vector<int>(mb_size));
      std::vector<double> old_logp(mb_size), adv(mb_size), ret(mb_size);
      for (std::size_t b = 0; b < mb_size; ++b) {
        const std::size_t idx = perm[begin + b];
        for (std::size_t j = 0; j < D; ++j) obs(j, b) = roll.obs[idx * D + j];
        for (std::size_t hidx = 0; hidx < n_heads; ++hidx)
          actions[hidx][b] = roll.actions[idx * n_heads + hidx];
        old_logp[b] = roll.logp[idx];
        adv[b] = gae.advantages[idx];
        ret[b] = gae.returns[idx];
      }
      normalize_advantages(adv);

      auto cache = nn::ff_forward(policy, obs);
      auto eval = nn::evaluate_heads(cache.logits, actions);
      auto coefs = ppo_coefficients(eval.log_prob, eval.entropy, cache.value, old_logp, adv, ret,
                                    cfg, mb_size);
      if (!std::isfinite(coefs.policy_loss) || !std::isfinite(coefs.value_loss))
        throw NumericalError("ppo update diverged (epoch " + std::to_string(epoch) +
                             ", minibatch " + std::to_string(mb) + ")");

      auto dlogits = nn::head_backward(eval, actions, coefs.coef_logp, coefs.coef_ent);
      auto grads = policy.zeros_like();
      nn::ff_backward(policy, cache, dlogits, coefs.dvalue, grads);
      auto grad_tensors = grads.tensors();
      const double norm = nn::clip_global_norm(grad_tensors, cfg.max_grad_norm);
      auto params = policy.tensors();
      nn::adam_step(params, grad_tensors, adam);

      accum.policy += coefs.policy_loss;
      accum.value += coefs.value_loss;
      accum.entropy += coefs.entropy;
      accum.grad_norm += norm;
      accum.batches += 1;
    }
  }
  return accum.finish();
}

UpdateStats update_rnn(nn::RNNPolicy& policy, nn::AdamState& adam, const AgentRollout& roll,
                       const GaeResult& gae, const PPOConfig& cfg, double lr, Rng& update_rng,
                       std::size_t S, std::size_t L) {
  const std::size_t D = static_cast<std::size_t>(policy.obs_dim);
  const std::size_t H = static_cast<std::size_t>(policy.hidden_dim);
  const std::size_t n_heads = static_cast<std::size_t>(policy.n_heads);
  const std::size_t group = L / static_cast<std::size_t>(cfg.num_minibatches);

  std::vector<std::size_t> lane_perm(L);
  std::iota(lane_perm.begin(), lane_perm.end(), 0);

  LossAccum accum;
  adam.lr = lr;

  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    shuffle_indices(lane_perm, update_rng);
    for (int mb = 0; mb < cfg.num_minibatches; ++mb) {
      const std::size_t* lanes = lane_perm.data() + static_cast<std::size_t>(mb) * group;
      const std::size_t m_total = S * group;

      // Normalize advantages over the whole minibatch (all steps x lanes).
      std::vector<double> adv(m_total), ret(m_total), old_logp(m_total);
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t g = 0; g < group; ++g) {
          const std::size_t idx = s * L + lanes[g];
          adv[s * group + g] = gae.advantages[idx];
          ret[s * group + g] = gae.returns[idx];
          old_logp[s * group + g] = roll.logp[idx];
        }
      normalize_advantages(adv);

      // Re-unroll the full sequence from the stored segment-initial hidden
      // state, resetting at episode boundaries exactly as during collection.
      Eigen::MatrixXd h(H, group);
      for (std::size_t g = 0; g < group; ++g)
        h.col(g) = Eigen::Map<const Eigen::VectorXd>(roll.h_in.data() + (0 * L + lanes[g]) * H, H);

      std::vector<nn::RNNStepCache> caches;
      caches.reserve(S);
      std::vector<std::vector<Eigen::MatrixXd>> dlogits(S);
      std::vector<Eigen::VectorXd> dvalue(S);
      double policy_loss = 0.0, value_loss = 0.0, entropy_mean = 0.0;

      Eigen::MatrixXd obs(D, group);
      for (std::size_t s = 0; s < S; ++s) {
        Eigen::VectorXd carry(group);
        for (std::size_t g = 0; g < group; ++g) {
          const std::size_t idx = s * L + lanes[g];
          for (std::size_t j = 0; j < D; ++j) obs(j, g) = roll.obs[idx * D + j];
          if (s == 0) {
            carry[g] = 0.0;  // segment-initial state is a constant input
          } else {
            const bool was_done = roll.done[(s - 1) * L + lanes[g]] != 0;
            carry[g] = was_done ? 0.0 : 1.0;
            if (was_done) h.col(g).setZero();
          }
        }
        caches.push_back(nn::rnn_step(policy, obs, h, carry));
        h = caches.back().h;

        std::vector<std::vector<int>> actions(n_heads, std::vector<int>(group));
        for (std::size_t g = 0; g < group; ++g)
          for (std::size_t hidx = 0; hidx < n_heads; ++hidx)
            actions[hidx][g] = roll.actions[(s * L + lanes[g]) * n_heads + hidx];

        auto eval = nn::evaluate_heads(caches.back().logits, actions);
        std::vector<double> adv_s(adv.begin() + s * group, adv.begin() + (s + 1) * group);
        std::vector<double> ret_s(ret.begin() + s * group, ret.begin() + (s + 1) * group);
        std::vector<double> old_s(old_logp.begin() + s * group, old_logp.begin() + (s + 1) * group);
        auto coefs = ppo_coefficients(eval.log_prob, eval.entropy, caches.back().value, old_s,
                                      adv_s, ret_s, cfg, m_total);
        policy_loss += coefs.policy_loss;
        value_loss += coefs.value_loss;
        entropy_mean += coefs.entropy;
        dlogits[s] = nn::head_backward(eval, actions, coefs.coef_logp, coefs.coef_ent);
        dvalue[s] = std::move(coefs.dvalue);
      }

      if (!std::isfinite(policy_loss) || !std::isfinite(value_loss))
        throw NumericalError("ppo update diverged (epoch " + std::to_string(epoch) +
                             ", minibatch " + std::to_string(mb) + ")");

      auto grads = policy.zeros_like();
      nn::rnn_backward(policy, caches, dlogits, dvalue, grads);
      auto grad_tensors = grads.tensors();
      const double norm = nn::clip_global_norm(grad_tensors, cfg.max_grad_norm);
      auto params = policy.tensors();
      nn::adam_step(params, grad_tensors, adam);

      accum.policy += policy_loss;
      accum.value += value_loss;
      accum.entropy += entropy_mean;
      accum.grad_norm += norm;
      accum.batches += 1;
    }
  }
  return accum.finish();
}

}  // namespace

UpdateStats ppo_update(nn::Policy& policy, nn::AdamState& adam, const AgentRollout& roll,
                       const GaeResult& gae, const PPOConfig& cfg, double lr, Rng& update_rng,
                       std::size_t num_steps, std::size_t num_envs) {
  if (auto* rnn = std::get_if<nn::RNNPolicy>(&policy))
    return update_rnn(*rnn, adam, roll, gae, cfg, lr, update_rng, num_steps, num_envs);
  return update_ff(std::get<nn::FFPolicy>(policy), adam, roll, gae, cfg, lr, update_rng,
                   num_steps, num_envs);
}

void IppoTrainer::train(const std::function<void(const MetricsRow&)>& row_sink,
                        const std::string& checkpoint_dir) {
  const long long updates = num_updates();
  for (long long u = 0; u < updates; ++u) {
    const double progress = static_cast<double>(u) / static_cast<double>(updates);
    const double lr = anneal_lr(ppo_cfg_.learning_rate, progress, ppo_cfg_.anneal_lr);

    RolloutBuffer buf = collect_rollouts();
    MetricsRow row;
    row.update = u + 1;
    env_steps_done_ += static_cast<long long>(ppo_cfg_.num_steps) * ppo_cfg_.num_envs;
    row.env_steps = env_steps_done_;
    row.lr = lr;
    if (!buf.episode_returns.empty()) {
      double sum = 0.0;
      for (double r : buf.episode_returns) sum += r;
      row.mean_return = sum / static_cast<double>(buf.episode_returns.size());
    }
    for (std::size_t slot = 0; slot < num_learners(); ++slot) {
      const auto& roll = buf.per_agent[slot];
      const GaeResult gae =
          compute_gae(roll.reward, roll.value, roll.done, roll.bootstrap, buf.num_steps,
                      buf.num_envs, ppo_cfg_.gamma, ppo_cfg_.gae_lambda);
      row.per_agent.push_back(update_agent(slot, roll, gae, lr));
    }
    if (row_sink) row_sink(row);
    if (!checkpoint_dir.empty() && ppo_cfg_.checkpoint_interval > 0 &&
        (u + 1) % ppo_cfg_.checkpoint_interval == 0)
      save_checkpoints(checkpoint_dir, "_u" + std::to_string(u + 1));
  }
  if (!checkpoint_dir.empty()) save_checkpoints(checkpoint_dir);
}

void IppoTrainer::save_checkpoints(const std::string& dir, const std::string& suffix) const {
  for (std::size_t slot = 0; slot < num_learners(); ++slot) {
    const std::string path =
        dir + "/agent_" + std::to_string(learner_agents_[slot]) + suffix + ".ckpt";
    nn::save_policy(path, policies_[slot]);
  }
}

void write_metrics_header(std::ostream& out, std::size_t n_agents) {
  out << "update,env_steps";
  for (std::size_t i = 0; i < n_agents; ++i)
    out << ",return_" << i << ",policy_loss_" << i << ",value_loss_" << i << ",entropy_" << i
        << ",grad_norm_" << i;
  out << ",lr\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  out << row.update << "," << row.env_steps;
  for (const auto& stats : row.per_agent)
    out << "," << format_double(row.mean_return) << "," << format_double(stats.policy_loss) << ","
        << format_double(stats.value_loss) << "," << format_double(stats.entropy) << ","
        << format_double(stats.grad_norm);
  out << "," << format_double(row.lr) << "\n";
}

}  // namespace predgame::ppo
