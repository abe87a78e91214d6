#include "predgame/ppo/ppo.hpp"

#include <string>

#include "predgame/errors.hpp"

namespace predgame::ppo {

void PPOConfig::validate(bool recurrent) const {
  if (total_timesteps < 1) throw ConfigError("total_timesteps must be >= 1");
  if (num_steps < 1 || num_envs < 1) throw ConfigError("num_steps and num_envs must be >= 1");
  if (update_epochs < 1) throw ConfigError("update_epochs must be >= 1");
  if (num_minibatches < 1) throw ConfigError("num_minibatches must be >= 1");
  if ((static_cast<long long>(num_steps) * num_envs) % num_minibatches != 0)
    throw ConfigError("num_envs * num_steps must be divisible by num_minibatches");
  if (recurrent && num_envs % num_minibatches != 0)
    throw ConfigError("recurrent minibatching needs num_envs divisible by num_minibatches");
  if (!(clip_eps > 0.0)) throw ConfigError("clip_eps must be > 0");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0, 1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("gae_lambda must be in [0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be > 0");
}

double anneal_lr(double base_lr, double progress, bool enabled) {
  if (progress < 0.0 || progress > 1.0)
    throw ValidationError("anneal_lr: progress must be in [0, 1], got " +
                          std::to_string(progress));
  return enabled ? base_lr * (1.0 - progress) : base_lr;
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones,
                      const std::vector<double>& bootstrap, std::size_t num_steps,
                      std::size_t num_envs, double gamma, double lambda) {
  const std::size_t total = num_steps * num_envs;
  if (rewards.size() != total || values.size() != total || dones.size() != total ||
      bootstrap.size() != num_envs)
    throw ValidationError("compute_gae: array shapes do not match num_steps * num_envs");

  GaeResult out;
  out.advantages.assign(total, 0.0);
  out.returns.assign(total, 0.0);
  for (std::size_t lane = 0; lane < num_envs; ++lane) {
    double next_advantage = 0.0;
    double next_value = bootstrap[lane];
    for (std::size_t s = num_steps; s-- > 0;) {
      const std::size_t idx = s * num_envs + lane;
      const double not_done = dones[idx] ? 0.0 : 1.0;
      const double delta = rewards[idx] + gamma * next_value * not_done - values[idx];
      next_advantage = delta + gamma * lambda * not_done * next_advantage;
      out.advantages[idx] = next_advantage;
      out.returns[idx] = next_advantage + values[idx];
      next_value = values[idx];
    }
  }
  return out;
}

}  // namespace predgame::ppo
