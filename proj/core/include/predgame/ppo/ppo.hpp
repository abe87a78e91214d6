#pragma once

#include <cstdint>
#include <vector>

namespace predgame::ppo {

struct PPOConfig {
  long long total_timesteps = 10'000'000;
  int num_steps = 128;
  int num_envs = 16;
  int update_epochs = 4;
  int num_minibatches = 4;
  double learning_rate = 2.5e-4;
  bool anneal_lr = false;
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int checkpoint_interval = 0;  // updates between checkpoints; 0 = final only

  // Recurrent minibatches keep full sequences: the env axis is split instead,
  // so num_envs must divide evenly as well.
  void validate(bool recurrent) const;  // throws ConfigError
};

// Linear decay to zero when enabled; constant otherwise.
double anneal_lr(double base_lr, double progress, bool enabled);

struct GaeResult {
  std::vector<double> advantages;  // [num_steps * num_envs]
  std::vector<double> returns;     // advantages + values
};

// Standard GAE recursion backward over time per env lane:
//   delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// Arrays are [num_steps * num_envs] with lane-major step rows; bootstrap is
// the value of the state after the final step, per lane.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones,
                      const std::vector<double>& bootstrap, std::size_t num_steps,
                      std::size_t num_envs, double gamma, double lambda);

}  // namespace predgame::ppo
