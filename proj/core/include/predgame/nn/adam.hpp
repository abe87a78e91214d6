#pragma once

#include <cstdint>
#include <vector>

#include "predgame/nn/tensor.hpp"

namespace predgame::nn {

// Bias-corrected Adam over a fixed list of parameter tensors. Moments are
// stored flat in the tensor iteration order, which must not change between
// steps.
struct AdamState {
  double lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
};

AdamState adam_init(const std::vector<NamedTensor>& params, double lr);

// params -= lr * m_hat / (sqrt(v_hat) + eps); increments step_count.
void adam_step(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads,
               AdamState& state);

double global_grad_norm(const std::vector<NamedTensor>& grads);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
double clip_global_norm(const std::vector<NamedTensor>& grads, double max_norm);

}  // namespace predgame::nn
