#include "predgame/nn/adam.hpp"

#include <cmath>

#include "predgame/errors.hpp"

namespace predgame::nn {

AdamState adam_init(const std::vector<NamedTensor>& params, double lr) {
  AdamState state;
  state.lr = lr;
  std::size_t total = 0;
  for (const auto& nt : params) total += nt.tensor->size();
  state.m.assign(total, 0.0);
  state.v.assign(total, 0.0);
  return state;
}

void adam_step(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads,
               AdamState& state) {
  if (params.size() != grads.size())
    throw ValidationError("adam_step: parameter/gradient tensor count mismatch");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].tensor;
    const Tensor& g = *grads[i].tensor;
    if (p.size() != g.size())
      throw ValidationError("adam_step: shape mismatch for " + params[i].name);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g.data[j];
      double& m = state.m[offset + j];
      double& v = state.v[offset + j];
      m = state.beta1 * m + (1.0 - state.beta1) * gj;
      v = state.beta2 * v + (1.0 - state.beta2) * gj * gj;
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p.data[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    offset += p.size();
  }
}

double global_grad_norm(const std::vector<NamedTensor>& grads) {
  double sq = 0.0;
  for (const auto& nt : grads)
    for (double g : nt.tensor->data) sq += g * g;
  return std::sqrt(sq);
}

double clip_global_norm(const std::vector<NamedTensor>& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& nt : grads)
      for (double& g : nt.tensor->data) g *= scale;
  }
  return norm;
}

}  // namespace predgame::nn
