#include "predgame/nn/policy.hpp"

#include <cmath>
#include <string>

#include "predgame/errors.hpp"

namespace predgame::nn {

namespace {

void init_dense(Dense& d, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(d.w.cols()));
  for (double& x : d.w.data) x = (2.0 * rng.uniform() - 1.0) * bound;
  d.b.set_zero();
}

void apply_activation(Eigen::MatrixXd& m, Activation act) {
  if (act == Activation::Relu)
    m = m.cwiseMax(0.0);
  else
    m = m.array().tanh().matrix();
}

// Derivative through the activation given the post-activation value.
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& post, const Eigen::MatrixXd& dpost,
                                Activation act) {
  if (act == Activation::Relu)
    return (post.array() > 0.0).cast<double>() * dpost.array();
  return (1.0 - post.array().square()) * dpost.array();
}

Eigen::MatrixXd logistic(const Eigen::MatrixXd& m) {
  return (1.0 / (1.0 + (-m.array()).exp())).matrix();
}

void dense_backward(const Dense& layer, const Eigen::MatrixXd& input,
                    const Eigen::MatrixXd& dout, Dense& grads, Eigen::MatrixXd* dinput,
                    bool accumulate_input) {
  grads.w.mat().noalias() += dout * input.transpose();
  grads.b.vec().noalias() += dout.rowwise().sum();
  if (dinput) {
    if (accumulate_input)
      dinput->noalias() += layer.w.mat().transpose() * dout;
    else
      dinput->noalias() = layer.w.mat().transpose() * dout;
  }
}

}  // namespace

// ---- FFPolicy ----

FFPolicy FFPolicy::create(int obs_dim, int n_heads, int n_actions, int hidden_dim,
                          Activation activation) {
  FFPolicy p;
  p.obs_dim = obs_dim;
  p.n_heads = n_heads;
  p.n_actions = n_actions;
  p.hidden_dim = hidden_dim;
  p.activation = activation;
  const auto d = static_cast<std::size_t>(obs_dim);
  const auto h = static_cast<std::size_t>(hidden_dim);
  const auto a = static_cast<std::size_t>(n_actions);
  p.actor_hidden = Dense::create(h, d);
  for (int i = 0; i < n_heads; ++i) p.actor_heads.push_back(Dense::create(a, h));
  p.critic_hidden = Dense::create(h, d);
  p.critic_head = Dense::create(1, h);
  return p;
}

FFPolicy FFPolicy::zeros_like() const {
  return create(obs_dim, n_heads, n_actions, hidden_dim, activation);
}

void FFPolicy::init_params(Rng& rng) {
  init_dense(actor_hidden, rng);
  for (auto& head : actor_heads) init_dense(head, rng);
  init_dense(critic_hidden, rng);
  init_dense(critic_head, rng);
}

std::vector<NamedTensor> FFPolicy::tensors() {
  std::vector<NamedTensor> out;
  out.push_back({"actor_hidden.w", &actor_hidden.w});
  out.push_back({"actor_hidden.b", &actor_hidden.b});
  for (std::size_t i = 0; i < actor_heads.size(); ++i) {
    out.push_back({"actor_head" + std::to_string(i) + ".w", &actor_heads[i].w});
    out.push_back({"actor_head" + std::to_string(i) + ".b", &actor_heads[i].b});
  }
  out.push_back({"critic_hidden.w", &critic_hidden.w});
  out.push_back({"critic_hidden.b", &critic_hidden.b});
  out.push_back({"critic_head.w", &critic_head.w});
  out.push_back({"critic_head.b", &critic_head.b});
  return out;
}

std::vector<ConstNamedTensor> FFPolicy::tensors() const {
  auto named = const_cast<FFPolicy*>(this)->tensors();
  std::vector<ConstNamedTensor> out;
  out.reserve(named.size());
  for (auto& nt : named) out.push_back({nt.name, nt.tensor});
  return out;
}

FFCache ff_forward(const FFPolicy& p, const Eigen::MatrixXd& obs) {
  if (obs.rows() != p.obs_dim)
    throw ValidationError("ff_forward: obs dim " + std::to_string(obs.rows()) + " != " +
                          std::to_string(p.obs_dim));
  FFCache c;
  c.obs = obs;
  c.a_h.noalias() = p.actor_hidden.w.mat() * obs;
  c.a_h.colwise() += p.actor_hidden.b.vec();
  apply_activation(c.a_h, p.activation);
  c.logits.reserve(p.actor_heads.size());
  for (const auto& head : p.actor_heads) {
    Eigen::MatrixXd l = head.w.mat() * c.a_h;
    l.colwise() += head.b.vec();
    c.logits.push_back(std::move(l));
  }
  c.c_h.noalias() = p.critic_hidden.w.mat() * obs;
  c.c_h.colwise() += p.critic_hidden.b.vec();
  apply_activation(c.c_h, p.activation);
  c.value = (p.critic_head.w.mat() * c.c_h).row(0).transpose();
  c.value.array() += p.critic_head.b.data[0];
  return c;
}

void ff_backward(const FFPolicy& p, const FFCache& cache,
                 const std::vector<Eigen::MatrixXd>& dlogits, const Eigen::VectorXd& dvalue,
                 FFPolicy& grads) {
  const Eigen::Index batch = cache.obs.cols();
  Eigen::MatrixXd da_h = Eigen::MatrixXd::Zero(p.hidden_dim, batch);
  for (std::size_t i = 0; i < p.actor_heads.size(); ++i) {
    if (dlogits[i].size() == 0) continue;
    dense_backward(p.actor_heads[i], cache.a_h, dlogits[i], grads.actor_heads[i], &da_h, true);
  }
  const Eigen::MatrixXd da_pre = activation_grad(cache.a_h, da_h, p.activation);
  dense_backward(p.actor_hidden, cache.obs, da_pre, grads.actor_hidden, nullptr, false);

  if (dvalue.size() != 0) {
    const Eigen::MatrixXd dv = dvalue.transpose();  // [1, B]
    Eigen::MatrixXd dc_h;
    dense_backward(p.critic_head, cache.c_h, dv, grads.critic_head, &dc_h, false);
    const Eigen::MatrixXd dc_pre = activation_grad(cache.c_h, dc_h, p.activation);
    dense_backward(p.critic_hidden, cache.obs, dc_pre, grads.critic_hidden, nullptr, false);
  }
}

// ---- RNNPolicy ----

GRUCell GRUCell::create(std::size_t hidden, std::size_t input) {
  GRUCell g;
  g.wz = Tensor::zeros({hidden, input});
  g.uz = Tensor::zeros({hidden, hidden});
  g.bz = Tensor::zeros({hidden});
  g.wr = Tensor::zeros({hidden, input});
  g.ur = Tensor::zeros({hidden, hidden});
  g.br = Tensor::zeros({hidden});
  g.wh = Tensor::zeros({hidden, input});
  g.uh = Tensor::zeros({hidden, hidden});
  g.bh = Tensor::zeros({hidden});
  return g;
}

RNNPolicy RNNPolicy::create(int obs_dim, int n_heads, int n_actions, int hidden_dim,
                            Activation activation) {
  RNNPolicy p;
  p.obs_dim = obs_dim;
  p.n_heads = n_heads;
  p.n_actions = n_actions;
  p.hidden_dim = hidden_dim;
  p.activation = activation;
  const auto d = static_cast<std::size_t>(obs_dim);
  const auto h = static_cast<std::size_t>(hidden_dim);
  const auto a = static_cast<std::size_t>(n_actions);
  p.embed = Dense::create(h, d);
  p.gru = GRUCell::create(h, h);
  for (int i = 0; i < n_heads; ++i) p.actor_heads.push_back(Dense::create(a, h));
  p.critic_head = Dense::create(1, h);
  return p;
}

RNNPolicy RNNPolicy::zeros_like() const {
  return create(obs_dim, n_heads, n_actions, hidden_dim, activation);
}

void RNNPolicy::init_params(Rng& rng) {
  init_dense(embed, rng);
  auto init_tensor = [&rng](Tensor& t) {
    const double bound = std::sqrt(1.0 / static_cast<double>(t.cols()));
    for (double& x : t.data) x = (2.0 * rng.uniform() - 1.0) * bound;
  };
  init_tensor(gru.wz);
  init_tensor(gru.uz);
  init_tensor(gru.wr);
  init_tensor(gru.ur);
  init_tensor(gru.wh);
  init_tensor(gru.uh);
  gru.bz.set_zero();
  gru.br.set_zero();
  gru.bh.set_zero();
  for (auto& head : actor_heads) init_dense(head, rng);
  init_dense(critic_head, rng);
}

std::vector<NamedTensor> RNNPolicy::tensors() {
  std::vector<NamedTensor> out;
  out.push_back({"embed.w", &embed.w});
  out.push_back({"embed.b", &embed.b});
  out.push_back({"gru.wz", &gru.wz});
  out.push_back({"gru.uz", &gru.uz});
  out.push_back({"gru.bz", &gru.bz});
  out.push_back({"gru.wr", &gru.wr});
  out.push_back({"gru.ur", &gru.ur});
  out.push_back({"gru.br", &gru.br});
  out.push_back({"gru.wh", &gru.wh});
  out.push_back({"gru.uh", &gru.uh});
  out.push_back({"gru.bh", &gru.bh});
  for (std::size_t i = 0; i < actor_heads.size(); ++i) {
    out.push_back({"actor_head" + std::to_string(i) + ".w", &actor_heads[i].w});
    out.push_back({"actor_head" + std::to_string(i) + ".b", &actor_heads[i].b});
  }
  out.push_back({"critic_head.w", &critic_head.w});
  out.push_back({"critic_head.b", &critic_head.b});
  return out;
}

std::vector<ConstNamedTensor> RNNPolicy::tensors() const {
  auto named = const_cast<RNNPolicy*>(this)->tensors();
  std::vector<ConstNamedTensor> out;
  out.reserve(named.size());
  for (auto& nt : named) out.push_back({nt.name, nt.tensor});
  return out;
}

RNNStepCache rnn_step(const RNNPolicy& p, const Eigen::MatrixXd& obs,
                      const Eigen::MatrixXd& h_prev, const Eigen::VectorXd& carry) {
  if (obs.rows() != p.obs_dim)
    throw ValidationError("rnn_step: obs dim " + std::to_string(obs.rows()) + " != " +
                          std::to_string(p.obs_dim));
  if (h_prev.rows() != p.hidden_dim)
    throw ValidationError("rnn_step: hidden dim " + std::to_string(h_prev.rows()) + " != " +
                          std::to_string(p.hidden_dim));
  RNNStepCache c;
  c.obs = obs;
  c.h_prev = h_prev;
  c.carry = carry;

  c.e.noalias() = p.embed.w.mat() * obs;
  c.e.colwise() += p.embed.b.vec();
  apply_activation(c.e, p.activation);

  Eigen::MatrixXd az = p.gru.wz.mat() * c.e + p.gru.uz.mat() * h_prev;
  az.colwise() += p.gru.bz.vec();
  c.z = logistic(az);

  Eigen::MatrixXd ar = p.gru.wr.mat() * c.e + p.gru.ur.mat() * h_prev;
  ar.colwise() += p.gru.br.vec();
  c.r = logistic(ar);

  Eigen::MatrixXd ah = p.gru.wh.mat() * c.e + p.gru.uh.mat() * (c.r.array() * h_prev.array()).matrix();
  ah.colwise() += p.gru.bh.vec();
  c.hc = ah.array().tanh().matrix();

  c.h = ((1.0 - c.z.array()) * h_prev.array() + c.z.array() * c.hc.array()).matrix();

  c.logits.reserve(p.actor_heads.size());
  for (const auto& head : p.actor_heads) {
    Eigen::MatrixXd l = head.w.mat() * c.h;
    l.colwise() += head.b.vec();
    c.logits.push_back(std::move(l));
  }
  c.value = (p.critic_head.w.mat() * c.h).row(0).transpose();
  c.value.array() += p.critic_head.b.data[0];
  return c;
}

void rnn_backward(const RNNPolicy& p, const std::vector<RNNStepCache>& steps,
                  const std::vector<std::vector<Eigen::MatrixXd>>& dlogits,
                  const std::vector<Eigen::VectorXd>& dvalue, RNNPolicy& grads) {
  if (steps.empty()) return;
  const Eigen::Index batch = steps.front().obs.cols();
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(p.hidden_dim, batch);

  for (int t = static_cast<int>(steps.size()) - 1; t >= 0; --t) {
    const RNNStepCache& c = steps[t];

    // Head contributions at this step.
    for (std::size_t i = 0; i < p.actor_heads.size(); ++i) {
      const auto& dl = dlogits[t][i];
      if (dl.size() == 0) continue;
      dense_backward(p.actor_heads[i], c.h, dl, grads.actor_heads[i], &dh, true);
    }
    if (dvalue[t].size() != 0) {
      const Eigen::MatrixXd dv = dvalue[t].transpose();
      dense_backward(p.critic_head, c.h, dv, grads.critic_head, &dh, true);
    }

    // Through the cell.
    const Eigen::ArrayXXd dh_a = dh.array();
    const Eigen::MatrixXd dz = (dh_a * (c.hc.array() - c.h_prev.array())).matrix();
    const Eigen::MatrixXd dhc = (dh_a * c.z.array()).matrix();
    Eigen::MatrixXd dh_prev = (dh_a * (1.0 - c.z.array())).matrix();

    const Eigen::MatrixXd dah = (dhc.array() * (1.0 - c.hc.array().square())).matrix();
    const Eigen::MatrixXd rh = (c.r.array() * c.h_prev.array()).matrix();
    grads.gru.wh.mat().noalias() += dah * c.e.transpose();
    grads.gru.uh.mat().noalias() += dah * rh.transpose();
    grads.gru.bh.vec().noalias() += dah.rowwise().sum();
    Eigen::MatrixXd de = p.gru.wh.mat().transpose() * dah;
    const Eigen::MatrixXd drh = p.gru.uh.mat().transpose() * dah;
    const Eigen::MatrixXd dr = (drh.array() * c.h_prev.array()).matrix();
    dh_prev.array() += drh.array() * c.r.array();

    const Eigen::MatrixXd daz = (dz.array() * c.z.array() * (1.0 - c.z.array())).matrix();
    grads.gru.wz.mat().noalias() += daz * c.e.transpose();
    grads.gru.uz.mat().noalias() += daz * c.h_prev.transpose();
    grads.gru.bz.vec().noalias() += daz.rowwise().sum();
    de.noalias() += p.gru.wz.mat().transpose() * daz;
    dh_prev.noalias() += p.gru.uz.mat().transpose() * daz;

    const Eigen::MatrixXd dar = (dr.array() * c.r.array() * (1.0 - c.r.array())).matrix();
    grads.gru.wr.mat().noalias() += dar * c.e.transpose();
    grads.gru.ur.mat().noalias() += dar * c.h_prev.transpose();
    grads.gru.br.vec().noalias() += dar.rowwise().sum();
    de.noalias() += p.gru.wr.mat().transpose() * dar;
    dh_prev.noalias() += p.gru.ur.mat().transpose() * dar;

    const Eigen::MatrixXd de_pre = activation_grad(c.e, de, p.activation);
    dense_backward(p.embed, c.obs, de_pre, grads.embed, nullptr, false);

    // Carry to the previous step, cut at episode boundaries.
    dh = dh_prev.array().rowwise() * c.carry.transpose().array();
  }
}

// ---- Heads ----

namespace {

// Column-wise log-softmax; writes probs and log-probs.
void softmax_columns(const Eigen::MatrixXd& logits, Eigen::MatrixXd& probs,
                     Eigen::MatrixXd& log_probs) {
  const Eigen::RowVectorXd maxima = logits.colwise().maxCoeff();
  Eigen::MatrixXd shifted = logits.rowwise() - maxima;
  const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log();
  log_probs = shifted.rowwise() - lse;
  probs = log_probs.array().exp();
}

}  // namespace

HeadSample sample_heads(const std::vector<Eigen::MatrixXd>& logits, int col, Rng& rng) {
  HeadSample out;
  out.action.reserve(logits.size());
  for (const auto& head : logits) {
    const Eigen::VectorXd l = head.col(col);
    if (!l.allFinite()) throw NumericalError("sample_heads: non-finite logits");
    const double m = l.maxCoeff();
    Eigen::VectorXd probs = (l.array() - m).exp();
    probs /= probs.sum();
    const double u = rng.uniform();
    int chosen = static_cast<int>(probs.size()) - 1;
    double cum = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) {
        chosen = i;
        break;
      }
    }
    out.action.push_back(chosen);
    double head_entropy = 0.0;
    for (int i = 0; i < probs.size(); ++i)
      if (probs[i] > 0.0) head_entropy -= probs[i] * std::log(probs[i]);
    out.entropy += head_entropy;
    out.log_prob += std::log(probs[chosen]);
  }
  return out;
}

HeadEval evaluate_heads(const std::vector<Eigen::MatrixXd>& logits,
                        const std::vector<std::vector<int>>& actions) {
  HeadEval eval;
  const Eigen::Index batch = logits.front().cols();
  eval.log_prob = Eigen::VectorXd::Zero(batch);
  eval.entropy = Eigen::VectorXd::Zero(batch);
  eval.probs.resize(logits.size());
  eval.log_softmax.resize(logits.size());
  eval.head_entropy.resize(logits.size());
  for (std::size_t head = 0; head < logits.size(); ++head) {
    softmax_columns(logits[head], eval.probs[head], eval.log_softmax[head]);
    Eigen::VectorXd h = -(eval.probs[head].array() * eval.log_softmax[head].array())
                             .colwise()
                             .sum()
                             .transpose();
    for (Eigen::Index b = 0; b < batch; ++b)
      eval.log_prob[b] += eval.log_softmax[head](actions[head][b], b);
    eval.entropy += h;
    eval.head_entropy[head] = std::move(h);
  }
  return eval;
}

std::vector<Eigen::MatrixXd> head_backward(const HeadEval& eval,
                                           const std::vector<std::vector<int>>& actions,
                                           const Eigen::VectorXd& coef_logp,
                                           const Eigen::VectorXd& coef_ent) {
  std::vector<Eigen::MatrixXd> dlogits;
  dlogits.reserve(eval.probs.size());
  for (std::size_t head = 0; head < eval.probs.size(); ++head) {
    const Eigen::MatrixXd& p = eval.probs[head];
    const Eigen::MatrixXd& logp = eval.log_softmax[head];
    const Eigen::VectorXd& h = eval.head_entropy[head];
    // d log_prob / d logit = onehot(a) - p
    Eigen::MatrixXd d = (-p).array().rowwise() * coef_logp.transpose().array();
    for (Eigen::Index b = 0; b < p.cols(); ++b) d(actions[head][b], b) += coef_logp[b];
    // d entropy / d logit = -p .* (logp + H_head)
    d.array() -= (p.array() * (logp.array().rowwise() + h.transpose().array())).rowwise() *
                 coef_ent.transpose().array();
    dlogits.push_back(std::move(d));
  }
  return dlogits;
}

// ---- Policy variant ----

std::vector<NamedTensor> policy_tensors(Policy& p) {
  return std::visit([](auto& v) { return v.tensors(); }, p);
}

std::vector<ConstNamedTensor> policy_tensors(const Policy& p) {
  return std::visit([](const auto& v) { return v.tensors(); }, p);
}

Policy policy_zeros_like(const Policy& p) {
  return std::visit([](const auto& v) -> Policy { return v.zeros_like(); }, p);
}

int policy_obs_dim(const Policy& p) {
  return std::visit([](const auto& v) { return v.obs_dim; }, p);
}
int policy_n_heads(const Policy& p) {
  return std::visit([](const auto& v) { return v.n_heads; }, p);
}
int policy_n_actions(const Policy& p) {
  return std::visit([](const auto& v) { return v.n_actions; }, p);
}
int policy_hidden_dim(const Policy& p) {
  return std::visit([](const auto& v) { return v.hidden_dim; }, p);
}

}  // namespace predgame::nn
