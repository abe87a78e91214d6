#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "predgame/nn/tensor.hpp"
#include "predgame/rng.hpp"

namespace predgame::nn {

enum class Activation { Relu, Tanh };

struct Dense {
  Tensor w;  // [out, in]
  Tensor b;  // [out]
  static Dense create(std::size_t out, std::size_t in) {
    return Dense{Tensor::zeros({out, in}), Tensor::zeros({out})};
  }
};

// Feed-forward actor-critic: separate actor and critic trunks, one categorical
// head per action component.
struct FFPolicy {
  int obs_dim = 0;
  int n_heads = 0;
  int n_actions = 0;
  int hidden_dim = 128;
  Activation activation = Activation::Relu;

  Dense actor_hidden;
  std::vector<Dense> actor_heads;
  Dense critic_hidden;
  Dense critic_head;

  static FFPolicy create(int obs_dim, int n_heads, int n_actions, int hidden_dim,
                         Activation activation);
  FFPolicy zeros_like() const;
  void init_params(Rng& rng);
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
};

// Gated recurrent cell: z/r gates with logistic activation, tanh candidate,
// blend h' = (1-z) * h + z * candidate.
struct GRUCell {
  Tensor wz, uz, bz;
  Tensor wr, ur, br;
  Tensor wh, uh, bh;
  static GRUCell create(std::size_t hidden, std::size_t input);
};

// Recurrent actor-critic: embedding -> GRU trunk shared by the actor heads
// and the critic head.
struct RNNPolicy {
  int obs_dim = 0;
  int n_heads = 0;
  int n_actions = 0;
  int hidden_dim = 128;
  Activation activation = Activation::Relu;

  Dense embed;
  GRUCell gru;
  std::vector<Dense> actor_heads;
  Dense critic_head;

  static RNNPolicy create(int obs_dim, int n_heads, int n_actions, int hidden_dim,
                          Activation activation);
  RNNPolicy zeros_like() const;
  void init_params(Rng& rng);
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
};

// ---- Forward / backward ----
// Batched over columns: obs is [obs_dim, B]. Caches hold what backward needs.

struct FFCache {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd a_h;  // actor hidden, post-activation
  Eigen::MatrixXd c_h;  // critic hidden, post-activation
  std::vector<Eigen::MatrixXd> logits;  // per head [A, B]
  Eigen::VectorXd value;                // [B]
};

FFCache ff_forward(const FFPolicy& p, const Eigen::MatrixXd& obs);

// Accumulates into `grads` (a zeros_like-shaped FFPolicy).
void ff_backward(const FFPolicy& p, const FFCache& cache,
                 const std::vector<Eigen::MatrixXd>& dlogits, const Eigen::VectorXd& dvalue,
                 FFPolicy& grads);

struct RNNStepCache {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd h_prev;  // input hidden state (already zeroed on resets)
  Eigen::VectorXd carry;   // per-column 1/0: does gradient flow to the previous step
  Eigen::MatrixXd e;       // embedding, post-activation
  Eigen::MatrixXd z, r, hc;
  Eigen::MatrixXd h;  // output hidden state
  std::vector<Eigen::MatrixXd> logits;
  Eigen::VectorXd value;
};

RNNStepCache rnn_step(const RNNPolicy& p, const Eigen::MatrixXd& obs,
                      const Eigen::MatrixXd& h_prev, const Eigen::VectorXd& carry);

// Backpropagation through time over a recorded segment. dlogits[t][head] and
// dvalue[t] may be empty matrices/vectors to mean zero. Accumulates into
// `grads`.
void rnn_backward(const RNNPolicy& p, const std::vector<RNNStepCache>& steps,
                  const std::vector<std::vector<Eigen::MatrixXd>>& dlogits,
                  const std::vector<Eigen::VectorXd>& dvalue, RNNPolicy& grads);

// ---- Multi-categorical heads ----

struct HeadSample {
  std::vector<int> action;  // one component per head
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Samples each head independently via softmax for one batch column.
// Throws NumericalError on non-finite logits.
HeadSample sample_heads(const std::vector<Eigen::MatrixXd>& logits, int col, Rng& rng);

struct HeadEval {
  Eigen::VectorXd log_prob;  // [B], summed over heads
  Eigen::VectorXd entropy;   // [B], summed over heads
  std::vector<Eigen::MatrixXd> probs;      // per head [A, B]
  std::vector<Eigen::MatrixXd> log_softmax;  // per head [A, B]
  std::vector<Eigen::VectorXd> head_entropy; // per head [B]
};

// actions[head][b] is the chosen component.
HeadEval evaluate_heads(const std::vector<Eigen::MatrixXd>& logits,
                        const std::vector<std::vector<int>>& actions);

// Gradient of sum_b (coef_logp[b] * log_prob_b + coef_ent[b] * entropy_b)
// with respect to each head's logits.
std::vector<Eigen::MatrixXd> head_backward(const HeadEval& eval,
                                           const std::vector<std::vector<int>>& actions,
                                           const Eigen::VectorXd& coef_logp,
                                           const Eigen::VectorXd& coef_ent);

// ---- Policy variant ----

using Policy = std::variant<FFPolicy, RNNPolicy>;

inline bool is_recurrent(const Policy& p) { return std::holds_alternative<RNNPolicy>(p); }
std::vector<NamedTensor> policy_tensors(Policy& p);
std::vector<ConstNamedTensor> policy_tensors(const Policy& p);
Policy policy_zeros_like(const Policy& p);
int policy_obs_dim(const Policy& p);
int policy_n_heads(const Policy& p);
int policy_n_actions(const Policy& p);
int policy_hidden_dim(const Policy& p);

}  // namespace predgame::nn
