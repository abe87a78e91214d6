#include "predgame/selftest/selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "predgame/env/env.hpp"
#include "predgame/mi/digamma.hpp"
#include "predgame/mi/estimators.hpp"
#include "predgame/nn/adam.hpp"
#include "predgame/nn/policy.hpp"
#include "predgame/ppo/ppo.hpp"
#include "predgame/ppo/trainer.hpp"
#include "predgame/rng.hpp"

namespace predgame::selftest {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

}  // namespace

double digamma_series_oracle(double x) {
  // psi(x) = -gamma + sum_{n=0}^{199} (1/(n+1) - 1/(n+x)) + psi(x+200) - psi(201),
  // with the tail values taken from a short asymptotic expansion far from 0.
  double sum = -kEulerGamma;
  for (int n = 0; n < 200; ++n) sum += 1.0 / (n + 1.0) - 1.0 / (n + x);
  auto tail = [](double y) {
    const double inv = 1.0 / y;
    const double inv2 = inv * inv;
    return std::log(y) - 0.5 * inv - inv2 / 12.0 + inv2 * inv2 / 120.0 -
           inv2 * inv2 * inv2 / 252.0;
  };
  return sum + tail(x + 200.0) - tail(201.0);
}

CheckResult check_digamma(const std::function<double(double)>& fn) {
  const auto start = Clock::now();
  const auto psi = fn ? fn : [](double x) { return mi::digamma(x); };
  CheckResult result{"digamma", true, 0.0, ""};

  // 50 points log-spaced over [1e-3, 1e6] against the series oracle.
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double x = std::pow(10.0, -3.0 + 9.0 * i / 49.0);
    const double err = std::fabs(psi(x) - digamma_series_oracle(x));
    worst = std::max(worst, err);
  }
  if (worst > 1e-10) result.passed = false;

  // Recurrence psi(x+1) - psi(x) = 1/x.
  double worst_rec = 0.0;
  Rng rng(20240901);
  for (int i = 0; i < 50; ++i) {
    const double x = std::pow(10.0, -3.0 + 9.0 * rng.uniform());
    const double err = std::fabs(psi(x + 1.0) - psi(x) - 1.0 / x);
    worst_rec = std::max(worst_rec, err);
  }
  if (worst_rec > 1e-12) result.passed = false;

  result.detail = "max |err| " + fmt(worst) + ", recurrence " + fmt(worst_rec);
  result.elapsed_s = seconds_since(start);
  return result;
}

namespace {

// Direct summation over an explicit joint table, independent of mi_plugin's
// counting path.
double plugin_oracle(const std::vector<std::vector<int>>& table) {
  double n = 0.0;
  std::vector<double> row(table.size(), 0.0);
  std::vector<double> col(table[0].size(), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table[0].size(); ++j) {
      n += table[i][j];
      row[i] += table[i][j];
      col[j] += table[i][j];
    }
  double mi = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table[0].size(); ++j) {
      const double c = table[i][j];
      if (c == 0.0 || row[i] == 0.0 || col[j] == 0.0) continue;
      mi += (c / n) * std::log((c * n) / (row[i] * col[j]));
    }
  return mi;
}

mi::SampleSet table_to_samples(const std::vector<std::vector<int>>& table) {
  std::vector<std::int64_t> x, y;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table[0].size(); ++j)
      for (int c = 0; c < table[i][j]; ++c) {
        x.push_back(static_cast<std::int64_t>(i));
        y.push_back(static_cast<std::int64_t>(j));
      }
  return mi::SampleSet::discrete_discrete(std::move(x), std::move(y));
}

}  // namespace

CheckResult check_mi_plugin() {
  const auto start = Clock::now();
  CheckResult result{"mi_plugin", true, 0.0, ""};
  Rng rng(77001);
  double worst = 0.0;

  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 2 + rng.uniform_int(4);
    const std::size_t cols = 2 + rng.uniform_int(4);
    std::vector<std::vector<int>> table(rows, std::vector<int>(cols));
    for (auto& r : table)
      for (int& c : r) c = static_cast<int>(rng.uniform_int(6));
    table[0][0] += 1;  // never empty
    table[rows - 1][cols - 1] += 1;

    const auto samples = table_to_samples(table);
    const double got = mi_plugin(samples).value;
    worst = std::max(worst, std::fabs(got - plugin_oracle(table)));

    // Exact symmetry.
    auto swapped = mi::SampleSet::discrete_discrete(samples.y_discrete, samples.x_discrete);
    if (mi_plugin(swapped).value != got) {
      result.passed = false;
      result.detail = "symmetry violated on trial " + std::to_string(trial);
    }
  }
  if (worst > 1e-12) result.passed = false;

  // Independence: outer-product counts give exactly zero.
  {
    std::vector<std::vector<int>> prod(3, std::vector<int>(4));
    const int a[3] = {2, 5, 1};
    const int b[4] = {1, 3, 2, 4};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) prod[i][j] = a[i] * b[j];
    if (mi_plugin(table_to_samples(prod)).value != 0.0) {
      result.passed = false;
      result.detail += " independence not exactly zero;";
    }
  }

  // Deterministic map: I(X, f(X)) = H(f(X)) on the empirical distribution.
  {
    std::vector<std::int64_t> x, y;
    Rng map_rng(77002);
    for (int i = 0; i < 500; ++i) {
      const std::int64_t v = static_cast<std::int64_t>(map_rng.uniform_int(7));
      x.push_back(v);
      y.push_back(v % 3);
    }
    const auto s = mi::SampleSet::discrete_discrete(x, y);
    const double err = std::fabs(mi_plugin(s).value - mi::entropy_discrete(y));
    worst = std::max(worst, err);
    if (err > 1e-12) result.passed = false;
  }

  if (result.detail.empty()) result.detail = "max |err| " + fmt(worst);
  result.elapsed_s = seconds_since(start);
  return result;
}

namespace {

mi::PointMatrix column(const std::vector<double>& values) {
  mi::PointMatrix m;
  m.n = values.size();
  m.d = 1;
  m.data = values;
  return m;
}

}  // namespace

CheckResult check_mi_ksg() {
  const auto start = Clock::now();
  CheckResult result{"mi_ksg", true, 0.0, ""};
  const std::size_t n = 10000;
  const int k = 3;
  std::string detail;
  for (const double rho : {0.0, 0.5, 0.9}) {
    Rng rng(88100 + static_cast<std::uint64_t>(rho * 10));
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.normal();
      const double e = rng.normal();
      xs[i] = x;
      ys[i] = rho * x + std::sqrt(1.0 - rho * rho) * e;
    }
    const auto samples = mi::SampleSet::continuous_continuous(column(xs), column(ys));
    const double got = mi_ksg(samples, k, 88200).value;
    const double expected = -0.5 * std::log(1.0 - rho * rho);
    const double err = std::fabs(got - expected);
    detail += "rho=" + fmt(rho) + " err=" + fmt(err) + " ";
    if (err > 0.05) result.passed = false;
  }
  result.detail = detail;
  result.elapsed_s = seconds_since(start);
  return result;
}

namespace {

// MI of a balanced two-Gaussian mixture, by Simpson quadrature:
// I = sum_y p(y) \int f(x|y) ln(f(x|y) / f(x)) dx.
double two_gaussian_mi_oracle(double mu, double sigma) {
  auto pdf = [](double x, double m, double s) {
    const double z = (x - m) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * 3.14159265358979323846));
  };
  const double lo = -mu - 10.0 * sigma;
  const double hi = mu + 10.0 * sigma;
  const int steps = 20000;  // even
  const double h = (hi - lo) / steps;
  double integral = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + h * i;
    const double f0 = pdf(x, -mu, sigma);
    const double f1 = pdf(x, mu, sigma);
    const double fx = 0.5 * (f0 + f1);
    double term = 0.0;
    if (f0 > 0.0 && fx > 0.0) term += 0.5 * f0 * std::log(f0 / fx);
    if (f1 > 0.0 && fx > 0.0) term += 0.5 * f1 * std::log(f1 / fx);
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    integral += w * term;
  }
  return integral * h / 3.0;
}

}  // namespace

CheckResult check_mi_ross() {
  const auto start = Clock::now();
  CheckResult result{"mi_ross", true, 0.0, ""};
  const std::size_t n = 5000;
  const int k = 3;

  // Labels independent of the continuous variable: MI ~ 0.
  {
    Rng rng(99100);
    std::vector<double> xs(n);
    std::vector<std::int64_t> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = rng.normal();
      ys[i] = static_cast<std::int64_t>(rng.uniform_int(2));
    }
    const auto samples = mi::SampleSet::continuous_discrete(column(xs), ys);
    const double got = mi_ross(samples, k, 99200).value;
    result.detail += "indep=" + fmt(got) + " ";
    if (std::fabs(got) > 0.05) result.passed = false;
  }

  // Two well-separated Gaussians vs the quadrature oracle.
  {
    const double mu = 2.0;
    const double sigma = 0.5;  // variance 0.25
    Rng rng(99300);
    std::vector<double> xs(n);
    std::vector<std::int64_t> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t label = static_cast<std::int64_t>(rng.uniform_int(2));
      ys[i] = label;
      xs[i] = (label == 0 ? -mu : mu) + sigma * rng.normal();
    }
    const auto samples = mi::SampleSet::continuous_discrete(column(xs), ys);
    const double got = mi_ross(samples, k, 99400).value;
    const double expected = two_gaussian_mi_oracle(mu, sigma);
    const double err = std::fabs(got - expected);
    result.detail += "mixture err=" + fmt(err) + " (oracle " + fmt(expected) + ")";
    if (err > 0.07) result.passed = false;
    if (got < 0.60) result.passed = false;
  }

  result.elapsed_s = seconds_since(start);
  return result;
}

namespace {

struct GradCheckSetup {
  std::vector<std::vector<int>> actions;  // [head][B]
  std::vector<double> coef_logp;          // per sample
  std::vector<double> targets;            // value targets
};

// Composite scalar loss exercising every path: weighted log-probs, entropy,
// and value regression.
double ff_loss(const nn::FFPolicy& p, const Eigen::MatrixXd& obs, const GradCheckSetup& setup) {
  auto cache = nn::ff_forward(p, obs);
  auto eval = nn::evaluate_heads(cache.logits, setup.actions);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < obs.cols(); ++b) {
    loss += setup.coef_logp[b] * eval.log_prob[b] + 0.01 * eval.entropy[b];
    const double verr = cache.value[b] - setup.targets[b];
    loss += verr * verr;
  }
  return loss;
}

double rnn_loss(const nn::RNNPolicy& p, const std::vector<Eigen::MatrixXd>& obs_seq,
                const std::vector<Eigen::VectorXd>& carry_seq,
                const std::vector<GradCheckSetup>& setups) {
  const auto batch = obs_seq.front().cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p.hidden_dim, batch);
  double loss = 0.0;
  for (std::size_t t = 0; t < obs_seq.size(); ++t) {
    for (Eigen::Index g = 0; g < batch; ++g)
      if (carry_seq[t][g] == 0.0 && t > 0) h.col(g).setZero();
    auto cache = nn::rnn_step(p, obs_seq[t], h, carry_seq[t]);
    h = cache.h;
    auto eval = nn::evaluate_heads(cache.logits, setups[t].actions);
    for (Eigen::Index b = 0; b < batch; ++b) {
      loss += setups[t].coef_logp[b] * eval.log_prob[b] + 0.01 * eval.entropy[b];
      const double verr = cache.value[b] - setups[t].targets[b];
      loss += verr * verr;
    }
  }
  return loss;
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

CheckResult check_gradients() {
  const auto start = Clock::now();
  CheckResult result{"gradients", true, 0.0, ""};
  const double h = 1e-5;
  double worst_ff = 0.0;
  double worst_rnn = 0.0;

  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(31000 + trial);

    // ---- Feed-forward ----
    {
      const int obs_dim = 5, n_heads = 3, n_actions = 3, hidden = 10, batch = 4;
      auto p = nn::FFPolicy::create(obs_dim, n_heads, n_actions, hidden,
                                    trial % 2 ? nn::Activation::Tanh : nn::Activation::Relu);
      p.init_params(rng);
      Eigen::MatrixXd obs(obs_dim, batch);
      for (int j = 0; j < obs_dim; ++j)
        for (int b = 0; b < batch; ++b) obs(j, b) = rng.normal();
      GradCheckSetup setup;
      setup.actions.assign(n_heads, std::vector<int>(batch));
      for (auto& head : setup.actions)
        for (int& a : head) a = static_cast<int>(rng.uniform_int(n_actions));
      for (int b = 0; b < batch; ++b) {
        setup.coef_logp.push_back(rng.normal());
        setup.targets.push_back(rng.normal());
      }

      // Analytic gradient.
      auto cache = nn::ff_forward(p, obs);
      auto eval = nn::evaluate_heads(cache.logits, setup.actions);
      Eigen::VectorXd coef_logp(batch), coef_ent(batch), dvalue(batch);
      for (int b = 0; b < batch; ++b) {
        coef_logp[b] = setup.coef_logp[b];
        coef_ent[b] = 0.01;
        dvalue[b] = 2.0 * (cache.value[b] - setup.targets[b]);
      }
      auto dlogits = nn::head_backward(eval, setup.actions, coef_logp, coef_ent);
      auto grads = p.zeros_like();
      nn::ff_backward(p, cache, dlogits, dvalue, grads);

      auto params = p.tensors();
      auto grad_tensors = grads.tensors();
      for (std::size_t t = 0; t < params.size(); ++t)
        for (std::size_t j = 0; j < params[t].tensor->size(); ++j) {
          double& x = params[t].tensor->data[j];
          const double saved = x;
          x = saved + h;
          const double up = ff_loss(p, obs, setup);
          x = saved - h;
          const double down = ff_loss(p, obs, setup);
          x = saved;
          const double fd = (up - down) / (2.0 * h);
          worst_ff = std::max(worst_ff, rel_err(fd, grad_tensors[t].tensor->data[j]));
        }
    }

    // ---- Recurrent, 8 steps with an episode reset inside the segment ----
    {
      const int obs_dim = 4, n_heads = 2, n_actions = 3, hidden = 8, batch = 2, steps = 8;
      auto p = nn::RNNPolicy::create(obs_dim, n_heads, n_actions, hidden,
                                     trial % 2 ? nn::Activation::Tanh : nn::Activation::Relu);
      p.init_params(rng);

      std::vector<Eigen::MatrixXd> obs_seq;
      std::vector<Eigen::VectorXd> carry_seq;
      std::vector<GradCheckSetup> setups;
      for (int t = 0; t < steps; ++t) {
        Eigen::MatrixXd obs(obs_dim, batch);
        for (int j = 0; j < obs_dim; ++j)
          for (int b = 0; b < batch; ++b) obs(j, b) = rng.normal();
        obs_seq.push_back(obs);
        Eigen::VectorXd carry = Eigen::VectorXd::Ones(batch);
        if (t == 0) carry.setZero();
        if (t == 4) carry[0] = 0.0;  // mid-segment episode boundary on lane 0
        carry_seq.push_back(carry);
        GradCheckSetup setup;
        setup.actions.assign(n_heads, std::vector<int>(batch));
        for (auto& head : setup.actions)
          for (int& a : head) a = static_cast<int>(rng.uniform_int(n_actions));
        for (int b = 0; b < batch; ++b) {
          setup.coef_logp.push_back(rng.normal());
          setup.targets.push_back(rng.normal());
        }
        setups.push_back(std::move(setup));
      }

      // Analytic gradient via recorded caches.
      Eigen::MatrixXd hmat = Eigen::MatrixXd::Zero(hidden, batch);
      std::vector<nn::RNNStepCache> caches;
      std::vector<std::vector<Eigen::MatrixXd>> dlogits(steps);
      std::vector<Eigen::VectorXd> dvalue(steps);
      for (int t = 0; t < steps; ++t) {
        for (int g = 0; g < batch; ++g)
          if (carry_seq[t][g] == 0.0 && t > 0) hmat.col(g).setZero();
        caches.push_back(nn::rnn_step(p, obs_seq[t], hmat, carry_seq[t]));
        hmat = caches.back().h;
        auto eval = nn::evaluate_heads(caches.back().logits, setups[t].actions);
        Eigen::VectorXd coef_logp(batch), coef_ent(batch), dv(batch);
        for (int b = 0; b < batch; ++b) {
          coef_logp[b] = setups[t].coef_logp[b];
          coef_ent[b] = 0.01;
          dv[b] = 2.0 * (caches.back().value[b] - setups[t].targets[b]);
        }
        dlogits[t] = nn::head_backward(eval, setups[t].actions, coef_logp, coef_ent);
        dvalue[t] = dv;
      }
      auto grads = p.zeros_like();
      nn::rnn_backward(p, caches, dlogits, dvalue, grads);

      auto params = p.tensors();
      auto grad_tensors = grads.tensors();
      for (std::size_t t = 0; t < params.size(); ++t)
        for (std::size_t j = 0; j < params[t].tensor->size(); ++j) {
          double& x = params[t].tensor->data[j];
          const double saved = x;
          x = saved + h;
          const double up = rnn_loss(p, obs_seq, carry_seq, setups);
          x = saved - h;
          const double down = rnn_loss(p, obs_seq, carry_seq, setups);
          x = saved;
          const double fd = (up - down) / (2.0 * h);
          worst_rnn = std::max(worst_rnn, rel_err(fd, grad_tensors[t].tensor->data[j]));
        }
    }
  }

  if (worst_ff > 1e-4 || worst_rnn > 1e-4) result.passed = false;
  result.detail = "ff max rel err " + fmt(worst_ff) + ", rnn " + fmt(worst_rnn);
  result.elapsed_s = seconds_since(start);
  return result;
}

CheckResult check_gae() {
  const auto start = Clock::now();
  CheckResult result{"gae", true, 0.0, ""};
  double worst = 0.0;

  // Hand-unrolled 3-step lane.
  {
    const std::vector<double> r = {1.0, 0.0, 1.0};
    const std::vector<double> v = {0.5, 0.5, 0.5};
    const std::vector<std::uint8_t> d = {0, 0, 0};
    const std::vector<double> boot = {0.0};
    const double gamma = 0.99, lambda = 0.95;
    const auto got = ppo::compute_gae(r, v, d, boot, 3, 1, gamma, lambda);

    // Independent unroll of the recursion, innermost term first.
    const double d2 = r[2] + gamma * boot[0] - v[2];
    const double a2 = d2;
    const double d1 = r[1] + gamma * v[2] - v[1];
    const double a1 = d1 + gamma * lambda * a2;
    const double d0 = r[0] + gamma * v[1] - v[0];
    const double a0 = d0 + gamma * lambda * a1;
    worst = std::max({worst, std::fabs(got.advantages[0] - a0),
                      std::fabs(got.advantages[1] - a1), std::fabs(got.advantages[2] - a2)});
    for (int i = 0; i < 3; ++i)
      worst = std::max(worst, std::fabs(got.returns[i] - (got.advantages[i] + v[i])));
  }

  // Degeneracies on random lanes.
  Rng rng(51000);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t steps = 5;
    std::vector<double> r(steps), v(steps);
    std::vector<std::uint8_t> d(steps, 0);
    for (std::size_t i = 0; i < steps; ++i) {
      r[i] = rng.normal();
      v[i] = rng.normal();
      d[i] = rng.uniform() < 0.3 ? 1 : 0;
    }
    const std::vector<double> boot = {rng.normal()};

    // lambda = 0: A_t = delta_t exactly.
    const auto lam0 = ppo::compute_gae(r, v, d, boot, steps, 1, 0.99, 0.0);
    for (std::size_t i = 0; i < steps; ++i) {
      const double next_v = i + 1 < steps ? v[i + 1] : boot[0];
      const double not_done = d[i] ? 0.0 : 1.0;
      const double delta = r[i] + 0.99 * next_v * not_done - v[i];
      worst = std::max(worst, std::fabs(lam0.advantages[i] - delta));
    }

    // gamma = 0: A_t = r_t - V_t.
    const auto gam0 = ppo::compute_gae(r, v, d, boot, steps, 1, 0.0, 0.95);
    for (std::size_t i = 0; i < steps; ++i)
      worst = std::max(worst, std::fabs(gam0.advantages[i] - (r[i] - v[i])));
  }

  if (worst > 1e-12) result.passed = false;
  result.detail = "max |err| " + fmt(worst);
  result.elapsed_s = seconds_since(start);
  return result;
}

CheckResult check_heuristic_sequences() {
  const auto start = Clock::now();
  CheckResult result{"heuristic_sequences", true, 0.0, ""};

  // Worked examples: agent 0 with k=3, phase 1; agent 2 with k=2, phase 0.
  {
    const env::HeuristicPolicy h0{0, 3, 1, 4};
    const int expected0[12] = {1, 1, 1, 2, 2, 2, 3, 3, 3, 0, 0, 0};
    for (int t = 0; t < 12; ++t)
      if (env::heuristic_action(h0, t) != expected0[t]) result.passed = false;

    const env::HeuristicPolicy h2{2, 2, 0, 4};
    const int expected2[10] = {2, 2, 3, 3, 0, 0, 1, 1, 2, 2};
    for (int t = 0; t < 10; ++t)
      if (env::heuristic_action(h2, t) != expected2[t]) result.passed = false;
  }

  // Closed form and periodicity k*A over [0, 10*k*A).
  for (const int a : {2, 4})
    for (const int k : {1, 2, 3, 5})
      for (int agent = 0; agent < 3; ++agent)
        for (int phase = 0; phase < k; ++phase) {
          const env::HeuristicPolicy h{agent, k, phase, a};
          for (int t = 0; t < 10 * k * a; ++t) {
            const int expected = ((agent % a) + t / k + phase) % a;
            if (env::heuristic_action(h, t) != expected) result.passed = false;
            if (env::heuristic_action(h, t + k * a) != env::heuristic_action(h, t))
              result.passed = false;
          }
        }

  result.detail = result.passed ? "sequences exact" : "sequence mismatch";
  result.elapsed_s = seconds_since(start);
  return result;
}

CheckResult check_bandit_ppo() {
  const auto start = Clock::now();
  CheckResult result{"bandit_ppo", true, 0.0, ""};

  // Two-armed bandit: reward 1 for arm 0, 0 for arm 1; one-step episodes.
  const int num_envs = 8, num_steps = 32;
  ppo::PPOConfig cfg;
  cfg.num_steps = num_steps;
  cfg.num_envs = num_envs;
  cfg.learning_rate = 1e-3;
  cfg.total_timesteps = 50000;

  for (int seed = 0; seed < 3; ++seed) {
    Rng sample_rng(derive_seed(42000 + seed, 1));
    Rng update_rng(derive_seed(42000 + seed, 2));
    Rng init_rng(derive_seed(42000 + seed, 3));
    auto ff = nn::FFPolicy::create(1, 1, 2, 64, nn::Activation::Relu);
    ff.init_params(init_rng);
    nn::Policy policy(std::move(ff));
    auto adam = nn::adam_init(nn::policy_tensors(policy), cfg.learning_rate);

    const long long per_update = static_cast<long long>(num_steps) * num_envs;
    const long long updates = cfg.total_timesteps / per_update;
    const Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(1, num_envs);

    for (long long u = 0; u < updates; ++u) {
      ppo::AgentRollout roll;
      const std::size_t total = static_cast<std::size_t>(num_steps) * num_envs;
      roll.obs.assign(total, 0.0);
      roll.actions.assign(total, 0);
      roll.logp.assign(total, 0.0);
      roll.value.assign(total, 0.0);
      roll.reward.assign(total, 0.0);
      roll.done.assign(total, 1);  // one-step episodes
      roll.bootstrap.assign(num_envs, 0.0);

      auto& p = std::get<nn::FFPolicy>(policy);
      for (int s = 0; s < num_steps; ++s) {
        auto cache = nn::ff_forward(p, obs);
        for (int lane = 0; lane < num_envs; ++lane) {
          const auto sample = nn::sample_heads(cache.logits, lane, sample_rng);
          const std::size_t idx = static_cast<std::size_t>(s) * num_envs + lane;
          roll.actions[idx] = sample.action[0];
          roll.logp[idx] = sample.log_prob;
          roll.value[idx] = cache.value[lane];
          roll.reward[idx] = sample.action[0] == 0 ? 1.0 : 0.0;
        }
      }
      const auto gae = ppo::compute_gae(roll.reward, roll.value, roll.done, roll.bootstrap,
                                        num_steps, num_envs, cfg.gamma, cfg.gae_lambda);
      ppo::ppo_update(policy, adam, roll, gae, cfg, cfg.learning_rate, update_rng, num_steps,
                      num_envs);
    }

    auto cache = nn::ff_forward(std::get<nn::FFPolicy>(policy), Eigen::MatrixXd::Zero(1, 1));
    const Eigen::VectorXd logits = cache.logits[0].col(0);
    const double m = logits.maxCoeff();
    Eigen::VectorXd probs = (logits.array() - m).exp();
    probs /= probs.sum();
    result.detail += "seed" + std::to_string(seed) + " p0=" + fmt(probs[0]) + " ";
    if (probs[0] < 0.95) result.passed = false;
  }

  result.elapsed_s = seconds_since(start);
  return result;
}

CheckResult check_determinism() {
  const auto start = Clock::now();
  CheckResult result{"determinism", true, 0.0, ""};

  auto run_once = [&]() {
    env::EnvConfig env_cfg;
    ppo::PPOConfig cfg;
    cfg.total_timesteps = 50000;
    ppo::IppoTrainer trainer(env_cfg, {}, cfg, ppo::Arch::FF, 1234);
    std::ostringstream metrics;
    ppo::write_metrics_header(metrics, trainer.num_learners());
    trainer.train(
        [&metrics](const ppo::MetricsRow& row) { ppo::write_metrics_row(metrics, row); });
    return metrics.str();
  };

  const std::string first = run_once();
  const std::string second = run_once();
  if (first != second || first.empty()) {
    result.passed = false;
    result.detail = "metrics differ across identical runs";
  } else {
    result.detail = std::to_string(first.size()) + " identical metric bytes";
  }
  result.elapsed_s = seconds_since(start);
  return result;
}

std::vector<CheckResult> run_all(std::ostream* progress) {
  std::vector<CheckResult> results;
  const std::vector<std::function<CheckResult()>> checks = {
      []() { return check_digamma(); },   check_mi_plugin,
      check_mi_ksg,                       check_mi_ross,
      check_gradients,                    check_gae,
      check_heuristic_sequences,          check_bandit_ppo,
  };
  for (const auto& check : checks) {
    CheckResult r = check();
    if (progress)
      (*progress) << (r.passed ? "PASS" : "FAIL") << "  " << r.name << "  (" << fmt(r.elapsed_s)
                  << " s)  " << r.detail << "\n";
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace predgame::selftest
