#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "predgame/errors.hpp"
#include "predgame/mi/collect.hpp"
#include "predgame/mi/estimators.hpp"

using namespace predgame;
using namespace predgame::mi;

namespace {

PointMatrix column(const std::vector<double>& values) {
  PointMatrix m;
  m.n = values.size();
  m.d = 1;
  m.data = values;
  return m;
}

SampleSet from_table(const std::vector<std::vector<int>>& table) {
  std::vector<std::int64_t> x, y;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table[i].size(); ++j)
      for (int c = 0; c < table[i][j]; ++c) {
        x.push_back(static_cast<std::int64_t>(i));
        y.push_back(static_cast<std::int64_t>(j));
      }
  return SampleSet::discrete_discrete(std::move(x), std::move(y));
}

}  // namespace

TEST_CASE("mi_plugin basics") {
  SUBCASE("independent product counts give exactly zero") {
    CHECK(mi_plugin(from_table({{2, 4}, {3, 6}})).value == 0.0);
  }
  SUBCASE("identity map over uniform 4 symbols gives ln 4 = 2 bits") {
    std::vector<std::int64_t> x = {0, 1, 2, 3, 0, 1, 2, 3};
    const auto est = mi_plugin(SampleSet::discrete_discrete(x, x));
    CHECK(est.value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(est.in_bits() == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("2x2 table [[2,1],[1,2]] matches the direct-summation oracle") {
    const std::vector<std::vector<int>> table = {{2, 1}, {1, 2}};
    const double n = 6.0;
    double oracle = 0.0;
    const double row[2] = {3, 3}, col[2] = {3, 3};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double c = table[i][j];
        oracle += (c / n) * std::log((c * n) / (row[i] * col[j]));
      }
    CHECK(mi_plugin(from_table(table)).value == doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("insufficient data") {
    CHECK_THROWS_AS(mi_plugin(SampleSet::discrete_discrete({1}, {2})), InsufficientDataError);
  }
}

TEST_CASE("mi_plugin properties: symmetry, entropy bound, deterministic map") {
  Rng rng(3001);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 40 + rng.uniform_int(200);
    std::vector<std::int64_t> x(n), y(n);
    const int kx = 2 + static_cast<int>(rng.uniform_int(5));
    const int ky = 2 + static_cast<int>(rng.uniform_int(5));
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<std::int64_t>(rng.uniform_int(kx));
      y[i] = static_cast<std::int64_t>(rng.uniform_int(ky));
    }
    const auto xy = mi_plugin(SampleSet::discrete_discrete(x, y));
    const auto yx = mi_plugin(SampleSet::discrete_discrete(y, x));
    CHECK(xy.value == yx.value);  // exact
    CHECK(xy.value >= 0.0);
    CHECK(xy.value <= std::min(entropy_discrete(x), entropy_discrete(y)) + 1e-12);

    // I(X, f(X)) = H(f(X)).
    std::vector<std::int64_t> fx(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = x[i] % 2;
    const auto det = mi_plugin(SampleSet::discrete_discrete(x, fx));
    CHECK(det.value == doctest::Approx(entropy_discrete(fx)).epsilon(1e-12));
  }
}

TEST_CASE("units conversion: bits = nats / ln 2") {
  MIEstimate e;
  e.value = 1.0;
  e.units = MIUnits::Nats;
  CHECK(e.in_bits() == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-15));
  const auto b = e.converted(MIUnits::Bits);
  CHECK(b.in_nats() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mi_ksg: deterministic dependence grows with n") {
  // Y = X with tie-breaking jitter only: no finite target, but the estimate
  // must increase monotonically with sample size.
  double previous = -1e300;
  for (const std::size_t n : {200, 800, 3200}) {
    Rng rng(3100);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    const auto est = mi_ksg(SampleSet::continuous_continuous(column(x), column(x)), 3, 3200);
    CHECK(est.value > previous);
    previous = est.value;
  }
}

TEST_CASE("mi_ksg input validation") {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const auto s = SampleSet::continuous_continuous(column(x), column(x));
  CHECK_THROWS_AS(mi_ksg(s, 0), ValidationError);
  CHECK_THROWS_AS(mi_ksg(s, 4), ValidationError);
  std::vector<double> constant(50, 2.5);
  CHECK_THROWS_AS(
      mi_ksg(SampleSet::continuous_continuous(column(constant), column(constant)), 3),
      NumericalError);
}

TEST_CASE("mi_ross: errors name the offending class") {
  std::vector<double> x = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<std::int64_t> y = {0, 0, 0, 0, 0, 7};
  try {
    mi_ross(SampleSet::continuous_discrete(column(x), y), 3);
    FAIL("expected InsufficientDataError");
  } catch (const InsufficientDataError& e) {
    CHECK(std::string(e.what()).find("class 7") != std::string::npos);
  }
}

TEST_CASE("mi_ross: duplicated dataset stays within 0.05 nats of the original") {
  Rng rng(3200);
  const std::size_t n = 1500;
  std::vector<double> x(n);
  std::vector<std::int64_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::int64_t>(rng.uniform_int(2));
    x[i] = (y[i] == 0 ? -1.0 : 1.0) + rng.normal();
  }
  const auto base = mi_ross(SampleSet::continuous_discrete(column(x), y), 3, 1);

  std::vector<double> x2 = x;
  x2.insert(x2.end(), x.begin(), x.end());
  std::vector<std::int64_t> y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  const auto doubled = mi_ross(SampleSet::continuous_discrete(column(x2), y2), 3, 2);
  CHECK(std::fabs(doubled.value - base.value) <= 0.05);
}

TEST_CASE("filter_small_classes removes rare labels and reports the count") {
  std::vector<double> x = {0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<std::int64_t> y = {0, 0, 0, 0, 0, 1, 1, 2};
  std::size_t dropped = 0;
  const auto filtered = filter_small_classes(SampleSet::continuous_discrete(column(x), y), 2,
                                             &dropped);
  CHECK(dropped == 3);  // class 1 (2 members) and class 2 (1 member)
  CHECK(filtered.n == 5);
  for (auto label : filtered.y_discrete) CHECK(label == 0);
}

TEST_CASE("mi_report_mean averages and rejects mixed units") {
  MIEstimate a, b;
  a.value = 2.0;
  b.value = 6.0;
  a.units = b.units = MIUnits::Bits;
  CHECK(mi_report_mean({a, b}).value == doctest::Approx(4.0));
  CHECK(mi_report_mean({a}).value == doctest::Approx(2.0));
  b.units = MIUnits::Nats;
  CHECK_THROWS_AS(mi_report_mean({a, b}), ValidationError);
  CHECK_THROWS_AS(mi_report_mean({}), ValidationError);
}

TEST_CASE("collect_mi_samples: counting, blind zero-MI, constant-policy zero-MI") {
  env::EnvConfig cfg;
  cfg.episode_len = 10;

  // Scripted stand-in policies: FF with zero parameters emit uniform logits,
  // which is enough for the counting contract.
  std::vector<nn::Policy> policies;
  for (int i = 0; i < 4; ++i)
    policies.emplace_back(nn::FFPolicy::create(cfg.obs_dim(), 4, 4, 8, nn::Activation::Relu));

  SUBCASE("50 episodes, T = 10 -> 500 samples per agent") {
    const auto sets = collect_mi_samples(policies, cfg, {}, 50, Pairing::ObsAction, 777);
    REQUIRE(sets.size() == 4);
    for (const auto& s : sets) CHECK(s.n == 500);
  }

  SUBCASE("blind env: plug-in I(O;A) is exactly zero (constant observation)") {
    cfg.observation_mode = env::ObservationMode::Blind;
    const auto sets = collect_mi_samples(policies, cfg, {}, 30, Pairing::ObsAction, 778);
    for (const auto& s : sets) CHECK(mi_plugin(s).value == 0.0);
  }

  SUBCASE("hidden pairing on FF policies is unsupported") {
    CHECK_THROWS_AS(collect_mi_samples(policies, cfg, {}, 5, Pairing::HiddenAction, 779),
                    UnsupportedPairingError);
  }

  SUBCASE("constant-action convention: I(O;A) ~ 0 on collected samples") {
    // Saturate head logits so each agent deterministically plays one symbol.
    std::vector<nn::Policy> constant_policies;
    for (int i = 0; i < 4; ++i) {
      auto p = nn::FFPolicy::create(cfg.obs_dim(), 4, 4, 8, nn::Activation::Relu);
      for (int h = 0; h < 4; ++h) p.actor_heads[h].b.data[i % 4] = 50.0;
      constant_policies.emplace_back(std::move(p));
    }
    const auto sets = collect_mi_samples(constant_policies, cfg, {}, 100, Pairing::ObsAction, 780);
    for (const auto& s : sets) CHECK(mi_plugin(s).in_bits() <= 0.05);
  }
}

TEST_CASE("hidden-action samples flow through the Ross path") {
  env::EnvConfig cfg;
  std::vector<nn::Policy> policies;
  Rng rng(3300);
  for (int i = 0; i < 4; ++i) {
    auto p = nn::RNNPolicy::create(cfg.obs_dim(), 4, 4, 16, nn::Activation::Relu);
    p.init_params(rng);
    policies.emplace_back(std::move(p));
  }
  const auto sets = collect_mi_samples(policies, cfg, {}, 60, Pairing::HiddenAction, 781);
  REQUIRE(sets.size() == 4);
  for (const auto& s : sets) {
    CHECK(s.kind == SampleKind::ContinuousDiscrete);
    CHECK(s.n == 600);
    CHECK(s.x_continuous.d == 16);
    std::size_t dropped = 0;
    const auto filtered = filter_small_classes(s, 3, &dropped);
    if (filtered.n > 10) {
      const auto est = mi_ross(filtered, 3, 782);
      CHECK(std::isfinite(est.value));
    }
  }
}

TEST_CASE("trajectory CSV round-trips through the reader") {
  env::EnvConfig cfg;
  std::vector<nn::Policy> policies;
  Rng rng(3400);
  for (int i = 0; i < 4; ++i) {
    auto p = nn::RNNPolicy::create(cfg.obs_dim(), 4, 4, 8, nn::Activation::Relu);
    p.init_params(rng);
    policies.emplace_back(std::move(p));
  }
  const auto trace = eval::run_episodes(policies, cfg, {}, 6, 783, true, true);
  const std::string path = std::filesystem::temp_directory_path() / "predgame_traj_test.csv";
  write_trajectory_csv(path, trace);
  const auto data = read_trajectory_csv(path);
  REQUIRE(data.agents.size() == 4);
  CHECK(data.obs_dim == 8);
  CHECK(data.n_action_components == 4);
  CHECK(data.hidden_dim == 8);
  for (std::size_t slot = 0; slot < 4; ++slot) {
    REQUIRE(data.agents[slot].steps.size() == trace.agents[slot].steps.size());
    for (std::size_t i = 0; i < data.agents[slot].steps.size(); ++i) {
      CHECK(data.agents[slot].steps[i].action == trace.agents[slot].steps[i].action);
      CHECK(data.agents[slot].steps[i].obs == trace.agents[slot].steps[i].obs);
      CHECK(data.agents[slot].steps[i].hidden == trace.agents[slot].steps[i].hidden);
    }
  }
  std::filesystem::remove(path);
}
