#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace predgame::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  double elapsed_s = 0.0;
  std::string detail;  // worst-case error, counterexample, etc.
};

// Each check pairs production code against an independent oracle computed
// in this module (series expansions, closed forms, finite differences,
// hand-unrolled recursions, scripted simulations).
CheckResult check_digamma(const std::function<double(double)>& fn = {});
CheckResult check_mi_plugin();
CheckResult check_mi_ksg();
CheckResult check_mi_ross();
CheckResult check_gradients();
CheckResult check_gae();
CheckResult check_heuristic_sequences();
CheckResult check_bandit_ppo();

// Byte-identical metrics across two same-seed runs of a small scenario.
CheckResult check_determinism();

// The fast oracle suite behind `predgame selftest`; prints one pass/fail
// line per check to `progress` when provided.
std::vector<CheckResult> run_all(std::ostream* progress = nullptr);

// Reference digamma used by check_digamma: 200-term Euler series plus a
// short asymptotic tail. Exposed for tests.
double digamma_series_oracle(double x);

}  // namespace predgame::selftest
