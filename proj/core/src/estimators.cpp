#include "predgame/mi/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "predgame/errors.hpp"
#include "predgame/mi/digamma.hpp"
#include "predgame/rng.hpp"

namespace predgame::mi {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321214581766;

void require_n(const SampleSet& s) {
  if (s.n < 2) throw InsufficientDataError("mi: need at least 2 samples, got " +
                                           std::to_string(s.n));
}

}  // namespace

SampleSet SampleSet::discrete_discrete(std::vector<std::int64_t> x, std::vector<std::int64_t> y) {
  if (x.size() != y.size()) throw ValidationError("SampleSet: |x| != |y|");
  SampleSet s;
  s.kind = SampleKind::DiscreteDiscrete;
  s.n = x.size();
  s.x_discrete = std::move(x);
  s.y_discrete = std::move(y);
  return s;
}

SampleSet SampleSet::continuous_discrete(PointMatrix x, std::vector<std::int64_t> y) {
  if (x.n != y.size()) throw ValidationError("SampleSet: |x| != |y|");
  SampleSet s;
  s.kind = SampleKind::ContinuousDiscrete;
  s.n = y.size();
  s.x_continuous = std::move(x);
  s.y_discrete = std::move(y);
  return s;
}

SampleSet SampleSet::continuous_continuous(PointMatrix x, PointMatrix y) {
  if (x.n != y.n) throw ValidationError("SampleSet: |x| != |y|");
  SampleSet s;
  s.kind = SampleKind::ContinuousContinuous;
  s.n = x.n;
  s.x_continuous = std::move(x);
  s.y_continuous = std::move(y);
  return s;
}

double MIEstimate::in_nats() const { return units == MIUnits::Nats ? value : value * kLn2; }
double MIEstimate::in_bits() const { return units == MIUnits::Bits ? value : value / kLn2; }

MIEstimate MIEstimate::converted(MIUnits target) const {
  MIEstimate out = *this;
  out.units = target;
  out.value = target == MIUnits::Nats ? in_nats() : in_bits();
  return out;
}

MIEstimate mi_plugin(const SampleSet& samples) {
  if (samples.kind != SampleKind::DiscreteDiscrete)
    throw ValidationError("mi_plugin requires discrete-discrete samples");
  require_n(samples);
  const double n = static_cast<double>(samples.n);

  std::map<std::int64_t, double> x_counts;
  std::map<std::int64_t, double> y_counts;
  std::map<std::pair<std::int64_t, std::int64_t>, double> joint;
  for (std::size_t i = 0; i < samples.n; ++i) {
    x_counts[samples.x_discrete[i]] += 1.0;
    y_counts[samples.y_discrete[i]] += 1.0;
    joint[{samples.x_discrete[i], samples.y_discrete[i]}] += 1.0;
  }

  // Summing the sorted term multiset makes the result exactly symmetric in
  // (X, Y): swapping arguments permutes the terms but not their values.
  std::vector<double> terms;
  terms.reserve(joint.size());
  for (const auto& [xy, count] : joint) {
    const double ratio = (count * n) / (x_counts[xy.first] * y_counts[xy.second]);
    terms.push_back((count / n) * std::log(ratio));
  }
  std::sort(terms.begin(), terms.end());
  double value = std::accumulate(terms.begin(), terms.end(), 0.0);
  if (value < 0.0 && value > -1e-12) value = 0.0;

  MIEstimate e;
  e.value = value;
  e.units = MIUnits::Nats;
  e.estimator = MIEstimator::PlugIn;
  e.k = 0;
  e.n = samples.n;
  return e;
}

double entropy_discrete(const std::vector<std::int64_t>& symbols) {
  std::map<std::int64_t, double> counts;
  for (std::int64_t s : symbols) counts[s] += 1.0;
  const double n = static_cast<double>(symbols.size());
  double h = 0.0;
  for (const auto& [s, c] : counts) h -= (c / n) * std::log(c / n);
  return h;
}

MIEstimate mi_ksg(const SampleSet& samples, int k, std::uint64_t jitter_seed) {
  if (samples.kind != SampleKind::ContinuousContinuous)
    throw ValidationError("mi_ksg requires continuous-continuous samples");
  require_n(samples);
  const std::size_t n = samples.n;
  if (k < 1 || static_cast<std::size_t>(k) > n - 1)
    throw ValidationError("mi_ksg: k must be in [1, n-1]");

  PointMatrix x = samples.x_continuous;
  PointMatrix y = samples.y_continuous;
  apply_jitter(x, splitmix64(jitter_seed ^ 0x11d3a5u));
  apply_jitter(y, splitmix64(jitter_seed ^ 0x22e4b6u));

  PointMatrix joint;
  joint.n = n;
  joint.d = x.d + y.d;
  joint.data.resize(n * joint.d);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(x.point(i), x.point(i) + x.d, joint.point(i));
    std::copy(y.point(i), y.point(i) + y.d, joint.point(i) + x.d);
  }

  const std::vector<double> eps = knn_distances(joint, k);
  if (*std::max_element(eps.begin(), eps.end()) == 0.0)
    throw NumericalError("mi_ksg: degenerate sample set (identical points)");

  const bool tree_x = n > 2000 && x.d <= 16;
  const bool tree_y = n > 2000 && y.d <= 16;
  KdTree xt = tree_x ? KdTree(x) : KdTree(x, {});
  KdTree yt = tree_y ? KdTree(y) : KdTree(y, {});
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t nx = tree_x ? xt.count_within(x.point(i), eps[i], true, i)
                                  : count_within_brute(x, all, x.point(i), eps[i], true, i);
    const std::size_t ny = tree_y ? yt.count_within(y.point(i), eps[i], true, i)
                                  : count_within_brute(y, all, y.point(i), eps[i], true, i);
    acc += digamma(static_cast<double>(nx + 1)) + digamma(static_cast<double>(ny + 1));
  }

  MIEstimate e;
  e.value = digamma(k) + digamma(static_cast<double>(n)) - acc / static_cast<double>(n);
  e.units = MIUnits::Nats;
  e.estimator = MIEstimator::KSG;
  e.k = k;
  e.n = n;
  return e;
}

MIEstimate mi_ross(const SampleSet& samples, int k, std::uint64_t jitter_seed) {
  if (samples.kind != SampleKind::ContinuousDiscrete)
    throw ValidationError("mi_ross requires continuous-discrete samples");
  require_n(samples);
  const std::size_t n = samples.n;
  if (k < 1) throw ValidationError("mi_ross: k must be >= 1");

  std::map<std::int64_t, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < n; ++i) classes[samples.y_discrete[i]].push_back(i);
  if (classes.size() < 2)
    throw InsufficientDataError("mi_ross: need at least 2 classes, got " +
                                std::to_string(classes.size()));
  for (const auto& [label, members] : classes)
    if (members.size() <= static_cast<std::size_t>(k))
      throw InsufficientDataError("mi_ross: class " + std::to_string(label) + " has " +
                                  std::to_string(members.size()) +
                                  " members, need more than k = " + std::to_string(k));

  PointMatrix x = samples.x_continuous;
  apply_jitter(x, splitmix64(jitter_seed ^ 0x33f5c7u));

  // k-th same-class neighbour distance per point.
  std::vector<double> radius(n, 0.0);
  for (const auto& [label, members] : classes) {
    const bool tree = members.size() > 2000 && x.d <= 16;
    if (tree) {
      KdTree class_tree(x, members);
      for (std::size_t i : members) radius[i] = class_tree.knn_distance(i, k);
    } else {
      for (std::size_t i : members) radius[i] = knn_distance_brute(x, members, i, k);
    }
  }

  const bool tree_all = n > 2000 && x.d <= 16;
  KdTree all_tree = tree_all ? KdTree(x) : KdTree(x, {});
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // All-sample neighbours within the k-th same-class distance (inclusive,
    // so the k-th neighbour itself counts), excluding the point.
    const std::size_t m = tree_all ? all_tree.count_within(x.point(i), radius[i], false, i)
                                   : count_within_brute(x, all, x.point(i), radius[i], false, i);
    const double n_class =
        static_cast<double>(classes.at(samples.y_discrete[i]).size());
    acc += digamma(n_class) + digamma(static_cast<double>(m));
  }

  MIEstimate e;
  e.value = digamma(static_cast<double>(n)) + digamma(k) - acc / static_cast<double>(n);
  e.units = MIUnits::Nats;
  e.estimator = MIEstimator::Ross;
  e.k = k;
  e.n = n;
  return e;
}

MIEstimate mi_report_mean(const std::vector<MIEstimate>& per_agent) {
  if (per_agent.empty()) throw ValidationError("mi_report_mean: no estimates");
  MIEstimate out = per_agent.front();
  double sum = 0.0;
  for (const auto& e : per_agent) {
    if (e.units != out.units) throw ValidationError("mi_report_mean: mixed units");
    sum += e.value;
  }
  out.value = sum / static_cast<double>(per_agent.size());
  return out;
}

}  // namespace predgame::mi
