#pragma once

#include <cstdint>
#include <vector>

#include "predgame/mi/knn.hpp"

namespace predgame::mi {

enum class SampleKind { DiscreteDiscrete, ContinuousDiscrete, ContinuousContinuous };

// Paired samples for mutual-information estimation. Discrete variables are
// symbol streams (actions are flattened multi-discrete indices in [0, A^N));
// continuous variables are row-major [n, d] matrices.
struct SampleSet {
  SampleKind kind = SampleKind::DiscreteDiscrete;
  std::size_t n = 0;

  std::vector<std::int64_t> x_discrete;
  PointMatrix x_continuous;

  std::vector<std::int64_t> y_discrete;
  PointMatrix y_continuous;

  static SampleSet discrete_discrete(std::vector<std::int64_t> x, std::vector<std::int64_t> y);
  static SampleSet continuous_discrete(PointMatrix x, std::vector<std::int64_t> y);
  static SampleSet continuous_continuous(PointMatrix x, PointMatrix y);
};

enum class MIUnits { Nats, Bits };
enum class MIEstimator { PlugIn, KSG, Ross };

struct MIEstimate {
  double value = 0.0;
  MIUnits units = MIUnits::Nats;
  MIEstimator estimator = MIEstimator::PlugIn;
  int k = 0;  // neighbour count, 0 for plug-in
  std::size_t n = 0;

  double in_nats() const;
  double in_bits() const;
  MIEstimate converted(MIUnits target) const;
};

// Empirical plug-in MI over the joint frequency table of two discrete
// variables, in nats. Exactly symmetric in its arguments; clamped at zero
// only against -1e-12 float noise.
MIEstimate mi_plugin(const SampleSet& samples);

// Empirical entropy of a discrete stream, in nats (used by tests and the
// plug-in bound checks).
double entropy_discrete(const std::vector<std::int64_t>& symbols);

// Kraskov variant-1 estimator for continuous-continuous pairs, in nats.
// A deterministic seeded jitter (1e-10 of the per-dimension range) is
// applied to break ties before the max-norm neighbour searches. The raw
// estimate is reported (possibly slightly negative).
MIEstimate mi_ksg(const SampleSet& samples, int k, std::uint64_t jitter_seed = 0);

// Ross estimator for a continuous variable against discrete labels, in nats.
// Every class must have more than k members.
MIEstimate mi_ross(const SampleSet& samples, int k, std::uint64_t jitter_seed = 0);

// Arithmetic mean across per-agent estimates; units/estimator must agree.
MIEstimate mi_report_mean(const std::vector<MIEstimate>& per_agent);

}  // namespace predgame::mi
