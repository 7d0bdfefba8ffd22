#pragma once

// Data-generating process for the coverage simulations: study-size designs,
// conversion of a target I^2 into an absolute tau, and 2x2 table draws.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fewmeta/tables.hpp"

namespace fewmeta {

enum class Design { Equal, OneSmall, OneLarge };

struct ScenarioSpec {
  Measure measure = Measure::LogOddsRatio;
  Design design = Design::Equal;
  std::int64_t n_per_arm = 100;
  int k = 2;
  double p0 = 0.5;
  double i_squared = 0.0;
  double level = 0.95;
  int reps = 2000;
  std::uint64_t seed = 1;
};

struct GeneratedMeta {
  std::vector<TwoByTwoTable> tables;
  double true_mu = 0.0;
  double tau_used = 0.0;
  std::vector<double> per_study_theta;
  int clamped = 0;  // treatment probabilities pushed back into [1e-8, 1-1e-8]
};

inline constexpr double kProbabilityClamp = 1e-8;

/// Per-arm sizes; the odd-sized study (if any) is last.
std::vector<std::int64_t> study_sizes(Design design, std::int64_t n, int k);

/// Expected within-study variance of the log effect under no effect (p1 == p0).
double expected_within_variance(Measure measure, double n, double p0);

/// tau = sqrt(i2 / (1 - i2) * mean(variances)).
double tau_from_i2(double i2, std::span<const double> variances);

/// tau implied by the scenario's I^2, design and baseline risk.
double scenario_tau(const ScenarioSpec& spec);

/// Throws DomainError on an invalid specification.
void validate_scenario(const ScenarioSpec& spec);

/// Seed of replicate `index`'s private random stream.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index);

/// Draws one meta-analysis. Deterministic in (spec, replicate_index).
GeneratedMeta generate_meta(const ScenarioSpec& spec, std::uint64_t replicate_index);

std::string to_string(Design d);

}  // namespace fewmeta
