#include "fewmeta/simgen.hpp"

#include <algorithm>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>

#include "fewmeta/errors.hpp"

namespace fewmeta {

std::vector<std::int64_t> study_sizes(Design design, std::int64_t n, int k) {
  if (k < 2) throw DomainError("study_sizes: k must be >= 2");
  if (n < 1) throw DomainError("study_sizes: n must be positive");
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), n);
  switch (design) {
    case Design::Equal:
      break;
    case Design::OneSmall:
      if (n % 10 != 0) throw DomainError("study_sizes: n must be divisible by 10 for ONE_SMALL");
      sizes.back() = n / 10;
      break;
    case Design::OneLarge:
      sizes.back() = 10 * n;
      break;
  }
  return sizes;
}

double expected_within_variance(Measure measure, double n, double p0) {
  if (!(n >= 1.0)) throw DomainError("expected_within_variance: n must be >= 1");
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("expected_within_variance: p0 must lie in (0,1)");
  if (measure == Measure::LogOddsRatio) return 2.0 * (1.0 / (n * p0) + 1.0 / (n * (1.0 - p0)));
  return 2.0 * (1.0 - p0) / (n * p0);
}

double tau_from_i2(double i2, std::span<const double> variances) {
  if (!(i2 >= 0.0 && i2 < 1.0)) throw DomainError("tau_from_i2: i2 must lie in [0,1)");
  if (variances.empty()) throw DomainError("tau_from_i2: no variances");
  double mean = 0.0;
  for (double v : variances) {
    if (!(v > 0.0)) throw DomainError("tau_from_i2: variances must be positive");
    mean += v;
  }
  mean /= static_cast<double>(variances.size());
  return std::sqrt(i2 / (1.0 - i2) * mean);
}

void validate_scenario(const ScenarioSpec& spec) {
  if (spec.k < 2) throw DomainError("scenario: k must be >= 2");
  if (spec.n_per_arm < 1) throw DomainError("scenario: n must be positive");
  if (!(spec.p0 > 0.0 && spec.p0 < 1.0)) throw DomainError("scenario: p0 must lie in (0,1)");
  if (!(spec.i_squared >= 0.0 && spec.i_squared < 1.0)) {
    throw DomainError("scenario: I^2 must lie in [0,1)");
  }
  if (!(spec.level > 0.0 && spec.level < 1.0)) throw DomainError("scenario: level must lie in (0,1)");
  if (spec.reps < 1) throw DomainError("scenario: reps must be positive");
  if (spec.design == Design::OneSmall && spec.n_per_arm % 10 != 0) {
    throw DomainError("scenario: n must be divisible by 10 for ONE_SMALL");
  }
}

double scenario_tau(const ScenarioSpec& spec) {
  const auto sizes = study_sizes(spec.design, spec.n_per_arm, spec.k);
  std::vector<double> vars;
  vars.reserve(sizes.size());
  for (auto n : sizes) vars.push_back(expected_within_variance(spec.measure, static_cast<double>(n), spec.p0));
  return tau_from_i2(spec.i_squared, vars);
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a counter derived from (seed, index)
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

GeneratedMeta generate_meta(const ScenarioSpec& spec, std::uint64_t replicate_index) {
  validate_scenario(spec);
  const auto sizes = study_sizes(spec.design, spec.n_per_arm, spec.k);
  GeneratedMeta out;
  out.tau_used = scenario_tau(spec);
  out.tables.reserve(sizes.size());
  out.per_study_theta.reserve(sizes.size());

  boost::random::mt19937_64 rng(replicate_seed(spec.seed, replicate_index));
  boost::random::normal_distribution<double> effect(0.0, 1.0);

  const double odds0 = spec.p0 / (1.0 - spec.p0);
  for (auto n : sizes) {
    const double theta = out.tau_used * effect(rng);
    double p1 = spec.measure == Measure::LogRiskRatio
                    ? spec.p0 * std::exp(theta)
                    : 1.0 / (1.0 + 1.0 / (odds0 * std::exp(theta)));
    const double clamped = std::clamp(p1, kProbabilityClamp, 1.0 - kProbabilityClamp);
    if (clamped != p1) ++out.clamped;
    p1 = clamped;
    boost::random::binomial_distribution<std::int64_t, double> ctl(n, spec.p0);
    boost::random::binomial_distribution<std::int64_t, double> trt(n, p1);
    const std::int64_t events_ctl = ctl(rng);
    const std::int64_t events_trt = trt(rng);
    out.tables.push_back({events_trt, n, events_ctl, n});
    out.per_study_theta.push_back(theta);
  }
  return out;
}

std::string to_string(Design d) {
  switch (d) {
    case Design::Equal: return "EQUAL";
    case Design::OneSmall: return "ONE_SMALL";
    case Design::OneLarge: return "ONE_LARGE";
  }
  return "?";
}

}  // namespace fewmeta
