#pragma once

// Monte-Carlo harness: runs analysis methods over simulated replicates and
// summarizes coverage of the true effect (log scale, 0), interval length
// and non-convergence.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fewmeta/simgen.hpp"
#include "fewmeta/tables.hpp"

namespace fewmeta {

/// Result of one method on one meta-analysis, on the log scale.
struct MethodOutcome {
  bool converged = false;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double tau = 0.0;  // heterogeneity estimate (posterior median for Bayes)
  std::string error;

  double length() const noexcept { return upper - lower; }
};

using MethodFn =
    std::function<MethodOutcome(std::span<const TwoByTwoTable>, Measure, double level)>;

struct Method {
  std::string name;           // e.g. "NN-DL"
  std::string interval_kind;  // e.g. "HKSJ"
  bool supports_or = true;
  bool supports_rr = true;
  MethodFn run;

  std::string id() const;  // "NN-DL/HKSJ"; Bayes methods have no suffix
  bool supports(Measure m) const noexcept {
    return m == Measure::LogOddsRatio ? supports_or : supports_rr;
  }
};

/// Builds a method from its identifier, e.g. "NN-REML/MHKSJ", "BAYES-HN05",
/// "CM.EL/T", "PN-PL/NORMAL". Throws DomainError on unknown ids.
Method make_method(const std::string& id);

/// Every identifier accepted by make_method.
std::vector<std::string> all_method_ids();

/// Runs `method` and converts any library error into a non-converged outcome.
MethodOutcome run_method(const Method& method, std::span<const TwoByTwoTable> tables,
                         Measure measure, double level);

struct ReplicateRecord {
  bool converged = false;
  double lower = 0.0;
  double upper = 0.0;
};

/// Fraction of converged records with lower <= true_mu <= upper. DomainError
/// when no record converged.
double coverage(std::span<const ReplicateRecord> records, double true_mu = 0.0);

struct MethodSummary {
  std::string name;
  std::string interval_kind;
  double coverage = 0.0;
  double mean_length = 0.0;
  double median_length = 0.0;
  double nonconvergence_rate = 0.0;
  int effective_reps = 0;
  int nonconverged = 0;
  int infinite_lengths = 0;
};

struct ScenarioResult {
  ScenarioSpec spec;
  double tau = 0.0;
  int clamped = 0;
  std::vector<MethodSummary> methods;  // in input order, inapplicable methods skipped
};

/// Runs every replicate of `spec` through every applicable method. Replicates
/// are distributed over `workers` threads; the result does not depend on the
/// worker count.
ScenarioResult run_scenario(const ScenarioSpec& spec, std::span<const Method> methods,
                            int workers = 1);

}  // namespace fewmeta
