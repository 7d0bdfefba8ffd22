#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fewmeta/harness.hpp"
#include "fewmeta/simgen.hpp"
#include "fewmeta/tables.hpp"

namespace fewmeta::cli {

// ---- analyze ---------------------------------------------------------------

struct AnalysisRow {
  std::string meta_id;
  Measure measure = Measure::LogOddsRatio;
  std::string method;
  std::string interval_kind;
  std::size_t k = 0;
  MethodOutcome outcome;
  std::optional<double> ratio_vs_nn_dl;  // exp(estimate - NN-DL estimate)
};

/// Runs every method on every dataset. Method failures become rows with
/// converged == false; nothing here throws for statistical reasons.
std::vector<AnalysisRow> analyze(std::span<const MetaDataset> datasets, Measure measure,
                                 std::span<const std::string> method_ids, double level);

inline constexpr const char* kAnalysisHeader =
    "meta_id,measure,method,interval_kind,k,estimate_log,estimate_ratio,lower_log,upper_log,"
    "length_log,tau,converged,ratio_vs_nn_dl,error";

std::string analysis_csv(std::span<const AnalysisRow> rows);

// ---- simulate --------------------------------------------------------------

struct RunConfig {
  std::vector<Measure> measures;
  std::vector<Design> designs;
  std::vector<std::int64_t> n;
  std::vector<int> k;
  std::vector<double> p0;
  std::vector<double> i2;
  std::vector<std::string> methods;
  int reps = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

/// Parses the JSON run configuration. Throws ParseError on missing keys,
/// empty lists, or unknown enum values.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Cross product of the grid lists, measure-major.
std::vector<ScenarioSpec> expand_grid(const RunConfig& config);

inline constexpr const char* kSimulationHeader =
    "measure,design,n,k,p0,i2,tau,method,interval_kind,coverage,mean_length,median_length,"
    "nonconvergence_rate,effective_reps,seed";

struct SimulationOutput {
  std::string csv;
  std::vector<ScenarioResult> results;
  std::vector<std::string> warnings;  // cells skipped because their spec was invalid
};

SimulationOutput simulate(const RunConfig& config, int workers);

// ---- tau-table -------------------------------------------------------------

struct TauCell {
  int k = 0;
  Measure measure = Measure::LogRiskRatio;
  Design design = Design::Equal;
  double i2 = 0.0;
  double tau = 0.0;
};

/// tau for k in {2,3,5}, both measures, all designs, I^2 in {0.25,0.5,0.75,0.9}.
std::vector<TauCell> tau_table(std::int64_t n = 100, double p0 = 0.7);

inline constexpr const char* kTauTableHeader = "k,measure,design,i2,tau";

std::string tau_table_csv(std::span<const TauCell> cells);

Measure parse_measure(std::string_view s);
Design parse_design(std::string_view s);

}  // namespace fewmeta::cli
