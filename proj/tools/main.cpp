// fewmeta: meta-analysis of few studies from the command line.
//
//   fewmeta analyze   --data <csv> --measure {or|rr} [--methods a,b,...] [--level 0.95] [--out <csv>]
//   fewmeta simulate  --config <json> [--out <csv>] [--workers <n>]
//   fewmeta tau-table [--n 100] [--p0 0.7] [--out <csv>]
//
// Exit status is nonzero only for structural errors (bad input, I/O);
// statistical non-convergence is reported in the output rows.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <thread>

#include "cli/commands.hpp"
#include "cli/dataset.hpp"
#include "fewmeta/errors.hpp"

namespace {

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-effects meta-analysis of few studies: analysis, simulation, tau tables"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "Analyze 2x2 datasets with every requested method");
  std::string data_path;
  std::string measure = "or";
  std::vector<std::string> methods;
  double level = 0.95;
  std::string analyze_out;
  analyze->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  analyze->add_option("--measure", measure, "Effect measure")
      ->check(CLI::IsMember({"or", "rr", "OR", "RR"}));
  analyze->add_option("--methods", methods, "Method ids (comma separated); default: all")
      ->delimiter(',');
  analyze->add_option("--level", level, "Interval level")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--out", analyze_out, "Output CSV (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Run a scenario grid");
  std::string config_path;
  std::string simulate_out;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  simulate->add_option("--config", config_path, "Run configuration JSON")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", simulate_out, "Output CSV (default stdout)");
  simulate->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* tau = app.add_subcommand("tau-table", "Absolute tau implied by the simulation I^2 settings");
  std::int64_t n = 100;
  double p0 = 0.7;
  std::string tau_out;
  tau->add_option("--n", n, "Participants per arm")->check(CLI::PositiveNumber);
  tau->add_option("--p0", p0, "Baseline event probability")->check(CLI::Range(0.0, 1.0));
  tau->add_option("--out", tau_out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      const auto datasets = fewmeta::cli::parse_dataset(std::filesystem::path(data_path));
      if (methods.empty()) methods = fewmeta::all_method_ids();
      const auto rows =
          fewmeta::cli::analyze(datasets, fewmeta::cli::parse_measure(measure), methods, level);
      write_output(analyze_out, fewmeta::cli::analysis_csv(rows));
    } else if (*simulate) {
      const auto config = fewmeta::cli::load_run_config(config_path);
      const auto result = fewmeta::cli::simulate(config, workers);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      write_output(simulate_out, result.csv);
    } else if (*tau) {
      write_output(tau_out, fewmeta::cli::tau_table_csv(fewmeta::cli::tau_table(n, p0)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
