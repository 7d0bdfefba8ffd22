#include "cli/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli/csv.hpp"
#include "fewmeta/errors.hpp"
#include "fewmeta/nnhm_freq.hpp"

namespace fewmeta::cli {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::optional<double> nn_dl_estimate(const MetaDataset& d, Measure measure) {
  if (d.k() < 2) return std::nullopt;
  try {
    const auto est = study_estimates(d.studies, measure);
    return pool(est, estimate_tau(est, TauMethod::DL).tau).mu_hat;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

Measure parse_measure(std::string_view s) {
  const auto u = upper(s);
  if (u == "OR") return Measure::LogOddsRatio;
  if (u == "RR") return Measure::LogRiskRatio;
  throw ParseError("unknown measure '" + std::string(s) + "' (expected OR or RR)", 0);
}

Design parse_design(std::string_view s) {
  const auto u = upper(s);
  if (u == "EQUAL") return Design::Equal;
  if (u == "ONE_SMALL") return Design::OneSmall;
  if (u == "ONE_LARGE") return Design::OneLarge;
  throw ParseError("unknown design '" + std::string(s) + "'", 0);
}

std::vector<AnalysisRow> analyze(std::span<const MetaDataset> datasets, Measure measure,
                                 std::span<const std::string> method_ids, double level) {
  std::vector<Method> methods;
  methods.reserve(method_ids.size());
  for (const auto& id : method_ids) methods.push_back(make_method(id));

  std::vector<AnalysisRow> rows;
  for (const auto& d : datasets) {
    const auto reference = nn_dl_estimate(d, measure);
    for (const auto& m : methods) {
      AnalysisRow row;
      row.meta_id = d.id;
      row.measure = measure;
      row.method = m.name;
      row.interval_kind = m.interval_kind;
      row.k = d.k();
      if (!m.supports(measure)) {
        row.outcome.error = "not applicable to " + to_string(measure);
      } else {
        row.outcome = run_method(m, d.studies, measure, level);
      }
      if (reference && row.outcome.converged) {
        row.ratio_vs_nn_dl = std::exp(row.outcome.estimate - *reference);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string analysis_csv(std::span<const AnalysisRow> rows) {
  std::ostringstream out;
  out << kAnalysisHeader << '\n';
  for (const auto& r : rows) {
    const auto& o = r.outcome;
    const bool has_point = o.converged;
    auto num_if = [](bool ok, double v) { return ok ? format_number(v) : std::string(); };
    std::string error = o.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << r.meta_id << ',' << to_string(r.measure) << ',' << r.method << ',' << r.interval_kind
        << ',' << r.k << ',' << num_if(has_point, o.estimate) << ','
        << num_if(has_point, std::exp(o.estimate)) << ',' << num_if(o.converged, o.lower) << ','
        << num_if(o.converged, o.upper) << ',' << num_if(o.converged, o.length()) << ','
        << num_if(has_point, o.tau) << ',' << (o.converged ? "true" : "false") << ','
        << (r.ratio_vs_nn_dl ? format_number(*r.ratio_vs_nn_dl) : std::string())
        << ',' << error << '\n';
  }
  return out.str();
}

RunConfig parse_run_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  auto list = [&j](const char* key) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw ParseError(std::string("config: '") + key + "' must be a list", 0);
    }
    if (j[key].empty()) throw ParseError(std::string("config: '") + key + "' is empty", 0);
    return j[key];
  };
  RunConfig c;
  try {
    for (const auto& v : list("measures")) c.measures.push_back(parse_measure(v.get<std::string>()));
    for (const auto& v : list("designs")) c.designs.push_back(parse_design(v.get<std::string>()));
    for (const auto& v : list("n")) c.n.push_back(v.get<std::int64_t>());
    for (const auto& v : list("k")) c.k.push_back(v.get<int>());
    for (const auto& v : list("p0")) c.p0.push_back(v.get<double>());
    for (const auto& v : list("i2")) c.i2.push_back(v.get<double>());
    for (const auto& v : list("methods")) c.methods.push_back(v.get<std::string>());
    if (!j.contains("seed")) throw ParseError("config: 'seed' is required", 0);
    c.seed = j["seed"].get<std::uint64_t>();
    c.reps = j.value("reps", 2000);
    c.level = j.value("level", 0.95);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  if (c.reps < 1) throw ParseError("config: reps must be positive", 0);
  if (!(c.level > 0.0 && c.level < 1.0)) throw ParseError("config: level must lie in (0,1)", 0);
  for (const auto& id : c.methods) {
    try {
      make_method(id);
    } catch (const DomainError& e) {
      throw ParseError(std::string("config: ") + e.what(), 0);
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::vector<ScenarioSpec> expand_grid(const RunConfig& config) {
  std::vector<ScenarioSpec> specs;
  for (auto measure : config.measures)
    for (auto design : config.designs)
      for (auto n : config.n)
        for (auto k : config.k)
          for (auto p0 : config.p0)
            for (auto i2 : config.i2) {
              ScenarioSpec s;
              s.measure = measure;
              s.design = design;
              s.n_per_arm = n;
              s.k = k;
              s.p0 = p0;
              s.i_squared = i2;
              s.level = config.level;
              s.reps = config.reps;
              s.seed = config.seed;
              specs.push_back(s);
            }
  return specs;
}

SimulationOutput simulate(const RunConfig& config, int workers) {
  std::vector<Method> methods;
  for (const auto& id : config.methods) methods.push_back(make_method(id));

  SimulationOutput out;
  std::ostringstream csv;
  csv << kSimulationHeader << '\n';
  for (const auto& spec : expand_grid(config)) {
    ScenarioResult res;
    try {
      res = run_scenario(spec, methods, workers);
    } catch (const DomainError& e) {
      out.warnings.push_back(std::string("skipped cell: ") + e.what());
      continue;
    }
    for (const auto& m : res.methods) {
      csv << to_string(spec.measure) << ',' << to_string(spec.design) << ',' << spec.n_per_arm
          << ',' << spec.k << ',' << format_number(spec.p0) << ',' << format_number(spec.i_squared)
          << ',' << format_number(res.tau) << ',' << m.name << ',' << m.interval_kind << ','
          << format_rate(m.coverage) << ',' << format_number(m.mean_length) << ','
          << format_number(m.median_length) << ',' << format_rate(m.nonconvergence_rate) << ','
          << m.effective_reps << ',' << spec.seed << '\n';
    }
    out.results.push_back(std::move(res));
  }
  out.csv = csv.str();
  return out;
}

std::vector<TauCell> tau_table(std::int64_t n, double p0) {
  std::vector<TauCell> cells;
  for (int k : {2, 3, 5}) {
    for (auto measure : {Measure::LogRiskRatio, Measure::LogOddsRatio}) {
      for (auto design : {Design::Equal, Design::OneSmall, Design::OneLarge}) {
        for (double i2 : {0.25, 0.50, 0.75, 0.90}) {
          ScenarioSpec s;
          s.measure = measure;
          s.design = design;
          s.n_per_arm = n;
          s.k = k;
          s.p0 = p0;
          s.i_squared = i2;
          cells.push_back({k, measure, design, i2, scenario_tau(s)});
        }
      }
    }
  }
  return cells;
}

std::string tau_table_csv(std::span<const TauCell> cells) {
  std::ostringstream out;
  out << kTauTableHeader << '\n';
  for (const auto& c : cells) {
    out << c.k << ',' << to_string(c.measure) << ',' << to_string(c.design) << ','
        << format_number(c.i2) << ',' << format_number(c.tau) << '\n';
  }
  return out.str();
}

}  // namespace fewmeta::cli
