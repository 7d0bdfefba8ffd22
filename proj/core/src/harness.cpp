#include "fewmeta/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "fewmeta/errors.hpp"
#include "fewmeta/glmm_binomial.hpp"
#include "fewmeta/nnhm_bayes.hpp"
#include "fewmeta/nnhm_freq.hpp"
#include "fewmeta/poisson_pl.hpp"

namespace fewmeta {

std::string Method::id() const {
  return interval_kind == "HPD" ? name : name + "/" + interval_kind;
}

namespace {

MethodOutcome from_pooled(const PooledResult& r) {
  return {true, r.mu_hat, r.lower, r.upper, r.tau_used, {}};
}

Method nnhm_method(TauMethod est, IntervalKind kind) {
  Method m;
  m.name = "NN-" + to_string(est);
  m.interval_kind = to_string(kind);
  m.run = [est, kind](std::span<const TwoByTwoTable> tables, Measure measure, double level) {
    const auto estimates = study_estimates(tables, measure);
    const auto h = estimate_tau(estimates, est);
    if (!h.converged) {
      MethodOutcome out;
      out.tau = h.tau;
      out.error = "heterogeneity estimate did not converge";
      return out;
    }
    if (kind == IntervalKind::Wald) {
      const auto p = pool(estimates, h.tau);
      return from_pooled(interval_wald(p.mu_hat, p.se_mu, level, h.tau));
    }
    return from_pooled(interval_hksj(estimates, h.tau, level, kind == IntervalKind::Mhksj));
  };
  return m;
}

Method bayes_method(double scale, const std::string& name) {
  Method m;
  m.name = name;
  m.interval_kind = "HPD";
  m.run = [scale](std::span<const TwoByTwoTable> tables, Measure measure, double level) {
    const auto estimates = study_estimates(tables, measure);
    const auto post = mu_posterior(estimates, HalfNormalPrior(scale), level);
    return MethodOutcome{true, post.median, post.hpd_lower, post.hpd_upper, post.tau_median, {}};
  };
  return m;
}

Method glmm_method(GlmmModel model, GlmmIntervalKind kind) {
  Method m;
  m.name = to_string(model);
  m.interval_kind = kind == GlmmIntervalKind::Wald ? "WALD" : "T";
  m.supports_rr = false;
  m.run = [model, kind](std::span<const TwoByTwoTable> tables, Measure measure, double level) {
    if (measure != Measure::LogOddsRatio) throw DomainError("binomial GLMMs estimate odds ratios only");
    GlmmSpec spec;
    spec.model = model;
    const auto fit = fit_glmm(tables, spec);
    MethodOutcome out;
    out.estimate = fit.beta_hat;
    out.tau = fit.tau_hat;
    if (!fit.converged) {
      out.error = fit.message;
      return out;
    }
    const auto [lo, hi] = glmm_interval(fit, kind, level, tables.size());
    out.converged = true;
    out.lower = lo;
    out.upper = hi;
    return out;
  };
  return m;
}

Method pl_method(PlDistribution distr) {
  Method m;
  m.name = "PN-PL";
  m.interval_kind = distr == PlDistribution::Normal ? "NORMAL" : "T";
  m.supports_or = false;
  m.run = [distr](std::span<const TwoByTwoTable> tables, Measure measure, double level) {
    if (measure != Measure::LogRiskRatio) throw DomainError("PN-PL estimates risk ratios only");
    std::vector<CorrectedTable> corrected;
    corrected.reserve(tables.size());
    for (const auto& t : tables) corrected.push_back(apply_continuity_correction(validate_table(t)));
    const auto fit = fit_pl(corrected);
    MethodOutcome out;
    out.estimate = fit.log_theta;
    out.tau = std::sqrt(fit.tau2_theta);
    if (!fit.converged) {
      out.error = "profile-likelihood fixed point did not converge";
      return out;
    }
    const auto [lo, hi] = pl_interval(corrected, fit.log_theta, distr, level);
    out.converged = true;
    out.lower = std::log(lo);
    out.upper = std::log(hi);
    return out;
  };
  return m;
}

}  // namespace

Method make_method(const std::string& id) {
  const auto slash = id.find('/');
  const std::string head = id.substr(0, slash);
  const std::string tail = slash == std::string::npos ? "" : id.substr(slash + 1);

  if (head == "BAYES-HN05" && tail.empty()) return bayes_method(0.5, head);
  if (head == "BAYES-HN10" && tail.empty()) return bayes_method(1.0, head);

  const std::pair<const char*, TauMethod> nn[] = {
      {"NN-DL", TauMethod::DL}, {"NN-ML", TauMethod::ML},
      {"NN-REML", TauMethod::REML}, {"NN-EB", TauMethod::EB}};
  for (const auto& [label, est] : nn) {
    if (head != label) continue;
    if (tail == "WALD") return nnhm_method(est, IntervalKind::Wald);
    if (tail == "HKSJ") return nnhm_method(est, IntervalKind::Hksj);
    if (tail == "MHKSJ") return nnhm_method(est, IntervalKind::Mhksj);
  }
  for (auto model : {GlmmModel::UM_FS, GlmmModel::UM_RS, GlmmModel::CM_AL, GlmmModel::CM_EL}) {
    if (head != to_string(model)) continue;
    if (tail == "WALD") return glmm_method(model, GlmmIntervalKind::Wald);
    if (tail == "T") return glmm_method(model, GlmmIntervalKind::T);
  }
  if (head == "PN-PL") {
    if (tail == "NORMAL") return pl_method(PlDistribution::Normal);
    if (tail == "T") return pl_method(PlDistribution::T);
  }
  throw DomainError("unknown method id: " + id);
}

std::vector<std::string> all_method_ids() {
  std::vector<std::string> ids;
  for (const char* est : {"NN-DL", "NN-ML", "NN-REML", "NN-EB"}) {
    for (const char* kind : {"WALD", "HKSJ", "MHKSJ"}) ids.push_back(std::string(est) + "/" + kind);
  }
  ids.push_back("BAYES-HN05");
  ids.push_back("BAYES-HN10");
  for (const char* model : {"UM.FS", "UM.RS", "CM.AL", "CM.EL"}) {
    for (const char* kind : {"WALD", "T"}) ids.push_back(std::string(model) + "/" + kind);
  }
  ids.push_back("PN-PL/NORMAL");
  ids.push_back("PN-PL/T");
  return ids;
}

MethodOutcome run_method(const Method& method, std::span<const TwoByTwoTable> tables,
                         Measure measure, double level) {
  try {
    auto out = method.run(tables, measure, level);
    if (out.converged && (std::isnan(out.lower) || std::isnan(out.upper))) {
      out.converged = false;
      out.error = "interval is NaN";
    }
    return out;
  } catch (const Error& e) {
    MethodOutcome out;
    out.error = e.what();
    return out;
  }
}

double coverage(std::span<const ReplicateRecord> records, double true_mu) {
  std::size_t used = 0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (!r.converged) continue;
    ++used;
    if (r.lower <= true_mu && true_mu <= r.upper) ++hits;
  }
  if (used == 0) throw DomainError("coverage: every replicate failed");
  return static_cast<double>(hits) / static_cast<double>(used);
}

ScenarioResult run_scenario(const ScenarioSpec& spec, std::span<const Method> methods,
                            int workers) {
  validate_scenario(spec);
  std::vector<const Method*> active;
  for (const auto& m : methods) {
    if (m.supports(spec.measure)) active.push_back(&m);
  }
  const auto reps = static_cast<std::size_t>(spec.reps);
  const std::size_t nm = active.size();
  std::vector<ReplicateRecord> records(reps * nm);
  std::vector<int> clamped(reps, 0);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
      const auto data = generate_meta(spec, r);
      clamped[r] = data.clamped;
      for (std::size_t j = 0; j < nm; ++j) {
        const auto out = run_method(*active[j], data.tables, spec.measure, spec.level);
        records[r * nm + j] = {out.converged, out.lower, out.upper};
      }
    }
  };
  const int n_threads = std::max(1, workers);
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  ScenarioResult result;
  result.spec = spec;
  result.tau = scenario_tau(spec);
  for (int c : clamped) result.clamped += c;

  std::vector<ReplicateRecord> column(reps);
  std::vector<double> lengths;
  for (std::size_t j = 0; j < nm; ++j) {
    MethodSummary s;
    s.name = active[j]->name;
    s.interval_kind = active[j]->interval_kind;
    lengths.clear();
    for (std::size_t r = 0; r < reps; ++r) {
      column[r] = records[r * nm + j];
      if (!column[r].converged) {
        ++s.nonconverged;
        continue;
      }
      const double len = column[r].upper - column[r].lower;
      if (std::isinf(len)) ++s.infinite_lengths;
      lengths.push_back(len);
    }
    s.effective_reps = static_cast<int>(lengths.size());
    s.nonconvergence_rate = static_cast<double>(s.nonconverged) / static_cast<double>(reps);
    if (lengths.empty()) {
      s.coverage = s.mean_length = s.median_length = std::numeric_limits<double>::quiet_NaN();
    } else {
      s.coverage = coverage(column);
      double sum = 0.0;
      for (double l : lengths) sum += l;
      s.mean_length = sum / static_cast<double>(lengths.size());
      std::sort(lengths.begin(), lengths.end());
      const std::size_t m = lengths.size();
      s.median_length = m % 2 ? lengths[m / 2] : 0.5 * (lengths[m / 2 - 1] + lengths[m / 2]);
    }
    result.methods.push_back(std::move(s));
  }
  return result;
}

}  // namespace fewmeta
