#include "fewmeta/tables.hpp"

#include <cmath>

#include "fewmeta/errors.hpp"

namespace fewmeta {

const TwoByTwoTable& validate_table(const TwoByTwoTable& t) {
  if (t.size_trt < 1 || t.size_ctl < 1) {
    throw DomainError("arm size must be at least 1");
  }
  if (t.events_trt < 0 || t.events_ctl < 0) {
    throw DomainError("event counts must be nonnegative");
  }
  if (t.events_trt > t.size_trt || t.events_ctl > t.size_ctl) {
    throw DomainError("event count exceeds arm size");
  }
  return t;
}

bool needs_continuity_correction(const TwoByTwoTable& t) {
  return t.events_trt == 0 || t.events_ctl == 0 || t.events_trt == t.size_trt ||
         t.events_ctl == t.size_ctl;
}

CorrectedTable apply_continuity_correction(const TwoByTwoTable& t) {
  CorrectedTable c{static_cast<double>(t.events_trt), static_cast<double>(t.size_trt),
                   static_cast<double>(t.events_ctl), static_cast<double>(t.size_ctl)};
  if (needs_continuity_correction(t)) {
    c.events_trt += 0.5;
    c.events_ctl += 0.5;
    c.size_trt += 1.0;
    c.size_ctl += 1.0;
  }
  return c;
}

namespace {

void require_positive_cells(const CorrectedTable& t) {
  const bool ok = t.events_trt > 0.0 && t.events_ctl > 0.0 && t.size_trt > t.events_trt &&
                  t.size_ctl > t.events_ctl;
  if (!ok) {
    throw DomainError("table has a nonpositive cell; apply the continuity correction first");
  }
}

}  // namespace

StudyEstimate log_odds_ratio(const CorrectedTable& t) {
  require_positive_cells(t);
  const double a = t.events_trt;
  const double b = t.size_trt - t.events_trt;
  const double c = t.events_ctl;
  const double d = t.size_ctl - t.events_ctl;
  return {std::log(a / b) - std::log(c / d), std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d),
          Measure::LogOddsRatio, false};
}

StudyEstimate log_risk_ratio(const CorrectedTable& t) {
  require_positive_cells(t);
  const double a = t.events_trt;
  const double c = t.events_ctl;
  return {std::log(a / t.size_trt) - std::log(c / t.size_ctl),
          std::sqrt(1.0 / a - 1.0 / t.size_trt + 1.0 / c - 1.0 / t.size_ctl),
          Measure::LogRiskRatio, false};
}

StudyEstimate study_estimate(const CorrectedTable& t, Measure measure) {
  return measure == Measure::LogOddsRatio ? log_odds_ratio(t) : log_risk_ratio(t);
}

std::vector<StudyEstimate> study_estimates(std::span<const TwoByTwoTable> tables,
                                           Measure measure) {
  std::vector<StudyEstimate> out;
  out.reserve(tables.size());
  for (const auto& t : tables) {
    validate_table(t);
    auto est = study_estimate(apply_continuity_correction(t), measure);
    est.corrected = needs_continuity_correction(t);
    out.push_back(est);
  }
  return out;
}

TwoByTwoTable swap_arms(const TwoByTwoTable& t) {
  return {t.events_ctl, t.size_ctl, t.events_trt, t.size_trt};
}

std::string to_string(Measure m) {
  return m == Measure::LogOddsRatio ? "OR" : "RR";
}

}  // namespace fewmeta
