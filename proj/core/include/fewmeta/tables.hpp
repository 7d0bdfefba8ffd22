#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fewmeta {

/// Raw per-study counts of a two-arm trial.
struct TwoByTwoTable {
  std::int64_t events_trt = 0;
  std::int64_t size_trt = 0;
  std::int64_t events_ctl = 0;
  std::int64_t size_ctl = 0;

  friend bool operator==(const TwoByTwoTable&, const TwoByTwoTable&) = default;
};

/// Real-valued counterpart of TwoByTwoTable, possibly shifted by the continuity correction.
struct CorrectedTable {
  double events_trt = 0.0;
  double size_trt = 0.0;
  double events_ctl = 0.0;
  double size_ctl = 0.0;
};

enum class Measure { LogOddsRatio, LogRiskRatio };

struct StudyEstimate {
  double y = 0.0;   // log effect
  double se = 0.0;  // standard error of y
  Measure measure = Measure::LogOddsRatio;
  bool corrected = false;
};

struct MetaDataset {
  std::string id;
  std::vector<TwoByTwoTable> studies;

  std::size_t k() const noexcept { return studies.size(); }
};

/// Throws DomainError unless 0 <= events <= size and size >= 1 in both arms.
const TwoByTwoTable& validate_table(const TwoByTwoTable& t);

/// Adds 0.5 to all four cells (sizes grow by 1) when any cell, events or
/// non-events, is zero. Otherwise the counts are copied unchanged.
CorrectedTable apply_continuity_correction(const TwoByTwoTable& t);

/// True when the correction above would shift the table.
bool needs_continuity_correction(const TwoByTwoTable& t);

StudyEstimate log_odds_ratio(const CorrectedTable& t);
StudyEstimate log_risk_ratio(const CorrectedTable& t);
StudyEstimate study_estimate(const CorrectedTable& t, Measure measure);

/// Validates, corrects, and converts every table of a meta-analysis.
std::vector<StudyEstimate> study_estimates(std::span<const TwoByTwoTable> tables,
                                           Measure measure);

/// Exchanges the treatment and control arms.
TwoByTwoTable swap_arms(const TwoByTwoTable& t);

std::string to_string(Measure m);

}  // namespace fewmeta
