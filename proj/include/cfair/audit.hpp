#pragma once

#include <optional>
#include <vector>

#include "cfair/fairness.hpp"
#include "cfair/nonconformity.hpp"

namespace cfair {

/// Explicit per-item prediction sets from a black-box conformal predictor, indexed by dataset
/// row. Items without an entry have no recorded set.
struct PredictionSets {
  int num_classes = 0;
  std::vector<std::optional<std::vector<int>>> sets;

  bool contains(std::size_t item, int label) const;
  /// Throws ValidationError for out-of-range labels.
  void validate() const;
};

/// Sets C(x) = {y : s(x, y) <= lambda_y} for every row of `table`.
PredictionSets sets_from_scores(const ScoreTable& table, const Thresholds& lambdas);

/// Per-slice evidence behind a verdict.
struct SliceEvidence {
  Metric component = Metric::DemographicParity;
  int group = 0;
  int label = 0;
  std::size_t size = 0;
  std::size_t hits = 0;
};

struct AuditVerdict {
  FairnessSpec spec;
  DisparityReport report;
  bool pass = false;
  std::vector<SliceEvidence> evidence;
};

/// Audit a threshold: satisfy-lambda with the audit cohort acting as calibration data.
AuditVerdict audit_lambda(const Cohort& audit_cohort, const ScoreTable& table,
                          const FairnessSpec& spec, const Thresholds& lambdas);

/// Audit explicit sets; slice coverage is (items whose set contains the label)/(m+1).
/// Throws ValidationError when an audit item has no set or a set holds an invalid label.
AuditVerdict audit_sets(const Cohort& audit_cohort, const PredictionSets& sets,
                        const FairnessSpec& spec);

}  // namespace cfair
