#include "cfair/audit.hpp"

#include <algorithm>

namespace cfair {

bool PredictionSets::contains(std::size_t item, int label) const {
  const auto& s = sets.at(item);
  return s && std::find(s->begin(), s->end(), label) != s->end();
}

void PredictionSets::validate() const {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (!sets[i]) continue;
    for (int y : *sets[i]) {
      if (y < 0 || y >= num_classes) {
        throw ValidationError("prediction set of row " + std::to_string(i) + " holds label " +
                              std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
      }
    }
  }
}

PredictionSets sets_from_scores(const ScoreTable& table, const Thresholds& lambdas) {
  PredictionSets out;
  out.num_classes = static_cast<int>(table.num_classes());
  out.sets.reserve(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) out.sets.emplace_back(prediction_set(table.row(i), lambdas));
  return out;
}

namespace {

AuditVerdict finish(const FairnessSpec& spec, DisparityReport report) {
  AuditVerdict v;
  v.spec = spec;
  v.pass = report.satisfied;
  for (const auto& s : report.slices) {
    v.evidence.push_back({s.component, s.group, s.label, s.size, s.hits});
  }
  v.report = std::move(report);
  return v;
}

}  // namespace

AuditVerdict audit_lambda(const Cohort& audit_cohort, const ScoreTable& table,
                          const FairnessSpec& spec, const Thresholds& lambdas) {
  spec.validate();
  const SliceSet slices(audit_cohort, table, spec);
  return finish(spec, evaluate_fairness(slices, spec, lambdas));
}

AuditVerdict audit_sets(const Cohort& audit_cohort, const PredictionSets& sets,
                        const FairnessSpec& spec) {
  spec.validate();
  sets.validate();
  if (sets.num_classes != audit_cohort.data->num_classes) {
    throw ValidationError("prediction sets declare " + std::to_string(sets.num_classes) +
                          " classes, dataset has " + std::to_string(audit_cohort.data->num_classes));
  }
  for (std::size_t i : audit_cohort.items) {
    if (i >= sets.sets.size() || !sets.sets[i]) {
      throw ValidationError("no prediction set for audit item '" + audit_cohort.data->items[i].id + "'");
    }
  }
  const Membership member = [&sets](std::size_t item, int label) { return sets.contains(item, label); };
  return finish(spec, evaluate_fairness(audit_cohort, member, spec));
}

}  // namespace cfair
