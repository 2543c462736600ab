#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/audit.hpp"
#include "cfair/gcp.hpp"
#include "cfair/search.hpp"
#include "cfair/synth.hpp"

namespace cfair {

using Json = nlohmann::ordered_json;

/// Everything a run reads from the config file. One seed feeds the split, APS randomization
/// and the generator through derived sub-seeds.
struct RunConfig {
  Metric metric = Metric::DemographicParity;
  double closeness = 0.1;
  double alpha = 0.1;
  bool classwise = false;
  std::optional<std::vector<int>> positive_labels;  // default: every label
  RatioVariant ratio_variant = RatioVariant::Miscoverage;
  DegeneratePolicy degenerate = DegeneratePolicy::Error;

  GroupSelection groups;
  ScoreParams score;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> lambda_grid;
  SplitFractions split = {0.3, 0.2, 0.25, 0.25};
  bool resplit = false;  // ignore split tags already present in the data

  std::optional<std::vector<double>> lambda;  // audit: one value or one per class
  std::optional<Split> audit_split;           // audit cohort; default calib if tagged, else all labeled

  SearchOptions search;
  GcpOptions gcp;
  SynthConfig synth;

  /// Resolves the positive labels against the dataset's class count.
  FairnessSpec fairness_spec(int num_classes) const;
};

/// Unknown keys and wrong types raise ValidationError.
RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::filesystem::path& path);
Json to_json(const RunConfig& config);

Json to_json(const CoverageInterval& c);
Json to_json(const DisparityReport& report, const GroupAssignment& groups);
Json to_json(const ThresholdResult& result, const GroupAssignment& groups);
Json to_json(const SetEvaluation& eval, const GroupAssignment& groups);
Json to_json(const AuditVerdict& verdict, const GroupAssignment& groups);
Json to_json(const GcpFit& fit);
Json to_json(const GcpEvaluation& eval, const GroupMembership& membership, const GroupAssignment& groups);

/// Thresholds as a number or an array.
Json thresholds_json(const Thresholds& t);

}  // namespace cfair
