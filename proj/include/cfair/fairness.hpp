#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfair/conformal.hpp"
#include "cfair/data_model.hpp"
#include "cfair/nonconformity.hpp"

namespace cfair {

/// The labeled population a fairness check runs on (normally the calibration split).
/// Holds pointers; the dataset and group assignment must outlive it.
struct Cohort {
  const Dataset* data = nullptr;
  const GroupAssignment* groups = nullptr;
  std::vector<std::size_t> items;

  int label_of(std::size_t i) const { return *data->items[i].label; }
  int group_of(std::size_t i) const { return groups->of_item[i]; }
};

Cohort make_cohort(const Dataset& data, const GroupAssignment& groups, Split split);
/// Throws ValidationError if any item is unlabeled or out of range.
Cohort make_cohort(const Dataset& data, const GroupAssignment& groups, std::vector<std::size_t> items);

/// Whether `label` belongs to the prediction set of `item`.
using Membership = std::function<bool(std::size_t item, int label)>;

Membership score_membership(const ScoreTable& table, const Thresholds& lambdas);

/// Single metrics whose slices make up `metric` (EqualizedOdds -> EO and PE; DI and the
/// predictive-parity proxy use the demographic-parity filter).
std::vector<Metric> component_filters(Metric metric);

/// Coverage of one (group, label) slice. `coverage.lower` = hits/(m+1), width = 1/(m+1).
struct SliceCoverage {
  Metric component = Metric::DemographicParity;
  int group = 0;
  int label = 0;
  std::size_t size = 0;
  std::size_t hits = 0;
  CoverageInterval coverage;
  bool degenerate = false;
};

/// A filtered calibration slice with its fixed-label scores sorted for inverse quantiles.
struct GroupLabelSlice {
  Metric component = Metric::DemographicParity;
  int group = 0;
  int label = 0;
  std::vector<std::size_t> items;
  std::vector<double> scores;  // sorted s(x_i, label)
};

/// All slices a metric needs on one cohort, built once and evaluated at many thresholds.
class SliceSet {
 public:
  /// Throws DegenerateSliceError for empty slices under DegeneratePolicy::Error.
  SliceSet(const Cohort& cohort, const ScoreTable& table, const FairnessSpec& spec);

  const std::vector<GroupLabelSlice>& slices() const noexcept { return slices_; }
  /// Predictive-parity proxy only: per (group, label), members of g whose true label is label.
  const std::vector<GroupLabelSlice>& label_matched() const noexcept { return label_matched_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  std::vector<SliceCoverage> coverages(const Thresholds& lambdas) const;

 private:
  std::vector<GroupLabelSlice> slices_;
  std::vector<GroupLabelSlice> label_matched_;
  std::vector<std::string> warnings_;
};

/// Slice coverages at `lambdas` via inverse quantiles of fixed-label calibration scores.
std::vector<SliceCoverage> slice_coverages(const ScoreTable& table, const Cohort& cohort,
                                           const FairnessSpec& spec, const Thresholds& lambdas);

/// Slice coverages for explicit prediction sets: hits = items whose set contains the label.
std::vector<SliceCoverage> slice_coverages_from_sets(const Cohort& cohort, const Membership& member,
                                                     const FairnessSpec& spec,
                                                     std::vector<std::string>* warnings = nullptr);

/// Disparity verdict for one positive label (and one component metric).
struct LabelDisparity {
  Metric component = Metric::DemographicParity;
  int label = 0;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double value = 0.0;  // gap (difference mode) or ratio (ratio mode)
  bool satisfied = true;
  std::size_t groups_compared = 0;
  std::vector<int> missing_groups;  // proxy cells that are undefined
};

/// Predictive-parity proxy cell: PPV - Pr[Y = label | g] on the cohort.
struct ProxyCell {
  int group = 0;
  int label = 0;
  std::size_t members = 0;         // items of g
  std::size_t label_count = 0;     // items of g with y = label
  std::size_t in_set = 0;          // items of g with label in set
  std::size_t in_set_correct = 0;  // ... and y = label
  double prior = 0.0;
  std::optional<double> ppv;
  std::optional<double> proxy;
};

struct DisparityReport {
  Metric metric = Metric::DemographicParity;
  ComparisonMode mode = ComparisonMode::Difference;
  RatioVariant ratio_variant = RatioVariant::Miscoverage;
  double closeness = 0.0;
  std::vector<LabelDisparity> labels;
  double worst_disparity = 0.0;
  bool satisfied = true;
  std::vector<SliceCoverage> slices;
  std::vector<ProxyCell> proxy_cells;
  std::vector<std::string> warnings;
};

/// Per label: a_min = min_g(coverage - width), a_max = max_g coverage. Difference mode passes
/// when a_max - a_min <= c; ratio mode when the ratio is >= c. EqualizedOdds needs both
/// component metrics to pass.
DisparityReport check_disparity(std::span<const SliceCoverage> slices, const FairnessSpec& spec);

/// Ratio used by ratio mode; 0/0 is 1 and x/0 is 0.
double disparity_ratio(double alpha_min, double alpha_max, RatioVariant variant);

/// Proxy cells from set membership (group universe = cohort groups, labels = spec labels).
std::vector<ProxyCell> proxy_cells(const Cohort& cohort, const Membership& member,
                                   const LabelSet& labels);

/// Proxy disparity check: per label max_g proxy - min_g proxy <= c; undefined cells fail.
DisparityReport check_proxy(std::vector<ProxyCell> cells, const FairnessSpec& spec);

/// Score-path proxy evaluation reusing the slice set's DP and EO scores.
std::vector<ProxyCell> proxy_cells(const SliceSet& slices, const Thresholds& lambdas);

/// satisfy-lambda on a prepared slice set.
DisparityReport evaluate_fairness(const SliceSet& slices, const FairnessSpec& spec,
                                  const Thresholds& lambdas);

/// Same check from explicit set membership (audits, BatchGCP sets).
DisparityReport evaluate_fairness(const Cohort& cohort, const Membership& member,
                                  const FairnessSpec& spec);

// Label distributions and predictive parity.

struct LabelDistribution {
  int group = 0;
  std::size_t count = 0;
  std::vector<double> probs;
};

/// Empirical Pr[Y = k | g] on the cohort. Throws ValidationError for an empty group.
std::vector<LabelDistribution> label_distributions(const Cohort& cohort, int num_classes);

double total_variation(std::span<const double> p, std::span<const double> q);
/// sup over positive labels of |p_k - q_k|.
double positive_total_variation(std::span<const double> p, std::span<const double> q,
                                const LabelSet& labels);

struct TvMatrix {
  std::vector<std::vector<double>> tv;
  std::vector<std::vector<double>> tv_plus;
};

TvMatrix tv_distances(const Cohort& cohort, const LabelSet& labels);

/// Smallest closeness for which the top of the threshold range provably satisfies
/// predictive parity: max pairwise TV (and the positive-label variant).
struct PredictiveParityFeasibility {
  double max_tv = 0.0;
  double max_tv_plus = 0.0;
};

PredictiveParityFeasibility predictive_parity_feasibility(const Cohort& cohort,
                                                          const LabelSet& labels);

struct PpvInterval {
  CoverageInterval equal_opportunity;
  CoverageInterval demographic_parity;
  double prior = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool informative = true;  // false when the DP lower bound is zero
};

/// PPV = (EO coverage / DP coverage) * prior, bounded interval-wise. Upper end capped at 1.
PpvInterval ppv_interval(const CoverageInterval& eo, const CoverageInterval& dp, double prior);

/// Decomposition for one (group, label) on the cohort at `lambdas`.
PpvInterval decompose_predictive_parity(const Cohort& cohort, const ScoreTable& table,
                                        const Thresholds& lambdas, int group, int label);

// Held-out evaluation with empirical rates (no interval widths).

struct SliceRate {
  Metric component = Metric::DemographicParity;
  int group = 0;
  int label = 0;
  std::size_t size = 0;
  std::size_t hits = 0;
  double rate = 0.0;
};

struct SetEvaluation {
  std::size_t items = 0;
  double coverage = 0.0;    // true label in set
  double efficiency = 0.0;  // mean set size
  std::vector<SliceRate> slices;
  double worst_disparity = 0.0;  // metric-specific, empirical
  double demographic_parity_gap = 0.0;
  double disparate_impact_ratio = 1.0;
  std::vector<double> group_coverage;  // Pr[y in C(x) | g]
  std::vector<std::size_t> group_sizes;
};

SetEvaluation evaluate_sets(const Cohort& cohort, const Membership& member, const FairnessSpec& spec);

}  // namespace cfair
