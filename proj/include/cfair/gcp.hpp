#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cfair/fairness.hpp"

namespace cfair {

// BatchGCP baseline: a group-dependent threshold f + sum_g lambda_g 1[x in g] fit by
// minimizing the empirical pinball loss of the true-label scores.

/// (s - tau) q 1[s > tau] + (tau - s)(1 - q) 1[s <= tau], with q = 1 - alpha.
double pinball_loss(double tau, double s, double q);

/// Possibly overlapping group memberships for every dataset row.
struct GroupMembership {
  std::vector<std::string> names;
  std::vector<std::vector<int>> of_item;

  std::size_t num_groups() const noexcept { return names.size(); }
};

/// One group per effective group (disjoint).
GroupMembership disjoint_membership(const GroupAssignment& groups);
/// One group per (attribute, level); an item belongs to one group per attribute.
GroupMembership attribute_membership(const Dataset& data);

struct GcpThreshold {
  double base = 0.0;
  std::vector<double> offsets;
  std::vector<std::string> group_names;

  /// base + sum of offsets over `groups`. Throws ValidationError for an unknown group.
  double threshold(std::span<const int> groups) const;
};

struct GcpOptions {
  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;  // minimum best-objective improvement per 50 iterations
};

struct GcpFit {
  GcpThreshold model;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<std::string> warnings;
};

/// Mean pinball loss of `model` over (score, memberships) pairs.
double gcp_objective(const GcpThreshold& model, std::span<const double> scores,
                     std::span<const std::vector<int>> memberships, double alpha);

/// Full-batch subgradient descent, step c0/sqrt(t) with c0 = initial objective / mean |score|,
/// then exact per-offset minimization.
/// Converged once every group's subgradient is within one calibration point of zero. Descent
/// also stops when the best objective improves by less than `tolerance` over 50 iterations.
/// Returns the best iterate. Throws ValidationError if a group has no member.
GcpFit fit_batchgcp(std::span<const double> scores, std::span<const std::vector<int>> memberships,
                    std::vector<std::string> group_names, double base, double alpha,
                    const GcpOptions& options = {});

/// Fits on the cohort's true-label scores with base = the cohort's conformal quantile.
GcpFit fit_batchgcp(const Cohort& calib, const ScoreTable& table, const GroupMembership& groups,
                    double alpha, const GcpOptions& options = {});

struct GcpEvaluation {
  std::vector<double> group_coverage;
  std::vector<std::size_t> group_sizes;
  SetEvaluation sets;                   // empirical coverage, efficiency, DP gap, DI ratio
  DisparityReport demographic_parity;   // interval-based check at the requested closeness
  bool requires_group_information = true;
};

/// Item-specific thresholds on `test`. `spec` supplies alpha, labels and closeness for the
/// demographic-parity report.
GcpEvaluation evaluate_batchgcp(const GcpThreshold& model, const Cohort& test, const ScoreTable& table,
                                const GroupMembership& groups, const FairnessSpec& spec);

}  // namespace cfair
