#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cfair/conformal.hpp"
#include "cfair/fairness.hpp"

namespace cfair {

enum class SpaceOrigin { Derived, UserSupplied };

/// Sorted, unique threshold candidates Lambda, all at or above the conformal quantile.
struct ThresholdSearchSpace {
  std::vector<double> candidates;
  SpaceOrigin origin = SpaceOrigin::Derived;
  double qhat = 0.0;
};

/// Derived space: q-hat, the top score, and every fixed-label score in between, where the top
/// score is the largest of the marginal and fixed-label calibration scores. A user grid
/// replaces the derived candidates; entries below q-hat are dropped.
/// Throws InsufficientCalibrationError when q-hat is undefined.
ThresholdSearchSpace build_lambda_space(const ConformalCalibrator& marginal,
                                        std::span<const double> fixed_label_scores,
                                        std::optional<std::span<const double>> user_grid = std::nullopt);

/// Calibration data prepared for repeated satisfy-lambda calls.
class FairnessProblem {
 public:
  FairnessProblem(const Cohort& cohort, const ScoreTable& table, FairnessSpec spec,
                  std::optional<std::vector<double>> user_grid = std::nullopt);
  /// Shares an existing search space (classwise sub-problems).
  FairnessProblem(const Cohort& cohort, const ScoreTable& table, FairnessSpec spec,
                  ThresholdSearchSpace space);

  const FairnessSpec& spec() const noexcept { return spec_; }
  const Cohort& cohort() const noexcept { return cohort_; }
  const ScoreTable& table() const noexcept { return *table_; }
  const SliceSet& slices() const noexcept { return slices_; }
  const ThresholdSearchSpace& space() const noexcept { return space_; }
  double qhat() const noexcept { return space_.qhat; }

 private:
  Cohort cohort_;
  const ScoreTable* table_;
  FairnessSpec spec_;
  ThresholdSearchSpace space_;
  SliceSet slices_;
};

/// Marginal calibrator over true-label scores of the cohort.
ConformalCalibrator marginal_calibrator(const Cohort& cohort, const ScoreTable& table, double alpha);

/// Every s(x_i, y) for cohort items i and positive labels y.
std::vector<double> positive_label_scores(const Cohort& cohort, const ScoreTable& table,
                                          const LabelSet& labels);

struct SatisfyResult {
  bool satisfied = false;
  DisparityReport report;
};

SatisfyResult satisfy_lambda(const FairnessProblem& problem, const Thresholds& lambdas);
SatisfyResult satisfy_lambda(const FairnessProblem& problem, double lambda);

enum class SearchStatus { Found, NoSatisfyingThreshold };

struct SearchOptions {
  bool exhaustive = false;  // test every candidate and record verdicts
  unsigned threads = 1;     // > 1 evaluates candidates concurrently (implies exhaustive)
};

struct CandidateVerdict {
  double lambda = 0.0;
  bool satisfied = false;
  double worst_disparity = 0.0;
  bool operator==(const CandidateVerdict&) const = default;
};

struct ClassSearch {
  int label = 0;
  SearchStatus status = SearchStatus::NoSatisfyingThreshold;
  std::optional<double> lambda;
  std::optional<double> best_candidate;
  std::size_t tested = 0;
  std::optional<std::size_t> satisfying_count;
};

struct ThresholdResult {
  SearchStatus status = SearchStatus::NoSatisfyingThreshold;
  Thresholds lambda;  // set only when status == Found
  double qhat = 0.0;
  std::size_t candidates = 0;
  std::size_t tested = 0;
  std::optional<std::size_t> satisfying_count;  // |Lambda_M|, exhaustive scans only
  DisparityReport report;                       // at lambda_opt, else at best_candidate
  std::optional<double> best_candidate;         // smallest-disparity candidate when none passes
  std::vector<CandidateVerdict> verdicts;       // exhaustive scans only
  std::vector<ClassSearch> per_class;           // classwise searches only

  bool found() const noexcept { return status == SearchStatus::Found; }
};

/// lambda_opt = min{lambda in Lambda : satisfy_lambda(lambda)}.
ThresholdResult find_lambda_opt(const FairnessProblem& problem, const SearchOptions& options = {});

/// One search per positive label with Y+ = {label} over the shared candidate space; labels
/// outside Y+ keep q-hat.
ThresholdResult find_classwise_lambdas(const FairnessProblem& problem,
                                       const SearchOptions& options = {});

/// Dispatches on spec().classwise.
ThresholdResult calibrate(const FairnessProblem& problem, const SearchOptions& options = {});

}  // namespace cfair
