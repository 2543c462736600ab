#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfair/nonconformity.hpp"

namespace cfair {

/// Bounds on Pr[s_test <= lambda] from n exchangeable calibration scores:
/// [count/(n+1), (count+1)/(n+1)].
struct CoverageInterval {
  double lower = 0.0;
  double upper = 0.0;
  double width = 0.0;
  bool operator==(const CoverageInterval&) const = default;
};

/// k = ceil((n+1)(1-alpha)), the 1-based order statistic used as the conformal quantile.
std::size_t conformal_rank(std::size_t n, double alpha);

/// Sorted calibration scores at miscoverage level alpha.
class ConformalCalibrator {
 public:
  /// Throws ValidationError on empty scores or alpha outside (0, 1).
  ConformalCalibrator(std::vector<double> scores, double alpha);

  std::size_t size() const noexcept { return scores_.size(); }
  double alpha() const noexcept { return alpha_; }
  const std::vector<double>& scores() const noexcept { return scores_; }
  double max_score() const { return scores_.back(); }

  /// Exact k-th smallest score. Throws InsufficientCalibrationError when k > n.
  double quantile() const;

  /// Number of calibration scores <= lambda.
  std::size_t count_at_most(double lambda) const;

  CoverageInterval inverse_quantile(double lambda) const;

 private:
  std::vector<double> scores_;
  double alpha_;
};

/// Interval for `count` of `n` scores at or below the threshold.
CoverageInterval coverage_interval(std::size_t count, std::size_t n);

/// Per-label thresholds: one shared lambda, or one lambda per class.
class Thresholds {
 public:
  Thresholds() = default;
  explicit Thresholds(double lambda) : values_{lambda}, shared_(true) {}
  explicit Thresholds(std::vector<double> per_class) : values_(std::move(per_class)), shared_(false) {}

  bool shared() const noexcept { return shared_; }
  double at(int label) const { return shared_ ? values_.front() : values_.at(static_cast<std::size_t>(label)); }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const Thresholds&) const = default;

 private:
  std::vector<double> values_;
  bool shared_ = true;
};

/// {y : s(x, y) <= lambda}.
std::vector<int> prediction_set(std::span<const double> score_row, double lambda);
/// {y : s(x, y) <= lambda_y}.
std::vector<int> prediction_set(std::span<const double> score_row, const Thresholds& lambdas);

/// Sorted {s(x_i, label) : i in items}. Throws ValidationError for an empty item list.
std::vector<double> fixed_label_scores(const ScoreTable& table, std::span<const std::size_t> items,
                                       int label);

/// Sorted true-label scores s(x_i, y_i) of labeled items.
std::vector<double> true_label_scores(const ScoreTable& table, const Dataset& data,
                                      std::span<const std::size_t> items);

}  // namespace cfair
