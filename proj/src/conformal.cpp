#include "cfair/conformal.hpp"

#include <algorithm>
#include <cmath>

namespace cfair {

std::size_t conformal_rank(std::size_t n, double alpha) {
  // The 1e-9 guard keeps products such as 10 * 0.9 from rounding up past an integer.
  const double raw = static_cast<double>(n + 1) * (1.0 - alpha);
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

ConformalCalibrator::ConformalCalibrator(std::vector<double> scores, double alpha)
    : scores_(std::move(scores)), alpha_(alpha) {
  if (scores_.empty()) throw ValidationError("calibrator needs at least one score");
  if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  std::sort(scores_.begin(), scores_.end());
}

double ConformalCalibrator::quantile() const {
  const std::size_t k = conformal_rank(scores_.size(), alpha_);
  if (k > scores_.size()) throw InsufficientCalibrationError(scores_.size(), k);
  return scores_[k == 0 ? 0 : k - 1];
}

std::size_t ConformalCalibrator::count_at_most(double lambda) const {
  return static_cast<std::size_t>(std::upper_bound(scores_.begin(), scores_.end(), lambda) -
                                  scores_.begin());
}

CoverageInterval ConformalCalibrator::inverse_quantile(double lambda) const {
  return coverage_interval(count_at_most(lambda), scores_.size());
}

CoverageInterval coverage_interval(std::size_t count, std::size_t n) {
  const double denom = static_cast<double>(n + 1);
  const double lower = static_cast<double>(count) / denom;
  const double width = 1.0 / denom;
  return {lower, static_cast<double>(count + 1) / denom, width};
}

std::vector<int> prediction_set(std::span<const double> score_row, double lambda) {
  std::vector<int> out;
  for (std::size_t y = 0; y < score_row.size(); ++y) {
    if (score_row[y] <= lambda) out.push_back(static_cast<int>(y));
  }
  return out;
}

std::vector<int> prediction_set(std::span<const double> score_row, const Thresholds& lambdas) {
  std::vector<int> out;
  for (std::size_t y = 0; y < score_row.size(); ++y) {
    if (score_row[y] <= lambdas.at(static_cast<int>(y))) out.push_back(static_cast<int>(y));
  }
  return out;
}

std::vector<double> fixed_label_scores(const ScoreTable& table, std::span<const std::size_t> items,
                                       int label) {
  if (items.empty()) throw ValidationError("degenerate slice: no items for fixed-label scores");
  std::vector<double> out;
  out.reserve(items.size());
  for (std::size_t i : items) out.push_back(table(i, static_cast<std::size_t>(label)));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> true_label_scores(const ScoreTable& table, const Dataset& data,
                                      std::span<const std::size_t> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (std::size_t i : items) {
    const auto& label = data.items[i].label;
    if (!label) throw ValidationError("item '" + data.items[i].id + "' is unlabeled");
    out.push_back(table(i, static_cast<std::size_t>(*label)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cfair
