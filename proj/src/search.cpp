#include "cfair/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace cfair {

ThresholdSearchSpace build_lambda_space(const ConformalCalibrator& marginal,
                                        std::span<const double> fixed_label_scores,
                                        std::optional<std::span<const double>> user_grid) {
  ThresholdSearchSpace space;
  space.qhat = marginal.quantile();
  std::vector<double> c;
  if (user_grid) {
    space.origin = SpaceOrigin::UserSupplied;
    for (double v : *user_grid) {
      if (!std::isfinite(v)) throw ValidationError("lambda grid entries must be finite");
      if (v >= space.qhat) c.push_back(v);
    }
  } else {
    double top = marginal.max_score();
    for (double v : fixed_label_scores) top = std::max(top, v);
    c.push_back(space.qhat);
    c.push_back(top);
    for (double v : marginal.scores()) {
      if (v >= space.qhat && v <= top) c.push_back(v);
    }
    for (double v : fixed_label_scores) {
      if (v >= space.qhat && v <= top) c.push_back(v);
    }
  }
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  space.candidates = std::move(c);
  return space;
}

ConformalCalibrator marginal_calibrator(const Cohort& cohort, const ScoreTable& table, double alpha) {
  if (cohort.items.empty()) throw ValidationError("calibration cohort is empty");
  return ConformalCalibrator(true_label_scores(table, *cohort.data, cohort.items), alpha);
}

std::vector<double> positive_label_scores(const Cohort& cohort, const ScoreTable& table,
                                          const LabelSet& labels) {
  std::vector<double> out;
  out.reserve(cohort.items.size() * labels.positive().size());
  for (std::size_t i : cohort.items) {
    for (int y : labels.positive()) out.push_back(table(i, static_cast<std::size_t>(y)));
  }
  return out;
}

namespace {

ThresholdSearchSpace derive_space(const Cohort& cohort, const ScoreTable& table,
                                  const FairnessSpec& spec,
                                  const std::optional<std::vector<double>>& grid) {
  spec.validate();
  const auto marginal = marginal_calibrator(cohort, table, spec.alpha);
  const auto fixed = positive_label_scores(cohort, table, spec.labels);
  if (grid) return build_lambda_space(marginal, fixed, std::span<const double>(*grid));
  return build_lambda_space(marginal, fixed);
}

double excess(const DisparityReport& r) {
  for (const auto& l : r.labels) {
    if (!l.missing_groups.empty()) return std::numeric_limits<double>::infinity();
  }
  return r.mode == ComparisonMode::Ratio ? r.closeness - r.worst_disparity
                                         : r.worst_disparity - r.closeness;
}

}  // namespace

FairnessProblem::FairnessProblem(const Cohort& cohort, const ScoreTable& table, FairnessSpec spec,
                                 std::optional<std::vector<double>> user_grid)
    : FairnessProblem(cohort, table, spec, derive_space(cohort, table, spec, user_grid)) {}

FairnessProblem::FairnessProblem(const Cohort& cohort, const ScoreTable& table, FairnessSpec spec,
                                 ThresholdSearchSpace space)
    : cohort_(cohort),
      table_(&table),
      spec_(std::move(spec)),
      space_(std::move(space)),
      slices_(cohort_, table, spec_) {
  spec_.validate();
}

SatisfyResult satisfy_lambda(const FairnessProblem& problem, const Thresholds& lambdas) {
  SatisfyResult r;
  r.report = evaluate_fairness(problem.slices(), problem.spec(), lambdas);
  r.satisfied = r.report.satisfied;
  return r;
}

SatisfyResult satisfy_lambda(const FairnessProblem& problem, double lambda) {
  return satisfy_lambda(problem, Thresholds(lambda));
}

namespace {

ThresholdResult scan(const FairnessProblem& problem, const SearchOptions& options) {
  const auto& cands = problem.space().candidates;
  ThresholdResult result;
  result.qhat = problem.qhat();
  result.candidates = cands.size();

  if (!options.exhaustive && options.threads <= 1) {
    double best_excess = std::numeric_limits<double>::infinity();
    for (double lambda : cands) {
      ++result.tested;
      auto s = satisfy_lambda(problem, lambda);
      if (s.satisfied) {
        result.status = SearchStatus::Found;
        result.lambda = Thresholds(lambda);
        result.report = std::move(s.report);
        result.best_candidate.reset();
        return result;
      }
      const double e = excess(s.report);
      if (!result.best_candidate || e < best_excess) {
        best_excess = e;
        result.best_candidate = lambda;
        result.report = std::move(s.report);
      }
    }
    return result;
  }

  std::vector<CandidateVerdict> verdicts(cands.size());
  std::vector<double> excesses(cands.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t j = begin; j < cands.size(); j += stride) {
      const auto s = satisfy_lambda(problem, cands[j]);
      verdicts[j] = {cands[j], s.satisfied, s.report.worst_disparity};
      excesses[j] = excess(s.report);
    }
  };
  const unsigned threads = std::max(1U, options.threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  result.tested = cands.size();
  std::size_t count = 0;
  std::optional<std::size_t> first;
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < verdicts.size(); ++j) {
    if (verdicts[j].satisfied) {
      ++count;
      if (!first) first = j;
    }
    if (!best || excesses[j] < excesses[*best]) best = j;
  }
  result.satisfying_count = count;
  if (first) {
    result.status = SearchStatus::Found;
    result.lambda = Thresholds(cands[*first]);
    result.report = satisfy_lambda(problem, cands[*first]).report;
  } else if (best) {
    result.best_candidate = cands[*best];
    result.report = satisfy_lambda(problem, cands[*best]).report;
  }
  result.verdicts = std::move(verdicts);
  return result;
}

}  // namespace

ThresholdResult find_lambda_opt(const FairnessProblem& problem, const SearchOptions& options) {
  return scan(problem, options);
}

ThresholdResult find_classwise_lambdas(const FairnessProblem& problem, const SearchOptions& options) {
  const auto& spec = problem.spec();
  const int k = spec.labels.num_classes();
  ThresholdResult result;
  result.qhat = problem.qhat();
  result.candidates = problem.space().candidates.size();
  std::vector<double> lambdas(static_cast<std::size_t>(k), problem.qhat());
  bool all_found = true;
  std::size_t satisfying = 0;
  bool counted = true;
  for (int label : spec.labels.positive()) {
    FairnessSpec sub = spec;
    sub.labels = spec.labels.restricted_to(label);
    sub.classwise = false;
    const FairnessProblem sub_problem(problem.cohort(), problem.table(), sub, problem.space());
    const auto r = scan(sub_problem, options);
    ClassSearch cs;
    cs.label = label;
    cs.status = r.status;
    cs.tested = r.tested;
    cs.satisfying_count = r.satisfying_count;
    cs.best_candidate = r.best_candidate;
    if (r.found()) {
      cs.lambda = r.lambda.at(label);
      lambdas[static_cast<std::size_t>(label)] = *cs.lambda;
    } else {
      all_found = false;
      if (r.best_candidate) lambdas[static_cast<std::size_t>(label)] = *r.best_candidate;
    }
    result.tested += r.tested;
    if (r.satisfying_count) satisfying += *r.satisfying_count; else counted = false;
    result.per_class.push_back(cs);
  }
  if (counted) result.satisfying_count = satisfying;
  const Thresholds vec(lambdas);
  result.report = satisfy_lambda(problem, vec).report;
  if (all_found) {
    result.status = SearchStatus::Found;
    result.lambda = vec;
  }
  return result;
}

ThresholdResult calibrate(const FairnessProblem& problem, const SearchOptions& options) {
  return problem.spec().classwise ? find_classwise_lambdas(problem, options)
                                  : find_lambda_opt(problem, options);
}

}  // namespace cfair
