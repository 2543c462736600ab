#include "cfair/gcp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfair/search.hpp"

namespace cfair {

double pinball_loss(double tau, double s, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("pinball quantile level must lie in (0, 1)");
  return s > tau ? (s - tau) * q : (tau - s) * (1.0 - q);
}

GroupMembership disjoint_membership(const GroupAssignment& groups) {
  GroupMembership m;
  m.names = groups.group_names;
  m.of_item.reserve(groups.of_item.size());
  for (int g : groups.of_item) m.of_item.push_back({g});
  return m;
}

GroupMembership attribute_membership(const Dataset& data) {
  GroupMembership m;
  std::vector<int> offset;
  for (const auto& a : data.attributes) {
    offset.push_back(static_cast<int>(m.names.size()));
    for (const auto& level : a.levels) m.names.push_back(a.name + "=" + level);
  }
  for (const auto& it : data.items) {
    std::vector<int> gs;
    for (std::size_t a = 0; a < it.groups.size(); ++a) gs.push_back(offset[a] + it.groups[a]);
    m.of_item.push_back(std::move(gs));
  }
  return m;
}

double GcpThreshold::threshold(std::span<const int> groups) const {
  double t = base;
  for (int g : groups) {
    if (g < 0 || static_cast<std::size_t>(g) >= offsets.size()) {
      throw ValidationError("unknown group id " + std::to_string(g) + " at inference time");
    }
    t += offsets[static_cast<std::size_t>(g)];
  }
  return t;
}

double gcp_objective(const GcpThreshold& model, std::span<const double> scores,
                     std::span<const std::vector<int>> memberships, double alpha) {
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum += pinball_loss(model.threshold(memberships[i]), scores[i], 1.0 - alpha);
  }
  return scores.empty() ? 0.0 : sum / static_cast<double>(scores.size());
}

GcpFit fit_batchgcp(std::span<const double> scores, std::span<const std::vector<int>> memberships,
                    std::vector<std::string> group_names, double base, double alpha,
                    const GcpOptions& options) {
  if (scores.size() != memberships.size()) throw ValidationError("scores and memberships differ in length");
  if (scores.empty()) throw ValidationError("BatchGCP needs calibration scores");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const std::size_t num_groups = group_names.size();
  std::vector<std::size_t> counts(num_groups, 0);
  for (const auto& gs : memberships) {
    for (int g : gs) {
      if (g < 0 || static_cast<std::size_t>(g) >= num_groups) throw ValidationError("membership references unknown group");
      ++counts[static_cast<std::size_t>(g)];
    }
  }
  for (std::size_t g = 0; g < num_groups; ++g) {
    if (counts[g] == 0) throw ValidationError("group '" + group_names[g] + "' has no calibration items");
  }

  GcpFit fit;
  fit.model.base = base;
  fit.model.offsets.assign(num_groups, 0.0);
  fit.model.group_names = std::move(group_names);

  const double n = static_cast<double>(scores.size());
  double mean_abs = 0.0;
  for (double s : scores) mean_abs += std::abs(s);
  mean_abs /= n;

  double current = gcp_objective(fit.model, scores, memberships, alpha);
  fit.objective = current;
  if (current == 0.0) {
    fit.converged = true;
    return fit;
  }
  const double step0 = current / (mean_abs > 0.0 ? mean_abs : 1.0);

  // grad_g * n = (covered members of g) - (1 - alpha) * |g|. Within `slack` of zero for every
  // group certifies stationarity up to the discreteness of one calibration point per membership.
  std::size_t slack = 1;
  for (const auto& gs : memberships) slack = std::max(slack, gs.size());
  std::vector<double> grad(num_groups);
  auto gradient_at = [&](const GcpThreshold& m) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double d = scores[i] <= m.threshold(memberships[i]) ? alpha : -(1.0 - alpha);
      for (int g : memberships[i]) grad[static_cast<std::size_t>(g)] += d;
    }
    bool stationary = true;
    for (double v : grad) stationary = stationary && std::abs(v) <= static_cast<double>(slack);
    return stationary;
  };

  constexpr std::size_t kWindow = 50;
  GcpThreshold iterate = fit.model;
  double window_start = fit.objective;
  bool stalled = false;
  for (std::size_t t = 1; t <= options.max_iterations; ++t) {
    if (gradient_at(iterate)) {
      fit.converged = true;
      fit.model.offsets = iterate.offsets;
      fit.objective = gcp_objective(iterate, scores, memberships, alpha);
      break;
    }
    const double step = step0 / std::sqrt(static_cast<double>(t));
    for (std::size_t g = 0; g < num_groups; ++g) iterate.offsets[g] -= step * grad[g] / n;

    const double next = gcp_objective(iterate, scores, memberships, alpha);
    fit.iterations = t;
    if (next <= fit.objective) {
      fit.objective = next;
      fit.model.offsets = iterate.offsets;
    }
    if (t % kWindow == 0) {
      if (window_start - fit.objective < options.tolerance) {
        stalled = true;
        break;
      }
      window_start = fit.objective;
    }
  }

  // Exact minimization along each offset: the q-quantile of that group's residuals.
  for (int pass = 0; pass < 2 && !fit.converged; ++pass) {
    for (std::size_t g = 0; g < num_groups; ++g) {
      std::vector<double> residual;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& gs = memberships[i];
        if (std::find(gs.begin(), gs.end(), static_cast<int>(g)) == gs.end()) continue;
        residual.push_back(scores[i] - fit.model.threshold(gs));
      }
      std::sort(residual.begin(), residual.end());
      const auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(residual.size()) - 1e-9));
      GcpThreshold trial = fit.model;
      trial.offsets[g] += residual[std::max<std::size_t>(k, 1) - 1];
      const double value = gcp_objective(trial, scores, memberships, alpha);
      if (value <= fit.objective) {
        fit.objective = value;
        fit.model = std::move(trial);
      }
    }
    fit.converged = gradient_at(fit.model);
  }
  if (!fit.converged) {
    fit.warnings.push_back(stalled ? "BatchGCP stopped improving before reaching a stationary point"
                                   : "BatchGCP subgradient descent hit the iteration cap (" +
                                         std::to_string(options.max_iterations) + ") before converging");
  }
  return fit;
}

GcpFit fit_batchgcp(const Cohort& calib, const ScoreTable& table, const GroupMembership& groups,
                    double alpha, const GcpOptions& options) {
  const double base = marginal_calibrator(calib, table, alpha).quantile();
  std::vector<double> scores;
  std::vector<std::vector<int>> memberships;
  for (std::size_t i : calib.items) {
    scores.push_back(table(i, static_cast<std::size_t>(calib.label_of(i))));
    memberships.push_back(groups.of_item.at(i));
  }
  return fit_batchgcp(scores, memberships, groups.names, base, alpha, options);
}

GcpEvaluation evaluate_batchgcp(const GcpThreshold& model, const Cohort& test, const ScoreTable& table,
                                const GroupMembership& groups, const FairnessSpec& spec) {
  std::vector<double> thresholds(table.rows(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i : test.items) thresholds[i] = model.threshold(groups.of_item.at(i));
  const Membership member = [&](std::size_t item, int label) {
    return table(item, static_cast<std::size_t>(label)) <= thresholds[item];
  };

  GcpEvaluation ev;
  ev.group_coverage.assign(groups.num_groups(), 0.0);
  ev.group_sizes.assign(groups.num_groups(), 0);
  std::vector<std::size_t> hits(groups.num_groups(), 0);
  for (std::size_t i : test.items) {
    const bool covered = member(i, test.label_of(i));
    for (int g : groups.of_item[i]) {
      ++ev.group_sizes[static_cast<std::size_t>(g)];
      if (covered) ++hits[static_cast<std::size_t>(g)];
    }
  }
  for (std::size_t g = 0; g < groups.num_groups(); ++g) {
    if (ev.group_sizes[g] > 0) {
      ev.group_coverage[g] = static_cast<double>(hits[g]) / static_cast<double>(ev.group_sizes[g]);
    }
  }
  FairnessSpec dp = spec;
  dp.metric = Metric::DemographicParity;
  dp.classwise = false;
  ev.sets = evaluate_sets(test, member, dp);
  ev.demographic_parity = evaluate_fairness(test, member, dp);
  return ev;
}

}  // namespace cfair
