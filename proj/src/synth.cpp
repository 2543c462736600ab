#include "cfair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cfair/seed.hpp"

namespace cfair {

void SynthConfig::validate() const {
  if (n == 0) throw ValidationError("synth: n must be positive");
  if (num_classes < 2) throw ValidationError("synth: need at least two classes");
  if (attributes.empty()) throw ValidationError("synth: need at least one sensitive attribute");
  if (!(temperature > 0.0)) throw ValidationError("synth: temperature must be positive");
  if (!(noise >= 0.0)) throw ValidationError("synth: noise must be nonnegative");
  if (!(unlabeled_fraction >= 0.0 && unlabeled_fraction < 1.0)) {
    throw ValidationError("synth: unlabeled_fraction must lie in [0, 1)");
  }
  for (const auto& a : attributes) {
    if (a.proportions.empty()) throw ValidationError("synth: attribute '" + a.name + "' has no groups");
    if (a.bias.size() != a.proportions.size()) {
      throw ValidationError("synth: attribute '" + a.name + "' needs one bias per group");
    }
    double sum = 0.0;
    for (double p : a.proportions) {
      if (!(p > 0.0)) throw ValidationError("synth: attribute '" + a.name + "' has an empty group");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("synth: group proportions of '" + a.name + "' must sum to 1");
    }
  }
  if (!label_priors.empty()) {
    if (label_priors.size() != attributes.front().proportions.size()) {
      throw ValidationError("synth: need one label prior per group of the first attribute");
    }
    for (const auto& row : label_priors) {
      if (row.size() != static_cast<std::size_t>(num_classes)) {
        throw ValidationError("synth: label prior has the wrong number of classes");
      }
      const double s = std::accumulate(row.begin(), row.end(), 0.0);
      if (std::abs(s - 1.0) > 1e-9) throw ValidationError("synth: label priors must sum to 1");
    }
  }
  if (graph && !(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
    throw ValidationError("synth: edge probabilities must lie in [0, 1]");
  }
}

Dataset generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(derive_seed(config.seed, "synth"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> uniform_label(0, config.num_classes - 1);
  std::vector<std::discrete_distribution<int>> level_dists;
  for (const auto& a : config.attributes) {
    level_dists.emplace_back(a.proportions.begin(), a.proportions.end());
  }
  std::vector<std::discrete_distribution<int>> prior_dists;
  for (const auto& row : config.label_priors) prior_dists.emplace_back(row.begin(), row.end());

  Dataset data;
  data.num_classes = config.num_classes;
  for (const auto& a : config.attributes) {
    Attribute at{a.name, {}};
    for (std::size_t l = 0; l < a.proportions.size(); ++l) at.levels.push_back("g" + std::to_string(l));
    data.attributes.push_back(std::move(at));
  }

  const auto k = static_cast<std::size_t>(config.num_classes);
  Matrix probs(config.n, k);
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < config.n; ++i) {
    Item it;
    it.id = std::to_string(i);
    double bias = 0.0;
    for (std::size_t a = 0; a < config.attributes.size(); ++a) {
      const int level = level_dists[a](rng);
      it.groups.push_back(level);
      bias += config.attributes[a].bias[static_cast<std::size_t>(level)];
    }
    const int y = prior_dists.empty() ? uniform_label(rng)
                                      : prior_dists[static_cast<std::size_t>(it.groups.front())](rng);
    for (std::size_t c = 0; c < k; ++c) {
      logits[c] = config.noise * gauss(rng);
      if (static_cast<int>(c) == y) logits[c] += config.signal + bias;
      logits[c] /= config.temperature;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(logits[c] - top);
    for (std::size_t c = 0; c < k; ++c) probs(i, c) = std::exp(logits[c] - top) / z;
    const bool hidden = config.unlabeled_fraction > 0.0 && unit(rng) < config.unlabeled_fraction;
    if (!hidden) it.label = y;
    data.items.push_back(std::move(it));
  }
  data.probs = ProbabilityMatrix(std::move(probs));

  if (config.graph) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < config.n; ++u) {
      for (std::size_t v = u + 1; v < config.n; ++v) {
        const bool same = data.items[u].groups.front() == data.items[v].groups.front();
        if (unit(rng) < (same ? config.p_in : config.p_out)) edges.emplace_back(u, v);
      }
    }
    data.graph = GraphStructure::from_edges(config.n, edges);
  }
  data.validate();
  return data;
}

namespace {

// Deliberately naive: every quantity is recounted from scratch for each candidate.
bool oracle_in_slice(Metric m, int item_group, int item_label, int g, int label) {
  if (item_group != g) return false;
  if (m == Metric::EqualOpportunity) return item_label == label;
  if (m == Metric::PredictiveEquality) return item_label != label;
  return true;
}

bool oracle_coverage_check(const ScoreTable& table, const Dataset& data,
                           const std::vector<int>& groups_of_item, std::size_t num_groups,
                           const std::vector<std::size_t>& calib, const FairnessSpec& spec,
                           Metric component, double lambda) {
  for (int label : spec.labels.positive()) {
    double a_min = std::numeric_limits<double>::infinity();
    double a_max = -std::numeric_limits<double>::infinity();
    std::size_t compared = 0;
    for (std::size_t g = 0; g < num_groups; ++g) {
      std::size_t m = 0;
      std::size_t hits = 0;
      for (std::size_t i : calib) {
        if (!oracle_in_slice(component, groups_of_item[i], *data.items[i].label, static_cast<int>(g), label)) {
          continue;
        }
        ++m;
        if (table(i, static_cast<std::size_t>(label)) <= lambda) ++hits;
      }
      if (m == 0) {
        if (spec.degenerate == DegeneratePolicy::Error) {
          throw DegenerateSliceError(static_cast<int>(g), label, "oracle: empty slice");
        }
        continue;
      }
      const double denom = static_cast<double>(m + 1);
      const double cov = static_cast<double>(hits) / denom;
      const double width = 1.0 / denom;
      a_min = std::min(a_min, cov - width);
      a_max = std::max(a_max, cov);
      ++compared;
    }
    if (compared == 0) continue;
    if (spec.metric == Metric::DisparateImpact) {
      double num = 1.0 - a_max;
      double den = 1.0 - a_min;
      if (spec.ratio_variant == RatioVariant::Coverage) {
        num = a_min > 0.0 ? a_min : 0.0;
        den = a_max;
      }
      const double ratio = den == 0.0 ? (num == 0.0 ? 1.0 : 0.0) : num / den;
      if (ratio < spec.closeness) return false;
    } else if (a_max - a_min > spec.closeness) {
      return false;
    }
  }
  return true;
}

bool oracle_proxy_check(const ScoreTable& table, const Dataset& data,
                        const std::vector<int>& groups_of_item, std::size_t num_groups,
                        const std::vector<std::size_t>& calib, const FairnessSpec& spec, double lambda) {
  for (int label : spec.labels.positive()) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < num_groups; ++g) {
      std::size_t members = 0, with_label = 0, in_set = 0, in_set_with_label = 0;
      for (std::size_t i : calib) {
        if (groups_of_item[i] != static_cast<int>(g)) continue;
        ++members;
        const bool correct = *data.items[i].label == label;
        if (correct) ++with_label;
        if (table(i, static_cast<std::size_t>(label)) <= lambda) {
          ++in_set;
          if (correct) ++in_set_with_label;
        }
      }
      if (members == 0) {
        if (spec.degenerate == DegeneratePolicy::Error) {
          throw DegenerateSliceError(static_cast<int>(g), label, "oracle: empty group");
        }
        continue;
      }
      if (in_set == 0) return false;
      const double proxy = static_cast<double>(in_set_with_label) / static_cast<double>(in_set) -
                           static_cast<double>(with_label) / static_cast<double>(members);
      lo = std::min(lo, proxy);
      hi = std::max(hi, proxy);
    }
    if (hi - lo > spec.closeness) return false;
  }
  return true;
}

}  // namespace

OracleResult oracle_scan(const ScoreTable& table, const Dataset& data,
                         const std::vector<int>& groups_of_item, std::size_t num_groups,
                         const std::vector<std::size_t>& calib_items, const FairnessSpec& spec) {
  std::vector<double> marginal;
  for (std::size_t i : calib_items) marginal.push_back(table(i, static_cast<std::size_t>(*data.items[i].label)));
  std::sort(marginal.begin(), marginal.end());
  const std::size_t n = marginal.size();
  const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n + 1) * (1.0 - spec.alpha) - 1e-9));
  if (n == 0 || k > n) throw InsufficientCalibrationError(n, k);
  const double qhat = marginal[k == 0 ? 0 : k - 1];

  double top = marginal.back();
  std::vector<double> pool(marginal);
  for (std::size_t i : calib_items) {
    for (int label : spec.labels.positive()) {
      const double s = table(i, static_cast<std::size_t>(label));
      pool.push_back(s);
      top = std::max(top, s);
    }
  }
  OracleResult out;
  out.candidates.push_back(qhat);
  out.candidates.push_back(top);
  for (double s : pool) {
    if (s >= qhat && s <= top) out.candidates.push_back(s);
  }
  std::sort(out.candidates.begin(), out.candidates.end());
  out.candidates.erase(std::unique(out.candidates.begin(), out.candidates.end()), out.candidates.end());

  for (double lambda : out.candidates) {
    bool ok = true;
    switch (spec.metric) {
      case Metric::EqualizedOdds:
        ok = oracle_coverage_check(table, data, groups_of_item, num_groups, calib_items, spec,
                                   Metric::EqualOpportunity, lambda) &&
             oracle_coverage_check(table, data, groups_of_item, num_groups, calib_items, spec,
                                   Metric::PredictiveEquality, lambda);
        break;
      case Metric::PredictiveParityProxy:
        ok = oracle_proxy_check(table, data, groups_of_item, num_groups, calib_items, spec, lambda);
        break;
      default:
        ok = oracle_coverage_check(table, data, groups_of_item, num_groups, calib_items, spec,
                                   spec.metric, lambda);
        break;
    }
    out.verdicts.push_back(ok);
    if (ok && !out.lambda_opt) out.lambda_opt = lambda;
  }
  return out;
}

}  // namespace cfair
