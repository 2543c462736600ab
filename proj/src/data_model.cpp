#include "cfair/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "cfair/seed.hpp"

namespace cfair {

ProbabilityMatrix::ProbabilityMatrix(Matrix m, std::span<const std::string> ids) : m_(std::move(m)) {
  auto name = [&](std::size_t i) {
    return i < ids.size() ? "item '" + ids[i] + "'" : "row " + std::to_string(i);
  };
  for (std::size_t i = 0; i < m_.rows(); ++i) {
    double sum = 0.0;
    for (double p : m_.row(i)) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        throw ValidationError("probability out of [0,1] or not finite for " + name(i));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ValidationError("probabilities of " + name(i) + " sum to " + std::to_string(sum) +
                            ", expected 1");
    }
  }
}

LabelSet::LabelSet(int num_classes, std::vector<int> positive)
    : num_classes_(num_classes), positive_(std::move(positive)) {
  if (num_classes_ <= 0) throw ValidationError("number of classes must be positive");
  if (positive_.empty()) throw ValidationError("positive label set is empty");
  std::set<int> seen;
  for (int y : positive_) {
    if (y < 0 || y >= num_classes_) {
      throw ValidationError("positive label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes_) + ")");
    }
    if (!seen.insert(y).second) {
      throw ValidationError("duplicate positive label " + std::to_string(y));
    }
  }
}

LabelSet LabelSet::all(int num_classes) {
  std::vector<int> labels(static_cast<std::size_t>(std::max(num_classes, 0)));
  std::iota(labels.begin(), labels.end(), 0);
  return LabelSet(num_classes, std::move(labels));
}

bool LabelSet::is_positive(int label) const {
  return std::find(positive_.begin(), positive_.end(), label) != positive_.end();
}

GraphStructure GraphStructure::from_edges(
    std::size_t num_nodes, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::set<std::size_t>> adj(num_nodes);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (u == v) continue;
    adj[u].insert(v);
    adj[v].insert(u);
  }
  std::vector<std::vector<std::size_t>> out(num_nodes);
  for (std::size_t v = 0; v < num_nodes; ++v) out[v].assign(adj[v].begin(), adj[v].end());
  return GraphStructure(std::move(out));
}

GraphStructure::GraphStructure(std::vector<std::vector<std::size_t>> adjacency)
    : adjacency_(std::move(adjacency)) {
  const std::size_t n = adjacency_.size();
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u : adjacency_[v]) {
      if (u >= n) throw ValidationError("neighbor id " + std::to_string(u) + " out of range");
      const auto& back = adjacency_[u];
      if (std::find(back.begin(), back.end(), v) == back.end()) {
        throw ValidationError("adjacency not symmetric between " + std::to_string(v) + " and " +
                              std::to_string(u));
      }
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> GraphStructure::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t v = 0; v < adjacency_.size(); ++v) {
    for (std::size_t u : adjacency_[v]) {
      if (v < u) out.emplace_back(v, u);
    }
  }
  return out;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Calib: return "calib";
    case Split::Test: return "test";
    case Split::Unassigned: return "";
  }
  return "";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "calib") return Split::Calib;
  if (s == "test") return Split::Test;
  if (s.empty() || s == "none") return Split::Unassigned;
  throw ValidationError("unknown split tag '" + std::string(s) + "'");
}

std::vector<std::string> Dataset::item_ids() const {
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (const auto& it : items) ids.push_back(it.id);
  return ids;
}

std::vector<std::size_t> Dataset::indices_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].split == s) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::labeled_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].label) out.push_back(i);
  }
  return out;
}

void Dataset::validate() const {
  if (num_classes <= 0) throw ValidationError("dataset declares no classes");
  if (probs.rows() != items.size()) {
    throw ValidationError("probability matrix has " + std::to_string(probs.rows()) +
                          " rows for " + std::to_string(items.size()) + " items");
  }
  if (!items.empty() && probs.num_classes() != static_cast<std::size_t>(num_classes)) {
    throw ValidationError("probability matrix has " + std::to_string(probs.num_classes()) +
                          " columns, expected " + std::to_string(num_classes));
  }
  std::unordered_set<std::string> ids;
  for (const auto& it : items) {
    if (!ids.insert(it.id).second) throw ValidationError("duplicate item id '" + it.id + "'");
    if (it.label && (*it.label < 0 || *it.label >= num_classes)) {
      throw ValidationError("item '" + it.id + "' has label " + std::to_string(*it.label) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (!it.label && it.split != Split::Unassigned) {
      throw ValidationError("unlabeled item '" + it.id + "' cannot carry a split tag");
    }
    if (it.groups.size() != attributes.size()) {
      throw ValidationError("item '" + it.id + "' has " + std::to_string(it.groups.size()) +
                            " group ids for " + std::to_string(attributes.size()) + " attributes");
    }
    for (std::size_t a = 0; a < attributes.size(); ++a) {
      if (it.groups[a] < 0 || static_cast<std::size_t>(it.groups[a]) >= attributes[a].levels.size()) {
        throw ValidationError("item '" + it.id + "' has invalid group id for attribute '" +
                              attributes[a].name + "'");
      }
    }
  }
  if (graph && graph->num_nodes() != items.size()) {
    throw ValidationError("graph has " + std::to_string(graph->num_nodes()) + " nodes for " +
                          std::to_string(items.size()) + " items");
  }
}

GroupAssignment make_group_assignment(const Dataset& data, const GroupSelection& selection) {
  if (data.attributes.empty()) throw ValidationError("dataset has no sensitive attributes");
  GroupAssignment out;
  out.of_item.resize(data.items.size());
  if (!selection.intersectional) {
    std::size_t a = 0;
    if (selection.attribute) {
      auto it = std::find_if(data.attributes.begin(), data.attributes.end(),
                             [&](const Attribute& at) { return at.name == *selection.attribute; });
      if (it == data.attributes.end()) {
        throw ValidationError("unknown sensitive attribute '" + *selection.attribute + "'");
      }
      a = static_cast<std::size_t>(it - data.attributes.begin());
    }
    out.attribute_names = {data.attributes[a].name};
    out.group_names = data.attributes[a].levels;
    for (std::size_t i = 0; i < data.items.size(); ++i) out.of_item[i] = data.items[i].groups[a];
    return out;
  }
  // Mixed radix, first attribute most significant.
  std::vector<std::string> names = {""};
  for (const auto& at : data.attributes) {
    out.attribute_names.push_back(at.name);
    std::vector<std::string> next;
    for (const auto& prefix : names) {
      for (const auto& level : at.levels) next.push_back(prefix.empty() ? level : prefix + "|" + level);
    }
    names = std::move(next);
  }
  out.group_names = std::move(names);
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    int id = 0;
    for (std::size_t a = 0; a < data.attributes.size(); ++a) {
      id = id * static_cast<int>(data.attributes[a].levels.size()) + data.items[i].groups[a];
    }
    out.of_item[i] = id;
  }
  return out;
}

namespace {

struct MetricName {
  Metric metric;
  std::string_view name;
};

constexpr std::array<MetricName, 6> kMetricNames = {{
    {Metric::DemographicParity, "demographic_parity"},
    {Metric::EqualOpportunity, "equal_opportunity"},
    {Metric::PredictiveEquality, "predictive_equality"},
    {Metric::EqualizedOdds, "equalized_odds"},
    {Metric::DisparateImpact, "disparate_impact"},
    {Metric::PredictiveParityProxy, "predictive_parity_proxy"},
}};

}  // namespace

std::string_view to_string(Metric m) {
  for (const auto& e : kMetricNames) {
    if (e.metric == m) return e.name;
  }
  return "unknown";
}

Metric parse_metric(std::string_view s) {
  for (const auto& e : kMetricNames) {
    if (e.name == s) return e.metric;
  }
  throw ValidationError("unknown fairness metric '" + std::string(s) + "'");
}

std::string_view to_string(ComparisonMode m) {
  return m == ComparisonMode::Ratio ? "ratio" : "difference";
}

std::string_view to_string(RatioVariant v) {
  return v == RatioVariant::Coverage ? "coverage" : "miscoverage";
}

RatioVariant parse_ratio_variant(std::string_view s) {
  if (s == "miscoverage") return RatioVariant::Miscoverage;
  if (s == "coverage") return RatioVariant::Coverage;
  throw ValidationError("unknown ratio variant '" + std::string(s) + "'");
}

std::string_view to_string(DegeneratePolicy p) {
  return p == DegeneratePolicy::Error ? "error" : "skip-with-warning";
}

DegeneratePolicy parse_degenerate_policy(std::string_view s) {
  if (s == "error") return DegeneratePolicy::Error;
  if (s == "skip-with-warning") return DegeneratePolicy::SkipWithWarning;
  throw ValidationError("unknown degenerate-slice policy '" + std::string(s) + "'");
}

void FairnessSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (!(closeness > 0.0 && closeness <= 1.0)) throw ValidationError("closeness c must lie in (0, 1]");
  if (labels.num_classes() <= 0) throw ValidationError("fairness spec has no label set");
}

bool passes_filter(Metric metric, int item_group, int item_label, int group, int label) {
  if (item_group != group) return false;
  switch (metric) {
    case Metric::DemographicParity:
    case Metric::DisparateImpact:
    case Metric::PredictiveParityProxy:
      return true;
    case Metric::EqualOpportunity:
      return item_label == label;
    case Metric::PredictiveEquality:
      return item_label != label;
    case Metric::EqualizedOdds:
      break;
  }
  throw ValidationError("equalized odds is composite and has no single filter");
}

std::vector<std::size_t> filter_items(const Dataset& data, const GroupAssignment& groups,
                                      std::span<const std::size_t> pool, Metric metric, int group,
                                      int label) {
  std::vector<std::size_t> out;
  for (std::size_t i : pool) {
    const auto& it = data.items[i];
    if (!it.label) throw ValidationError("item '" + it.id + "' is unlabeled");
    if (passes_filter(metric, groups.of_item[i], *it.label, group, label)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> filter_calibration(const Dataset& data, const GroupAssignment& groups,
                                            Metric metric, int group, int label) {
  const auto pool = data.indices_in(Split::Calib);
  return filter_items(data, groups, pool, metric, group, label);
}

Dataset stratified_split(Dataset data, const SplitFractions& fractions, std::uint64_t seed) {
  double total = 0.0;
  std::size_t positive_splits = 0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ValidationError("split fractions must be nonnegative");
    total += f;
    if (f > 0.0) ++positive_splits;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.num_classes));
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    auto& it = data.items[i];
    it.split = Split::Unassigned;
    if (it.label) by_class[static_cast<std::size_t>(*it.label)].push_back(i);
  }
  std::string too_small;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].size() < positive_splits) {
      too_small += (too_small.empty() ? "" : ", ") + std::to_string(k) + " (" +
                   std::to_string(by_class[k].size()) + " items)";
    }
  }
  if (!too_small.empty()) {
    throw ValidationError("classes with fewer items than splits: " + too_small);
  }

  constexpr std::array<Split, 4> kOrder = {Split::Train, Split::Valid, Split::Calib, Split::Test};
  std::mt19937_64 rng(derive_seed(seed, "split"));
  std::array<std::size_t, 4> allocated{};
  std::size_t seen = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const double n_c = static_cast<double>(members.size());
    std::array<std::size_t, 4> count{};
    std::array<double, 4> frac{};
    std::size_t used = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double raw = fractions[j] * n_c;
      count[j] = static_cast<std::size_t>(std::floor(raw + 1e-9));
      frac[j] = std::max(0.0, raw - static_cast<double>(count[j]));
      used += count[j];
    }
    seen += members.size();
    // Remainders go to the largest fractional parts; ties favour the split furthest below its
    // running global target so totals stay balanced across classes.
    std::array<std::size_t, 4> order = {0, 1, 2, 3};
    std::array<double, 4> deficit{};
    for (std::size_t j = 0; j < 4; ++j) {
      deficit[j] = fractions[j] * static_cast<double>(seen) -
                   static_cast<double>(allocated[j] + count[j]);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      return deficit[a] > deficit[b];
    });
    std::size_t remaining = members.size() - std::min(used, members.size());
    for (std::size_t j : order) {
      if (remaining == 0) break;
      if (fractions[j] <= 0.0) continue;
      ++count[j];
      --remaining;
    }
    std::size_t pos = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t c = 0; c < count[j] && pos < members.size(); ++c) {
        data.items[members[pos++]].split = kOrder[j];
      }
      allocated[j] += count[j];
    }
  }
  return data;
}

}  // namespace cfair
