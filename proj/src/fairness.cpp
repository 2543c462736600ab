#include "cfair/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace cfair {

Cohort make_cohort(const Dataset& data, const GroupAssignment& groups, Split split) {
  return make_cohort(data, groups, data.indices_in(split));
}

Cohort make_cohort(const Dataset& data, const GroupAssignment& groups, std::vector<std::size_t> items) {
  if (groups.of_item.size() != data.items.size()) {
    throw ValidationError("group assignment does not match the dataset");
  }
  for (std::size_t i : items) {
    if (i >= data.items.size()) throw ValidationError("cohort item index out of range");
    if (!data.items[i].label) {
      throw ValidationError("item '" + data.items[i].id + "' is unlabeled and cannot join a cohort");
    }
  }
  return Cohort{&data, &groups, std::move(items)};
}

Membership score_membership(const ScoreTable& table, const Thresholds& lambdas) {
  return [&table, lambdas](std::size_t item, int label) {
    return table(item, static_cast<std::size_t>(label)) <= lambdas.at(label);
  };
}

std::vector<Metric> component_filters(Metric metric) {
  switch (metric) {
    case Metric::EqualizedOdds:
      return {Metric::EqualOpportunity, Metric::PredictiveEquality};
    case Metric::DisparateImpact:
    case Metric::PredictiveParityProxy:
      return {Metric::DemographicParity};
    default:
      return {metric};
  }
}

namespace {

std::string slice_name(Metric component, int group, int label) {
  return std::string(to_string(component)) + " slice (g=" + std::to_string(group) +
         ", y=" + std::to_string(label) + ")";
}

void handle_empty(DegeneratePolicy policy, Metric component, int group, int label,
                  std::vector<std::string>* warnings) {
  if (policy == DegeneratePolicy::Error) {
    throw DegenerateSliceError(group, label,
                               std::string("no items pass the ") + std::string(to_string(component)) +
                                   " filter");
  }
  if (warnings) warnings->push_back(slice_name(component, group, label) + " is empty; skipped");
}

std::size_t count_at_most(const std::vector<double>& sorted, double lambda) {
  return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), lambda) -
                                  sorted.begin());
}

}  // namespace

SliceSet::SliceSet(const Cohort& cohort, const ScoreTable& table, const FairnessSpec& spec) {
  const int num_groups = static_cast<int>(cohort.groups->num_groups());
  auto build = [&](Metric component, int label, int group) {
    GroupLabelSlice s;
    s.component = component;
    s.group = group;
    s.label = label;
    for (std::size_t i : cohort.items) {
      if (passes_filter(component, cohort.group_of(i), cohort.label_of(i), group, label)) {
        s.items.push_back(i);
        s.scores.push_back(table(i, static_cast<std::size_t>(label)));
      }
    }
    std::sort(s.scores.begin(), s.scores.end());
    return s;
  };
  for (Metric component : component_filters(spec.metric)) {
    for (int label : spec.labels.positive()) {
      for (int g = 0; g < num_groups; ++g) {
        auto s = build(component, label, g);
        if (s.items.empty()) handle_empty(spec.degenerate, component, g, label, &warnings_);
        slices_.push_back(std::move(s));
      }
    }
  }
  if (spec.metric == Metric::PredictiveParityProxy) {
    for (int label : spec.labels.positive()) {
      for (int g = 0; g < num_groups; ++g) {
        label_matched_.push_back(build(Metric::EqualOpportunity, label, g));
      }
    }
  }
}

std::vector<SliceCoverage> SliceSet::coverages(const Thresholds& lambdas) const {
  std::vector<SliceCoverage> out;
  out.reserve(slices_.size());
  for (const auto& s : slices_) {
    SliceCoverage c;
    c.component = s.component;
    c.group = s.group;
    c.label = s.label;
    c.size = s.items.size();
    if (s.items.empty()) {
      c.degenerate = true;
    } else {
      c.hits = count_at_most(s.scores, lambdas.at(s.label));
      c.coverage = coverage_interval(c.hits, c.size);
    }
    out.push_back(c);
  }
  return out;
}

std::vector<SliceCoverage> slice_coverages(const ScoreTable& table, const Cohort& cohort,
                                           const FairnessSpec& spec, const Thresholds& lambdas) {
  return SliceSet(cohort, table, spec).coverages(lambdas);
}

std::vector<SliceCoverage> slice_coverages_from_sets(const Cohort& cohort, const Membership& member,
                                                     const FairnessSpec& spec,
                                                     std::vector<std::string>* warnings) {
  std::vector<SliceCoverage> out;
  const int num_groups = static_cast<int>(cohort.groups->num_groups());
  for (Metric component : component_filters(spec.metric)) {
    for (int label : spec.labels.positive()) {
      for (int g = 0; g < num_groups; ++g) {
        SliceCoverage c;
        c.component = component;
        c.group = g;
        c.label = label;
        for (std::size_t i : cohort.items) {
          if (!passes_filter(component, cohort.group_of(i), cohort.label_of(i), g, label)) continue;
          ++c.size;
          if (member(i, label)) ++c.hits;
        }
        if (c.size == 0) {
          handle_empty(spec.degenerate, component, g, label, warnings);
          c.degenerate = true;
        } else {
          c.coverage = coverage_interval(c.hits, c.size);
        }
        out.push_back(c);
      }
    }
  }
  return out;
}

double disparity_ratio(double alpha_min, double alpha_max, RatioVariant variant) {
  double num = 0.0;
  double den = 0.0;
  if (variant == RatioVariant::Miscoverage) {
    num = 1.0 - alpha_max;
    den = 1.0 - alpha_min;
  } else {
    num = std::max(alpha_min, 0.0);
    den = alpha_max;
  }
  if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
  return num / den;
}

namespace {

DisparityReport empty_report(const FairnessSpec& spec) {
  DisparityReport r;
  r.metric = spec.metric;
  r.mode = spec.mode();
  r.ratio_variant = spec.ratio_variant;
  r.closeness = spec.closeness;
  return r;
}

void finish_worst(DisparityReport& r) {
  const bool ratio = r.mode == ComparisonMode::Ratio;
  double worst = ratio ? 1.0 : 0.0;
  bool satisfied = true;
  for (const auto& l : r.labels) {
    satisfied = satisfied && l.satisfied;
    if (l.groups_compared == 0) continue;
    worst = ratio ? std::min(worst, l.value) : std::max(worst, l.value);
  }
  r.worst_disparity = worst;
  r.satisfied = satisfied;
}

}  // namespace

DisparityReport check_disparity(std::span<const SliceCoverage> slices, const FairnessSpec& spec) {
  DisparityReport r = empty_report(spec);
  r.slices.assign(slices.begin(), slices.end());

  std::vector<std::pair<Metric, int>> keys;
  for (const auto& s : slices) {
    const std::pair<Metric, int> key{s.component, s.label};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [component, label] : keys) {
    LabelDisparity d;
    d.component = component;
    d.label = label;
    double a_min = std::numeric_limits<double>::infinity();
    double a_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : slices) {
      if (s.component != component || s.label != label) continue;
      if (s.degenerate) {
        r.warnings.push_back(slice_name(component, s.group, label) + " excluded from the check");
        continue;
      }
      a_min = std::min(a_min, s.coverage.lower - s.coverage.width);
      a_max = std::max(a_max, s.coverage.lower);
      ++d.groups_compared;
    }
    if (d.groups_compared == 0) {
      r.warnings.push_back("no non-empty slices for " + std::string(to_string(component)) +
                           " label " + std::to_string(label));
      r.labels.push_back(d);
      continue;
    }
    d.alpha_min = a_min;
    d.alpha_max = a_max;
    if (spec.mode() == ComparisonMode::Difference) {
      d.value = a_max - a_min;
      d.satisfied = !(d.value > spec.closeness);
    } else {
      d.value = disparity_ratio(a_min, a_max, spec.ratio_variant);
      d.satisfied = !(d.value < spec.closeness);
    }
    r.labels.push_back(d);
  }
  finish_worst(r);
  return r;
}

std::vector<ProxyCell> proxy_cells(const Cohort& cohort, const Membership& member,
                                   const LabelSet& labels) {
  std::vector<ProxyCell> out;
  const int num_groups = static_cast<int>(cohort.groups->num_groups());
  for (int label : labels.positive()) {
    for (int g = 0; g < num_groups; ++g) {
      ProxyCell c;
      c.group = g;
      c.label = label;
      for (std::size_t i : cohort.items) {
        if (cohort.group_of(i) != g) continue;
        const bool correct = cohort.label_of(i) == label;
        ++c.members;
        if (correct) ++c.label_count;
        if (member(i, label)) {
          ++c.in_set;
          if (correct) ++c.in_set_correct;
        }
      }
      out.push_back(c);
    }
  }
  for (auto& c : out) {
    if (c.members == 0) continue;
    c.prior = static_cast<double>(c.label_count) / static_cast<double>(c.members);
    if (c.in_set > 0) {
      c.ppv = static_cast<double>(c.in_set_correct) / static_cast<double>(c.in_set);
      c.proxy = *c.ppv - c.prior;
    }
  }
  return out;
}

std::vector<ProxyCell> proxy_cells(const SliceSet& slices, const Thresholds& lambdas) {
  const auto& dp = slices.slices();
  const auto& matched = slices.label_matched();
  std::vector<ProxyCell> out;
  out.reserve(dp.size());
  for (std::size_t j = 0; j < dp.size() && j < matched.size(); ++j) {
    ProxyCell c;
    c.group = dp[j].group;
    c.label = dp[j].label;
    c.members = dp[j].items.size();
    c.label_count = matched[j].items.size();
    const double lambda = lambdas.at(c.label);
    c.in_set = count_at_most(dp[j].scores, lambda);
    c.in_set_correct = count_at_most(matched[j].scores, lambda);
    if (c.members > 0) {
      c.prior = static_cast<double>(c.label_count) / static_cast<double>(c.members);
      if (c.in_set > 0) {
        c.ppv = static_cast<double>(c.in_set_correct) / static_cast<double>(c.in_set);
        c.proxy = *c.ppv - c.prior;
      }
    }
    out.push_back(c);
  }
  return out;
}

DisparityReport check_proxy(std::vector<ProxyCell> cells, const FairnessSpec& spec) {
  DisparityReport r = empty_report(spec);
  std::vector<int> labels;
  for (const auto& c : cells) {
    if (std::find(labels.begin(), labels.end(), c.label) == labels.end()) labels.push_back(c.label);
  }
  for (int label : labels) {
    LabelDisparity d;
    d.component = Metric::PredictiveParityProxy;
    d.label = label;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : cells) {
      if (c.label != label || c.members == 0) continue;
      if (!c.proxy) {
        d.missing_groups.push_back(c.group);
        continue;
      }
      lo = std::min(lo, *c.proxy);
      hi = std::max(hi, *c.proxy);
      ++d.groups_compared;
    }
    if (d.groups_compared > 0) {
      d.alpha_min = lo;
      d.alpha_max = hi;
      d.value = hi - lo;
    }
    d.satisfied = d.missing_groups.empty() && !(d.value > spec.closeness);
    if (!d.missing_groups.empty()) {
      r.warnings.push_back("predictive parity proxy undefined for label " + std::to_string(label) +
                           " in " + std::to_string(d.missing_groups.size()) + " group(s)");
    }
    r.labels.push_back(d);
  }
  r.proxy_cells = std::move(cells);
  finish_worst(r);
  return r;
}

DisparityReport evaluate_fairness(const SliceSet& slices, const FairnessSpec& spec,
                                  const Thresholds& lambdas) {
  const auto coverages = slices.coverages(lambdas);
  DisparityReport r;
  if (spec.metric == Metric::PredictiveParityProxy) {
    r = check_proxy(proxy_cells(slices, lambdas), spec);
    r.slices = coverages;
  } else {
    r = check_disparity(coverages, spec);
  }
  r.warnings.insert(r.warnings.begin(), slices.warnings().begin(), slices.warnings().end());
  return r;
}

DisparityReport evaluate_fairness(const Cohort& cohort, const Membership& member,
                                  const FairnessSpec& spec) {
  std::vector<std::string> warnings;
  const auto coverages = slice_coverages_from_sets(cohort, member, spec, &warnings);
  DisparityReport r;
  if (spec.metric == Metric::PredictiveParityProxy) {
    r = check_proxy(proxy_cells(cohort, member, spec.labels), spec);
    r.slices = coverages;
  } else {
    r = check_disparity(coverages, spec);
  }
  r.warnings.insert(r.warnings.begin(), warnings.begin(), warnings.end());
  return r;
}

std::vector<LabelDistribution> label_distributions(const Cohort& cohort, int num_classes) {
  const int num_groups = static_cast<int>(cohort.groups->num_groups());
  std::vector<LabelDistribution> out(static_cast<std::size_t>(num_groups));
  for (int g = 0; g < num_groups; ++g) {
    out[static_cast<std::size_t>(g)].group = g;
    out[static_cast<std::size_t>(g)].probs.assign(static_cast<std::size_t>(num_classes), 0.0);
  }
  for (std::size_t i : cohort.items) {
    auto& d = out[static_cast<std::size_t>(cohort.group_of(i))];
    ++d.count;
    d.probs[static_cast<std::size_t>(cohort.label_of(i))] += 1.0;
  }
  for (auto& d : out) {
    if (d.count == 0) {
      throw ValidationError("group '" + cohort.groups->group_names[static_cast<std::size_t>(d.group)] +
                            "' has no labeled items");
    }
    for (double& p : d.probs) p /= static_cast<double>(d.count);
  }
  return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("distributions differ in support size");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) sum += std::abs(p[k] - q[k]);
  return 0.5 * sum;
}

double positive_total_variation(std::span<const double> p, std::span<const double> q,
                                const LabelSet& labels) {
  double best = 0.0;
  for (int k : labels.positive()) {
    const auto idx = static_cast<std::size_t>(k);
    best = std::max(best, std::abs(p[idx] - q[idx]));
  }
  return best;
}

TvMatrix tv_distances(const Cohort& cohort, const LabelSet& labels) {
  const auto dists = label_distributions(cohort, labels.num_classes());
  const std::size_t n = dists.size();
  TvMatrix m{std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)),
             std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0))};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      m.tv[a][b] = m.tv[b][a] = total_variation(dists[a].probs, dists[b].probs);
      m.tv_plus[a][b] = m.tv_plus[b][a] =
          positive_total_variation(dists[a].probs, dists[b].probs, labels);
    }
  }
  return m;
}

PredictiveParityFeasibility predictive_parity_feasibility(const Cohort& cohort,
                                                          const LabelSet& labels) {
  const auto m = tv_distances(cohort, labels);
  PredictiveParityFeasibility f;
  for (std::size_t a = 0; a < m.tv.size(); ++a) {
    for (std::size_t b = 0; b < m.tv.size(); ++b) {
      f.max_tv = std::max(f.max_tv, m.tv[a][b]);
      f.max_tv_plus = std::max(f.max_tv_plus, m.tv_plus[a][b]);
    }
  }
  return f;
}

PpvInterval ppv_interval(const CoverageInterval& eo, const CoverageInterval& dp, double prior) {
  PpvInterval out;
  out.equal_opportunity = eo;
  out.demographic_parity = dp;
  out.prior = prior;
  out.lower = dp.upper > 0.0 ? eo.lower / dp.upper * prior : 0.0;
  if (dp.lower <= 0.0) {
    out.informative = false;
    out.upper = 1.0;
  } else {
    out.upper = std::min(1.0, eo.upper / dp.lower * prior);
  }
  out.lower = std::min(out.lower, out.upper);
  return out;
}

PpvInterval decompose_predictive_parity(const Cohort& cohort, const ScoreTable& table,
                                        const Thresholds& lambdas, int group, int label) {
  const double lambda = lambdas.at(label);
  std::size_t dp_m = 0, dp_hits = 0, eo_m = 0, eo_hits = 0;
  for (std::size_t i : cohort.items) {
    if (cohort.group_of(i) != group) continue;
    const bool hit = table(i, static_cast<std::size_t>(label)) <= lambda;
    ++dp_m;
    if (hit) ++dp_hits;
    if (cohort.label_of(i) == label) {
      ++eo_m;
      if (hit) ++eo_hits;
    }
  }
  if (dp_m == 0) throw DegenerateSliceError(group, label, "no items in group");
  if (eo_m == 0) throw DegenerateSliceError(group, label, "no items of this label in group");
  const double prior = static_cast<double>(eo_m) / static_cast<double>(dp_m);
  return ppv_interval(coverage_interval(eo_hits, eo_m), coverage_interval(dp_hits, dp_m), prior);
}

SetEvaluation evaluate_sets(const Cohort& cohort, const Membership& member, const FairnessSpec& spec) {
  SetEvaluation ev;
  const int k = cohort.data->num_classes;
  const std::size_t num_groups = cohort.groups->num_groups();
  ev.items = cohort.items.size();
  ev.group_coverage.assign(num_groups, 0.0);
  ev.group_sizes.assign(num_groups, 0);
  std::size_t covered = 0;
  std::size_t total_size = 0;
  std::vector<std::size_t> group_hits(num_groups, 0);
  for (std::size_t i : cohort.items) {
    const auto g = static_cast<std::size_t>(cohort.group_of(i));
    ++ev.group_sizes[g];
    for (int y = 0; y < k; ++y) {
      if (member(i, y)) ++total_size;
    }
    if (member(i, cohort.label_of(i))) {
      ++covered;
      ++group_hits[g];
    }
  }
  if (ev.items > 0) {
    ev.coverage = static_cast<double>(covered) / static_cast<double>(ev.items);
    ev.efficiency = static_cast<double>(total_size) / static_cast<double>(ev.items);
  }
  for (std::size_t g = 0; g < num_groups; ++g) {
    if (ev.group_sizes[g] > 0) {
      ev.group_coverage[g] = static_cast<double>(group_hits[g]) / static_cast<double>(ev.group_sizes[g]);
    }
  }

  auto rates_for = [&](Metric component) {
    std::vector<SliceRate> out;
    for (int label : spec.labels.positive()) {
      for (int g = 0; g < static_cast<int>(num_groups); ++g) {
        SliceRate s;
        s.component = component;
        s.group = g;
        s.label = label;
        for (std::size_t i : cohort.items) {
          if (!passes_filter(component, cohort.group_of(i), cohort.label_of(i), g, label)) continue;
          ++s.size;
          if (member(i, label)) ++s.hits;
        }
        if (s.size == 0) continue;
        s.rate = static_cast<double>(s.hits) / static_cast<double>(s.size);
        out.push_back(s);
      }
    }
    return out;
  };
  // Per label, (min rate, max rate) across groups.
  auto spread = [&](const std::vector<SliceRate>& rates) {
    std::map<int, std::pair<double, double>> by_label;
    for (const auto& s : rates) {
      auto [it, inserted] = by_label.try_emplace(s.label, s.rate, s.rate);
      if (!inserted) {
        it->second.first = std::min(it->second.first, s.rate);
        it->second.second = std::max(it->second.second, s.rate);
      }
    }
    return by_label;
  };

  const auto dp_rates = rates_for(Metric::DemographicParity);
  for (const auto& [label, mm] : spread(dp_rates)) {
    ev.demographic_parity_gap = std::max(ev.demographic_parity_gap, mm.second - mm.first);
    ev.disparate_impact_ratio =
        std::min(ev.disparate_impact_ratio, disparity_ratio(mm.first, mm.second, spec.ratio_variant));
  }

  switch (spec.metric) {
    case Metric::DemographicParity:
      ev.slices = dp_rates;
      ev.worst_disparity = ev.demographic_parity_gap;
      break;
    case Metric::DisparateImpact:
      ev.slices = dp_rates;
      ev.worst_disparity = ev.disparate_impact_ratio;
      break;
    case Metric::PredictiveParityProxy: {
      ev.slices = dp_rates;
      const auto report = check_proxy(proxy_cells(cohort, member, spec.labels), spec);
      ev.worst_disparity = report.worst_disparity;
      break;
    }
    default:
      for (Metric component : component_filters(spec.metric)) {
        const auto rates = rates_for(component);
        for (const auto& [label, mm] : spread(rates)) {
          ev.worst_disparity = std::max(ev.worst_disparity, mm.second - mm.first);
        }
        ev.slices.insert(ev.slices.end(), rates.begin(), rates.end());
      }
      break;
  }
  return ev;
}

}  // namespace cfair
