#include <doctest.h>

#include "cfair/audit.hpp"
#include "cfair/report.hpp"
#include "cfair/search.hpp"
#include "cfair/synth.hpp"
#include "helpers.hpp"

using namespace cfair;

namespace {

FairnessSpec spec_for(Metric m, double c, int num_classes) {
  FairnessSpec s;
  s.metric = m;
  s.closeness = c;
  s.alpha = 0.1;
  s.labels = LabelSet::all(num_classes);
  return s;
}

struct Setup {
  Dataset data;
  GroupAssignment groups;
  ScoreTable table;
};

Setup setup(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n = 600;
  cfg.num_classes = 3;
  cfg.attributes = {{"group", {0.5, 0.5}, {0.0, -1.0}}};
  cfg.seed = seed;
  Setup s;
  s.data = stratified_split(generate(cfg), {0.3, 0.2, 0.25, 0.25}, seed);
  s.groups = make_group_assignment(s.data, {});
  s.table = compute_scores(s.data, {});
  return s;
}

}  // namespace

TEST_CASE("auditing the calibrated threshold on calibration data passes") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = setup(seed);
    const auto calib = make_cohort(s.data, s.groups, Split::Calib);
    for (Metric m : {Metric::DemographicParity, Metric::EqualOpportunity, Metric::DisparateImpact}) {
      const auto spec = spec_for(m, m == Metric::DisparateImpact ? 0.7 : 0.15, 3);
      const FairnessProblem problem(calib, s.table, spec);
      const auto r = find_lambda_opt(problem);
      if (!r.found()) continue;
      const auto v = audit_lambda(calib, s.table, spec, r.lambda);
      CHECK(v.pass);
      CHECK(v.report.worst_disparity == r.report.worst_disparity);
      const auto via_sets = audit_sets(calib, sets_from_scores(s.table, r.lambda), spec);
      CHECK(via_sets.pass);
    }
  }
}

TEST_CASE("score path and set path agree") {
  const auto s = setup(9);
  const auto test = make_cohort(s.data, s.groups, Split::Test);
  for (Metric m : {Metric::DemographicParity, Metric::EqualOpportunity, Metric::PredictiveEquality,
                   Metric::EqualizedOdds, Metric::DisparateImpact, Metric::PredictiveParityProxy}) {
    const auto spec = spec_for(m, m == Metric::DisparateImpact ? 0.8 : 0.1, 3);
    for (double lambda : {0.3, 0.6, 0.85, 0.95}) {
      const auto a = audit_lambda(test, s.table, spec, Thresholds(lambda));
      const auto b = audit_sets(test, sets_from_scores(s.table, Thresholds(lambda)), spec);
      CHECK(a.pass == b.pass);
      CHECK(a.report.worst_disparity == doctest::Approx(b.report.worst_disparity).epsilon(1e-12));
      REQUIRE(a.evidence.size() == b.evidence.size());
      for (std::size_t j = 0; j < a.evidence.size(); ++j) {
        CHECK(a.evidence[j].size == b.evidence[j].size);
        CHECK(a.evidence[j].hits == b.evidence[j].hits);
      }
    }
  }
}

TEST_CASE("full and empty prediction sets") {
  const auto s = setup(3);
  const auto cohort = make_cohort(s.data, s.groups, Split::Test);
  PredictionSets full{3, {}};
  PredictionSets partial{3, {}};
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    full.sets.emplace_back(std::vector<int>{0, 1, 2});
    if (s.groups.of_item[i] == 0) {
      partial.sets.emplace_back(std::vector<int>{});
    } else {
      partial.sets.emplace_back(std::vector<int>{0, 1, 2});
    }
  }
  const auto spec = spec_for(Metric::DemographicParity, 0.1, 3);
  const auto all = audit_sets(cohort, full, spec);
  for (const auto& sl : all.report.slices) {
    CHECK(sl.coverage.lower == doctest::Approx(double(sl.size) / double(sl.size + 1)));
  }
  CHECK(all.pass);
  const auto skew = audit_sets(cohort, partial, spec);
  CHECK_FALSE(skew.pass);
  CHECK(skew.report.worst_disparity > 0.9);
}

TEST_CASE("audit input validation") {
  const auto s = setup(4);
  const auto cohort = make_cohort(s.data, s.groups, Split::Test);
  const auto spec = spec_for(Metric::DemographicParity, 0.1, 3);
  PredictionSets missing{3, std::vector<std::optional<std::vector<int>>>(s.data.size())};
  CHECK_THROWS_AS(audit_sets(cohort, missing, spec), ValidationError);
  PredictionSets bad = sets_from_scores(s.table, Thresholds(0.5));
  bad.sets[cohort.items.front()] = std::vector<int>{5};
  CHECK_THROWS_AS(audit_sets(cohort, bad, spec), ValidationError);
}

TEST_CASE("audits are deterministic") {
  const auto s = setup(5);
  const auto cohort = make_cohort(s.data, s.groups, Split::Test);
  const auto spec = spec_for(Metric::EqualizedOdds, 0.1, 3);
  const auto a = to_json(audit_lambda(cohort, s.table, spec, Thresholds(0.8)), s.groups).dump();
  const auto b = to_json(audit_lambda(cohort, s.table, spec, Thresholds(0.8)), s.groups).dump();
  CHECK(a == b);
}
