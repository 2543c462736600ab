#include <doctest.h>

#include <random>

#include "cfair/gcp.hpp"
#include "cfair/synth.hpp"
#include "helpers.hpp"

using namespace cfair;

namespace {

// Minimum of the mean pinball loss over one group's scores, by trying every data point.
double best_pinball(const std::vector<double>& s, double q) {
  double best = std::numeric_limits<double>::infinity();
  for (double tau : s) {
    double sum = 0;
    for (double v : s) sum += pinball_loss(tau, v, q);
    best = std::min(best, sum);
  }
  return best;
}

}  // namespace

TEST_CASE("pinball loss examples") {
  CHECK(pinball_loss(0.5, 0.7, 0.9) == doctest::Approx(0.18));
  CHECK(pinball_loss(0.5, 0.3, 0.9) == doctest::Approx(0.02));
  CHECK(pinball_loss(0.5, 0.5, 0.9) == 0.0);
}

TEST_CASE("pinball loss is convex in tau") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const double s = unit(rng), q = unit(rng), a = unit(rng), b = unit(rng), w = unit(rng);
    const double mid = pinball_loss(w * a + (1 - w) * b, s, q);
    CHECK(mid <= w * pinball_loss(a, s, q) + (1 - w) * pinball_loss(b, s, q) + 1e-12);
  }
}

TEST_CASE("single group fit reaches the empirical quantile") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> s(300);
  for (double& v : s) v = unit(rng);
  const std::vector<std::vector<int>> member(s.size(), std::vector<int>{0});
  const double alpha = 0.1;
  const auto fit = fit_batchgcp(s, member, {"all"}, 0.0, alpha);
  const double opt = best_pinball(s, 1 - alpha) / static_cast<double>(s.size());
  CHECK(fit.objective >= opt - 1e-12);
  CHECK(fit.objective <= opt + 1e-3);
  const double tau = fit.model.threshold(std::vector<int>{0});
  const double covered =
      static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= tau; })) / 300.0;
  CHECK(covered == doctest::Approx(0.9).epsilon(0.03));
}

TEST_CASE("two disjoint groups are fit separately") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> s;
  std::vector<std::vector<int>> member;
  std::vector<double> g0, g1;
  for (int i = 0; i < 400; ++i) {
    const int g = i % 2;
    const double v = g == 0 ? 0.5 * unit(rng) : 0.3 + 0.7 * unit(rng);
    s.push_back(v);
    member.push_back({g});
    (g == 0 ? g0 : g1).push_back(v);
  }
  const double alpha = 0.2;
  const auto fit = fit_batchgcp(s, member, {"a", "b"}, 0.5, alpha);
  const double opt = (best_pinball(g0, 0.8) + best_pinball(g1, 0.8)) / 400.0;
  CHECK(fit.objective <= opt + 2e-3);
  CHECK(fit.model.threshold(std::vector<int>{0}) < fit.model.threshold(std::vector<int>{1}));
  // stationarity: each group's coverage is near 1 - alpha
  for (int g = 0; g < 2; ++g) {
    const auto& v = g == 0 ? g0 : g1;
    const double tau = fit.model.threshold(std::vector<int>{g});
    const double cov = static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x <= tau; })) /
                       static_cast<double>(v.size());
    CHECK(std::abs(cov - 0.8) < 0.05);
  }
}

TEST_CASE("gcp input validation") {
  const GcpThreshold t{0.5, {0.1}, {"a"}};
  CHECK(t.threshold(std::vector<int>{0}) == doctest::Approx(0.6));
  CHECK_THROWS_AS(t.threshold(std::vector<int>{3}), ValidationError);
  const std::vector<double> s{0.1, 0.2};
  const std::vector<std::vector<int>> member{{0}, {0}};
  CHECK_THROWS_AS(fit_batchgcp(s, member, {"a", "b"}, 0.0, 0.1), ValidationError);
}

TEST_CASE("batchgcp on synthetic data") {
  SynthConfig cfg;
  cfg.n = 2000;
  cfg.attributes = {{"group", {0.5, 0.5}, {0.0, -1.5}}};
  cfg.seed = 3;
  const Dataset d = stratified_split(generate(cfg), {0.3, 0.2, 0.25, 0.25}, 3);
  const auto groups = make_group_assignment(d, {});
  const auto table = compute_scores(d, {});
  const auto calib = make_cohort(d, groups, Split::Calib);
  const auto test = make_cohort(d, groups, Split::Test);
  const auto membership = disjoint_membership(groups);
  CHECK(membership.num_groups() == 2);
  const auto fit = fit_batchgcp(calib, table, membership, 0.1);
  CHECK(fit.model.offsets.size() == 2);
  FairnessSpec spec;
  spec.labels = LabelSet::all(d.num_classes);
  spec.closeness = 0.1;
  const auto ev = evaluate_batchgcp(fit.model, test, table, membership, spec);
  CHECK(ev.requires_group_information);
  REQUIRE(ev.group_coverage.size() == 2);
  for (double c : ev.group_coverage) CHECK(std::abs(c - 0.9) < 0.07);
  CHECK(ev.sets.items == test.items.size());

  const auto attrs = attribute_membership(d);
  CHECK(attrs.num_groups() == 2);
  CHECK(fit_batchgcp(calib, table, membership, 0.1).objective == fit.objective);
}

TEST_CASE("fitted thresholds are stationary on calibration data") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig cfg;
    cfg.n = 3000;
    cfg.attributes = {{"group", {0.3, 0.3, 0.4}, {0.0, -1.0, 0.5}}};
    cfg.seed = seed;
    const Dataset d = stratified_split(generate(cfg), {0.3, 0.2, 0.25, 0.25}, seed);
    const auto groups = make_group_assignment(d, {});
    const auto table = compute_scores(d, {});
    const auto calib = make_cohort(d, groups, Split::Calib);
    const auto fit = fit_batchgcp(calib, table, disjoint_membership(groups), 0.1);
    CHECK(fit.converged);
    CHECK(fit.warnings.empty());
    for (int g = 0; g < 3; ++g) {
      double m = 0, covered = 0;
      for (std::size_t i : calib.items) {
        if (calib.group_of(i) != g) continue;
        ++m;
        covered += table(i, static_cast<std::size_t>(calib.label_of(i))) <= fit.model.threshold(std::vector<int>{g});
      }
      CHECK(std::abs(covered / m - 0.9) <= 1.0 / m + 1e-12);
    }
  }
}

TEST_CASE("a fit already at the optimum does not move") {
  // ten distinct scores, q = 0.9: every threshold in [s_9, s_10) is optimal; the base sits at s_9
  std::vector<double> s;
  for (int i = 1; i <= 10; ++i) s.push_back(0.1 * i);
  const std::vector<std::vector<int>> member(s.size(), std::vector<int>{0});
  const auto fit = fit_batchgcp(s, member, {"all"}, 0.9, 0.1);
  CHECK(fit.converged);
  CHECK(fit.model.offsets[0] == 0.0);
}
