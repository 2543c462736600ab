#include <doctest.h>

#include <random>

#include "cfair/nonconformity.hpp"
#include "cfair/synth.hpp"

using namespace cfair;

namespace {

ProbabilityMatrix probs(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return ProbabilityMatrix(std::move(m));
}

ProbabilityMatrix random_probs(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  Matrix m(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += (m(i, j) = gamma(rng));
    for (std::size_t j = 0; j < k; ++j) m(i, j) /= s;
  }
  return ProbabilityMatrix(std::move(m));
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("item" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("TPS examples") {
  const auto t = score_tps(probs({{0.7, 0.2, 0.1}, {1.0, 0.0, 0.0}}));
  CHECK(t(0, 0) == doctest::Approx(0.3));
  CHECK(t(0, 1) == doctest::Approx(0.8));
  CHECK(t(0, 2) == doctest::Approx(0.9));
  CHECK(t(1, 0) == 0.0);
  CHECK(t(1, 1) == 1.0);
  const auto u = score_tps(probs({{0.25, 0.25, 0.25, 0.25}}));
  for (std::size_t y = 0; y < 4; ++y) CHECK(u(0, y) == 0.75);
}

TEST_CASE("APS examples") {
  const std::vector<double> p{0.5, 0.3, 0.2};
  CHECK(aps_score(p, 1, 0.0) == doctest::Approx(0.8));
  CHECK(aps_score(p, 1, 1.0) == doctest::Approx(0.5));
  CHECK(aps_score(p, 1, 0.5) == doctest::Approx(0.65));
  CHECK(aps_score(p, 0, 0.0) == doctest::Approx(0.5));
  CHECK(aps_score(p, 2, 0.0) == doctest::Approx(1.0));

  const auto t = score_aps(probs({p}), ids(1), {});
  CHECK(t(0, 1) == doctest::Approx(0.8));
}

TEST_CASE("APS ties are broken by ascending label") {
  const std::vector<double> p{0.25, 0.5, 0.25};
  CHECK(aps_score(p, 1, 0.0) == doctest::Approx(0.5));
  CHECK(aps_score(p, 0, 0.0) == doctest::Approx(0.75));
  CHECK(aps_score(p, 2, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("randomized APS subtracts a per-item u") {
  std::mt19937_64 rng(3);
  const auto pm = random_probs(rng, 50, 5);
  const auto names = ids(50);
  ScoreParams det;
  ScoreParams rnd;
  rnd.aps_randomized = true;
  rnd.seed = 17;
  const auto a = score_aps(pm, names, det);
  const auto b = score_aps(pm, names, rnd);
  for (std::size_t i = 0; i < 50; ++i) {
    const double u = aps_uniform(17, names[i]);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    for (std::size_t y = 0; y < 5; ++y) CHECK(b(i, y) == doctest::Approx(a(i, y) - u * pm(i, y)).epsilon(1e-12));
  }
  CHECK(score_aps(pm, names, rnd) == b);
  CHECK(aps_uniform(17, "x") != aps_uniform(18, "x"));
  CHECK_THROWS_AS(score_aps(pm, ids(3), rnd), ValidationError);
}

TEST_CASE("APS and TPS are monotone in probability rank") {
  std::mt19937_64 rng(8);
  const auto pm = random_probs(rng, 100, 6);
  const auto tps = score_tps(pm);
  const auto aps = score_aps(pm, ids(100), {});
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t a = 0; a < 6; ++a) {
      for (std::size_t b = 0; b < 6; ++b) {
        if (pm(i, a) > pm(i, b)) {
          CHECK(tps(i, a) < tps(i, b));
          CHECK(aps(i, a) <= aps(i, b));
        }
      }
    }
  }
}

TEST_CASE("RAPS examples and properties") {
  const auto pm = probs({{0.5, 0.3, 0.2}});
  ScoreParams p;
  p.kind = ScoreKind::RAPS;
  p.raps_nu = 0.1;
  p.raps_kreg = 1;
  const auto r = score_raps(pm, ids(1), p);
  CHECK(r(0, 1) == doctest::Approx(0.9));

  std::mt19937_64 rng(21);
  const auto big = random_probs(rng, 80, 4);
  const auto aps = score_aps(big, ids(80), {});
  ScoreParams nu0 = p;
  nu0.raps_nu = 0.0;
  CHECK(score_raps(big, ids(80), nu0) == aps);
  ScoreParams kk = p;
  kk.raps_kreg = 4;
  CHECK(score_raps(big, ids(80), kk) == aps);

  ScoreParams reg = p;
  reg.raps_nu = 0.3;
  reg.raps_kreg = 2;
  const auto raps = score_raps(big, ids(80), reg);
  for (std::size_t i = 0; i < 80; ++i) {
    for (std::size_t y = 0; y < 4; ++y) {
      CHECK(raps(i, y) >= aps(i, y));
      std::size_t o = 0;
      for (std::size_t c = 0; c < 4; ++c) o += big(i, y) >= big(i, c) ? 1 : 0;
      CHECK((raps(i, y) == aps(i, y)) == (o <= 2));
    }
  }
  ScoreParams bad = p;
  bad.raps_nu = -1;
  CHECK_THROWS_AS(score_raps(big, ids(80), bad), ValidationError);
}

TEST_CASE("DAPS examples") {
  // node 0 has score 0.3, neighbors 1 and 2 have 0.2 and 0.4
  Matrix m(4, 1);
  m(0, 0) = 0.3;
  m(1, 0) = 0.2;
  m(2, 0) = 0.4;
  m(3, 0) = 0.9;
  const ScoreTable s(m);
  const auto g = GraphStructure::from_edges(4, std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}});
  CHECK(score_daps(s, g, 0.5)(0, 0) == doctest::Approx(0.3));
  CHECK(score_daps(s, g, 0.0) == s);
  const auto g2 = GraphStructure::from_edges(4, std::vector<std::pair<std::size_t, std::size_t>>{{1, 3}});
  CHECK(score_daps(s, g2, 1.0)(1, 0) == doctest::Approx(0.9));
  // isolated node keeps its score
  CHECK(score_daps(s, g, 1.0)(3, 0) == 0.9);
  CHECK_THROWS_AS(score_daps(s, GraphStructure::from_edges(2, {}), 0.5), ValidationError);
  CHECK_THROWS_AS(score_daps(s, g, 1.5), ValidationError);
}

TEST_CASE("DAPS is affine in delta") {
  SynthConfig cfg;
  cfg.n = 150;
  cfg.graph = true;
  cfg.p_in = 0.05;
  cfg.p_out = 0.01;
  cfg.seed = 2;
  const Dataset d = generate(cfg);
  const auto base = score_tps(d.probs);
  const auto s0 = score_daps(base, *d.graph, 0.0);
  const auto s1 = score_daps(base, *d.graph, 1.0);
  for (double delta : {0.2, 0.5, 0.85}) {
    const auto sd = score_daps(base, *d.graph, delta);
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t y = 0; y < base.num_classes(); ++y) {
        CHECK(sd(i, y) == doctest::Approx((1 - delta) * s0(i, y) + delta * s1(i, y)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("compute_scores dispatch and determinism") {
  SynthConfig cfg;
  cfg.n = 60;
  cfg.seed = 9;
  Dataset d = generate(cfg);
  ScoreParams p;
  p.kind = ScoreKind::DAPS;
  CHECK_THROWS_WITH_AS(compute_scores(d, p), doctest::Contains("graph"), ValidationError);
  p.kind = ScoreKind::APS;
  p.aps_randomized = true;
  p.seed = 5;
  CHECK(compute_scores(d, p) == compute_scores(d, p));
  p.kind = ScoreKind::TPS;
  CHECK(compute_scores(d, p) == score_tps(d.probs));
  CHECK(parse_score_kind("raps") == ScoreKind::RAPS);
  CHECK_THROWS_AS(parse_score_kind("cfgnn"), ValidationError);
  Matrix inf(1, 2, 0.0);
  inf(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ScoreTable{inf}, ValidationError);
}
