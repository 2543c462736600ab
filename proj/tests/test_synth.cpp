#include <doctest.h>

#include "cfair/synth.hpp"
#include "helpers.hpp"

using namespace cfair;

TEST_CASE("generation is deterministic") {
  SynthConfig cfg;
  cfg.n = 300;
  cfg.graph = true;
  cfg.seed = 42;
  const Dataset a = generate(cfg);
  CHECK(a == generate(cfg));
  cfg.seed = 43;
  CHECK_FALSE(a == generate(cfg));
  CHECK(a.size() == 300);
  CHECK(a.attributes[0].levels == std::vector<std::string>{"g0", "g1"});
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("negative bias lowers true-class confidence") {
  SynthConfig cfg;
  cfg.n = 4000;
  cfg.attributes = {{"group", {0.5, 0.5}, {0.0, -1.5}}};
  cfg.seed = 1;
  const Dataset d = generate(cfg);
  double sum[2] = {0, 0};
  double count[2] = {0, 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int g = d.items[i].groups[0];
    sum[g] += d.probs(i, static_cast<std::size_t>(*d.items[i].label));
    count[g] += 1;
  }
  CHECK(sum[0] / count[0] > sum[1] / count[1] + 0.1);
  CHECK(count[0] / 4000.0 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("label priors and unlabeled items") {
  SynthConfig cfg;
  cfg.n = 3000;
  cfg.num_classes = 2;
  cfg.label_priors = {{0.9, 0.1}, {0.2, 0.8}};
  cfg.unlabeled_fraction = 0.25;
  cfg.seed = 5;
  const Dataset d = generate(cfg);
  double ones[2] = {0, 0}, labeled[2] = {0, 0};
  std::size_t hidden = 0;
  for (const auto& it : d.items) {
    if (!it.label) {
      ++hidden;
      continue;
    }
    labeled[it.groups[0]] += 1;
    ones[it.groups[0]] += *it.label;
  }
  CHECK(ones[0] / labeled[0] == doctest::Approx(0.1).epsilon(0.3));
  CHECK(ones[1] / labeled[1] == doctest::Approx(0.8).epsilon(0.1));
  CHECK(static_cast<double>(hidden) / 3000.0 == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("block-model graph is denser within groups") {
  SynthConfig cfg;
  cfg.n = 400;
  cfg.graph = true;
  cfg.p_in = 0.05;
  cfg.p_out = 0.005;
  cfg.seed = 7;
  const Dataset d = generate(cfg);
  REQUIRE(d.graph.has_value());
  double within = 0, across = 0;
  for (std::size_t u = 0; u < d.size(); ++u) {
    for (std::size_t v : d.graph->neighbors(u)) {
      (d.items[u].groups[0] == d.items[v].groups[0] ? within : across) += 1;
    }
  }
  CHECK(within > 3 * across);
}

TEST_CASE("synth config validation") {
  auto bad = [](auto mutate) {
    SynthConfig cfg;
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_AS(generate(bad([](SynthConfig& c) { c.n = 0; })), ValidationError);
  CHECK_THROWS_AS(generate(bad([](SynthConfig& c) { c.num_classes = 1; })), ValidationError);
  CHECK_THROWS_AS(generate(bad([](SynthConfig& c) { c.temperature = 0; })), ValidationError);
  CHECK_THROWS_AS(generate(bad([](SynthConfig& c) { c.unlabeled_fraction = 1.0; })), ValidationError);
  CHECK_THROWS_WITH_AS(generate(bad([](SynthConfig& c) { c.attributes[0].proportions = {1.0, 0.0}; })),
                       doctest::Contains("empty group"), ValidationError);
  CHECK_THROWS_AS(generate(bad([](SynthConfig& c) { c.attributes[0].proportions = {0.6, 0.6}; })),
                  ValidationError);
  CHECK_THROWS_AS(generate(bad([](SynthConfig& c) { c.attributes[0].bias = {0.0}; })), ValidationError);
  CHECK_THROWS_AS(generate(bad([](SynthConfig& c) { c.attributes.clear(); })), ValidationError);
}

TEST_CASE("oracle scan on a hand-checked instance") {
  // g0 label-1 scores {0.1, 0.2}, g1 {0.3, 0.4}; true label 1 everywhere.
  const auto data = test::make_dataset(2, {1, 1, 1, 1}, {0, 0, 1, 1});
  const auto table = test::make_table({{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4}});
  FairnessSpec spec;
  spec.metric = Metric::DemographicParity;
  spec.alpha = 0.4;  // rank ceil(5 * 0.6) = 3 -> q-hat = 0.3
  spec.labels = LabelSet(2, {1});
  spec.closeness = 0.34;
  const std::vector<int> groups{0, 0, 1, 1};
  const std::vector<std::size_t> items{0, 1, 2, 3};
  const auto r = oracle_scan(table, data, groups, 2, items, spec);
  CHECK(r.candidates == std::vector<double>{0.3, 0.4});
  // at 0.3: g0 2/3, g1 1/3, gap = 2/3 - 0 = 2/3; at 0.4 both 2/3, gap = 1/3
  CHECK(r.verdicts == std::vector<bool>{false, true});
  REQUIRE(r.lambda_opt.has_value());
  CHECK(*r.lambda_opt == 0.4);
  spec.closeness = 0.3;
  CHECK_FALSE(oracle_scan(table, data, groups, 2, items, spec).lambda_opt.has_value());
}
