#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cfair/data_model.hpp"
#include "cfair/nonconformity.hpp"

namespace cfair::test {

/// Labeled items with one attribute "g" of `num_groups` levels, uniform probabilities,
/// every item tagged `split`.
inline Dataset make_dataset(int num_classes, const std::vector<int>& labels, const std::vector<int>& groups,
                            int num_groups = 2, Split split = Split::Calib) {
  Dataset d;
  d.num_classes = num_classes;
  Attribute a{"g", {}};
  for (int g = 0; g < num_groups; ++g) a.levels.push_back("g" + std::to_string(g));
  d.attributes.push_back(a);
  Matrix p(labels.size(), static_cast<std::size_t>(num_classes), 1.0 / num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Item it;
    it.id = "i" + std::to_string(i);
    it.label = labels[i];
    it.groups = {groups[i]};
    it.split = split;
    d.items.push_back(it);
  }
  d.probs = ProbabilityMatrix(std::move(p));
  d.validate();
  return d;
}

inline ScoreTable make_table(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return ScoreTable(std::move(m));
}

/// Random instance: labels, groups and scores drawn from `rng`. Scores are quantized to
/// multiples of 1/`levels` when `levels` > 0 so ties occur.
struct RandomInstance {
  Dataset data;
  ScoreTable table;
};

inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t n, int num_classes, int num_groups,
                                      int levels = 0) {
  std::uniform_int_distribution<int> label(0, num_classes - 1);
  std::uniform_int_distribution<int> group(0, num_groups - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> labels(n), groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = label(rng);
    groups[i] = group(rng);
  }
  RandomInstance r{make_dataset(num_classes, labels, groups, num_groups), {}};
  Matrix m(n, static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < n; ++i) {
    for (int y = 0; y < num_classes; ++y) {
      double s = unit(rng);
      if (levels > 0) s = std::floor(s * levels) / levels;
      // the true label tends to conform better
      if (y == labels[i]) s *= 0.6;
      m(i, static_cast<std::size_t>(y)) = s;
    }
  }
  r.table = ScoreTable(std::move(m));
  return r;
}

inline std::filesystem::path tmp_dir(const std::string& name) {
  const auto p = std::filesystem::path(CFAIR_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace cfair::test
