#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfair/data_model.hpp"
#include "cfair/nonconformity.hpp"

namespace cfair {

struct SynthAttribute {
  std::string name = "group";
  std::vector<double> proportions = {0.5, 0.5};
  /// Logit shift on the true class per level; negative values make a group's
  /// predictions less confident.
  std::vector<double> bias = {0.0, 0.0};
};

struct SynthConfig {
  std::size_t n = 1000;
  int num_classes = 4;
  std::vector<SynthAttribute> attributes = {SynthAttribute{}};
  double signal = 2.0;       // true-class logit boost
  double noise = 1.0;        // std-dev of Gaussian logit noise
  double temperature = 1.0;  // softmax temperature
  /// Optional per-level label priors for the first attribute (rows sum to 1).
  std::vector<std::vector<double>> label_priors;
  double unlabeled_fraction = 0.0;
  bool graph = false;
  double p_in = 0.02;   // edge probability within the same first-attribute group
  double p_out = 0.002; // ... across groups
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws items, labels, probabilities (softmax of signal + group bias + noise) and an
/// optional stochastic-block-model graph. Identical configs give identical datasets.
Dataset generate(const SynthConfig& config);

// Brute-force reference for the threshold search. Shares no code with the search engine.

struct OracleResult {
  std::vector<double> candidates;
  std::vector<bool> verdicts;
  std::optional<double> lambda_opt;
};

/// Tests every candidate of the derived threshold space on `calib_items` by direct recounting.
/// `groups_of_item` holds the effective group of each dataset row. Throws DegenerateSliceError
/// on an empty slice under DegeneratePolicy::Error.
OracleResult oracle_scan(const ScoreTable& table, const Dataset& data,
                         const std::vector<int>& groups_of_item, std::size_t num_groups,
                         const std::vector<std::size_t>& calib_items, const FairnessSpec& spec);

}  // namespace cfair
