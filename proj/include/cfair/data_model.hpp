#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfair/error.hpp"

namespace cfair {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr double kRowSumTolerance = 1e-6;

/// n x K class probabilities. Rows sum to one within kRowSumTolerance; entries in [0, 1].
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;

  /// Validates `m`; `ids` (optional) names the offending item in error messages.
  explicit ProbabilityMatrix(Matrix m, std::span<const std::string> ids = {});

  std::size_t rows() const noexcept { return m_.rows(); }
  std::size_t num_classes() const noexcept { return m_.cols(); }
  double operator()(std::size_t i, std::size_t k) const { return m_(i, k); }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  const Matrix& matrix() const noexcept { return m_; }

  bool operator==(const ProbabilityMatrix&) const = default;

 private:
  Matrix m_;
};

/// Label universe {0..K-1} with the advantaged subset Y+.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(int num_classes, std::vector<int> positive);
  static LabelSet all(int num_classes);

  int num_classes() const noexcept { return num_classes_; }
  const std::vector<int>& positive() const noexcept { return positive_; }
  bool is_positive(int label) const;
  LabelSet restricted_to(int label) const { return LabelSet(num_classes_, {label}); }

 private:
  int num_classes_ = 0;
  std::vector<int> positive_;
};

/// Undirected graph over dataset rows.
class GraphStructure {
 public:
  GraphStructure() = default;
  /// Builds a symmetric adjacency from 0-indexed edges. Self loops and duplicates are dropped.
  static GraphStructure from_edges(std::size_t num_nodes,
                                   std::span<const std::pair<std::size_t, std::size_t>> edges);
  /// Throws ValidationError if an id is out of range or adjacency is not symmetric.
  explicit GraphStructure(std::vector<std::vector<std::size_t>> adjacency);

  std::size_t num_nodes() const noexcept { return adjacency_.size(); }
  std::span<const std::size_t> neighbors(std::size_t v) const { return adjacency_[v]; }
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  bool operator==(const GraphStructure&) const = default;

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
};

enum class Split : std::uint8_t { Train, Valid, Calib, Test, Unassigned };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// One sensitive attribute and its observed levels; group ids index `levels`.
struct Attribute {
  std::string name;
  std::vector<std::string> levels;
  bool operator==(const Attribute&) const = default;
};

struct Item {
  std::string id;
  std::optional<int> label;  // nullopt for unlabeled graph nodes
  std::vector<int> groups;   // one id per attribute
  Split split = Split::Unassigned;
  bool operator==(const Item&) const = default;
};

/// Items, probabilities, optional graph. Row i of `probs` belongs to items[i].
struct Dataset {
  int num_classes = 0;
  std::vector<Attribute> attributes;
  std::vector<Item> items;
  ProbabilityMatrix probs;
  std::optional<GraphStructure> graph;

  std::size_t size() const noexcept { return items.size(); }
  std::vector<std::string> item_ids() const;
  std::vector<std::size_t> indices_in(Split s) const;
  std::vector<std::size_t> labeled_indices() const;

  /// Checks every invariant; throws ValidationError naming the offending item.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// How the effective group universe G is formed from the attributes.
struct GroupSelection {
  std::optional<std::string> attribute;  // default: first attribute
  bool intersectional = false;           // cartesian product of every attribute
};

/// Effective group universe plus each item's effective group id.
struct GroupAssignment {
  std::vector<std::string> attribute_names;
  std::vector<std::string> group_names;
  std::vector<int> of_item;

  std::size_t num_groups() const noexcept { return group_names.size(); }
};

GroupAssignment make_group_assignment(const Dataset& data, const GroupSelection& selection);

enum class Metric {
  DemographicParity,
  EqualOpportunity,
  PredictiveEquality,
  EqualizedOdds,
  DisparateImpact,
  PredictiveParityProxy,
};

enum class ComparisonMode { Difference, Ratio };

/// Ratio-mode formula: (1-a_max)/(1-a_min) as printed, or the coverage ratio a_min/a_max.
enum class RatioVariant { Miscoverage, Coverage };

enum class DegeneratePolicy { Error, SkipWithWarning };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);
std::string_view to_string(ComparisonMode m);
std::string_view to_string(RatioVariant v);
RatioVariant parse_ratio_variant(std::string_view s);
std::string_view to_string(DegeneratePolicy p);
DegeneratePolicy parse_degenerate_policy(std::string_view s);

struct FairnessSpec {
  Metric metric = Metric::DemographicParity;
  double closeness = 0.1;
  double alpha = 0.1;
  bool classwise = false;
  LabelSet labels;
  RatioVariant ratio_variant = RatioVariant::Miscoverage;
  DegeneratePolicy degenerate = DegeneratePolicy::Error;

  /// DisparateImpact compares ratios; every other metric compares differences.
  ComparisonMode mode() const noexcept {
    return metric == Metric::DisparateImpact ? ComparisonMode::Ratio : ComparisonMode::Difference;
  }
  void validate() const;
};

/// F_M(x_i, y_i, g, label) for single (non-composite) metrics.
bool passes_filter(Metric metric, int item_group, int item_label, int group, int label);

/// Items from `pool` that pass F_M for (group, label). Pool items must be labeled.
std::vector<std::size_t> filter_items(const Dataset& data, const GroupAssignment& groups,
                                      std::span<const std::size_t> pool, Metric metric, int group,
                                      int label);

/// Calibration-tagged items passing F_M for (group, label).
std::vector<std::size_t> filter_calibration(const Dataset& data, const GroupAssignment& groups,
                                            Metric metric, int group, int label);

using SplitFractions = std::array<double, 4>;  // train, valid, calib, test

/// Per-class largest-remainder allocation after a seeded shuffle. Unlabeled items stay Unassigned.
Dataset stratified_split(Dataset data, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace cfair
