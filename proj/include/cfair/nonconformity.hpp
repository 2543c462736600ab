#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "cfair/data_model.hpp"

namespace cfair {

/// n x K non-conformity scores; entry (i, y) = s(x_i, y). Every entry finite.
class ScoreTable {
 public:
  ScoreTable() = default;
  explicit ScoreTable(Matrix scores);

  std::size_t rows() const noexcept { return m_.rows(); }
  std::size_t num_classes() const noexcept { return m_.cols(); }
  double operator()(std::size_t i, std::size_t y) const { return m_(i, y); }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  const Matrix& matrix() const noexcept { return m_; }

  bool operator==(const ScoreTable&) const = default;

 private:
  Matrix m_;
};

enum class ScoreKind { TPS, APS, RAPS, DAPS };

std::string_view to_string(ScoreKind k);
ScoreKind parse_score_kind(std::string_view s);

struct ScoreParams {
  ScoreKind kind = ScoreKind::TPS;
  bool aps_randomized = false;
  std::uint64_t seed = 0;
  double raps_nu = 0.0;
  int raps_kreg = 0;
  double daps_delta = 0.5;
  ScoreKind daps_base = ScoreKind::APS;  // point score diffused by DAPS

  void validate() const;
};

/// s(x, y) = 1 - p(x)_y.
ScoreTable score_tps(const ProbabilityMatrix& probs);

/// The per-item uniform u used by randomized APS, derived from (seed, item id).
double aps_uniform(std::uint64_t seed, std::string_view item_id);

/// APS score of one label of one probability row with an explicit u.
double aps_score(std::span<const double> probs_row, int label, double u);

/// Cumulative mass of labels ranked at or above y (descending probability, ties by label
/// index) minus u * p(x)_y. `item_ids` keys the per-item u when randomized.
ScoreTable score_aps(const ProbabilityMatrix& probs, std::span<const std::string> item_ids,
                     const ScoreParams& params);

/// APS plus nu * max(o(x,y) - k_reg, 0) with o(x,y) = |{c : p(x)_y >= p(x)_c}|.
ScoreTable score_raps(const ProbabilityMatrix& probs, std::span<const std::string> item_ids,
                      const ScoreParams& params);

/// One diffusion step (1-delta) s(x,y) + delta * mean_{u in N(x)} s(u,y). Isolated nodes keep s.
ScoreTable score_daps(const ScoreTable& point_scores, const GraphStructure& graph, double delta);

/// Dispatches on params.kind. DAPS requires data.graph.
ScoreTable compute_scores(const Dataset& data, const ScoreParams& params);

}  // namespace cfair
