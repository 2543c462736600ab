#include "cfair/nonconformity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cfair/seed.hpp"

namespace cfair {

ScoreTable::ScoreTable(Matrix scores) : m_(std::move(scores)) {
  for (std::size_t i = 0; i < m_.rows(); ++i) {
    for (double s : m_.row(i)) {
      if (!std::isfinite(s)) {
        throw ValidationError("non-finite score in row " + std::to_string(i));
      }
    }
  }
}

std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::TPS: return "tps";
    case ScoreKind::APS: return "aps";
    case ScoreKind::RAPS: return "raps";
    case ScoreKind::DAPS: return "daps";
  }
  return "unknown";
}

ScoreKind parse_score_kind(std::string_view s) {
  if (s == "tps") return ScoreKind::TPS;
  if (s == "aps") return ScoreKind::APS;
  if (s == "raps") return ScoreKind::RAPS;
  if (s == "daps") return ScoreKind::DAPS;
  throw ValidationError("unknown score kind '" + std::string(s) + "'");
}

void ScoreParams::validate() const {
  if (!(raps_nu >= 0.0)) throw ValidationError("raps_nu must be >= 0");
  if (raps_kreg < 0) throw ValidationError("raps_kreg must be >= 0");
  if (!(daps_delta >= 0.0 && daps_delta <= 1.0)) throw ValidationError("daps_delta must lie in [0, 1]");
  if (daps_base == ScoreKind::DAPS) throw ValidationError("daps_base must be a point score");
}

ScoreTable score_tps(const ProbabilityMatrix& probs) {
  Matrix out(probs.rows(), probs.num_classes());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t y = 0; y < probs.num_classes(); ++y) out(i, y) = 1.0 - probs(i, y);
  }
  return ScoreTable(std::move(out));
}

double aps_uniform(std::uint64_t seed, std::string_view item_id) {
  return unit_interval(splitmix64(derive_seed(seed, "aps") ^ fnv1a(item_id)));
}

namespace {

void check_ids(const ProbabilityMatrix& probs, std::span<const std::string> ids, bool needed) {
  if (needed && ids.size() != probs.rows()) {
    throw ValidationError("randomized APS needs one item id per probability row");
  }
}

// Cumulative sums in descending-probability order; ties broken by ascending label.
void cumulative_row(std::span<const double> p, std::vector<std::size_t>& order,
                    std::span<double> out) {
  order.resize(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  double acc = 0.0;
  for (std::size_t y : order) {
    acc += p[y];
    out[y] = acc;
  }
}

}  // namespace

double aps_score(std::span<const double> probs_row, int label, double u) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs_row.size()) {
    throw ValidationError("label " + std::to_string(label) + " outside the probability row");
  }
  std::vector<std::size_t> order;
  std::vector<double> cum(probs_row.size());
  cumulative_row(probs_row, order, cum);
  const auto y = static_cast<std::size_t>(label);
  return cum[y] - u * probs_row[y];
}

ScoreTable score_aps(const ProbabilityMatrix& probs, std::span<const std::string> item_ids,
                     const ScoreParams& params) {
  check_ids(probs, item_ids, params.aps_randomized);
  Matrix out(probs.rows(), probs.num_classes());
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    auto row = out.row(i);
    cumulative_row(p, order, row);
    const double u = params.aps_randomized ? aps_uniform(params.seed, item_ids[i]) : 0.0;
    for (std::size_t y = 0; y < p.size(); ++y) row[y] -= u * p[y];
  }
  return ScoreTable(std::move(out));
}

ScoreTable score_raps(const ProbabilityMatrix& probs, std::span<const std::string> item_ids,
                      const ScoreParams& params) {
  params.validate();
  const ScoreTable aps = score_aps(probs, item_ids, params);
  Matrix out = aps.matrix();
  const std::size_t k = probs.num_classes();
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    for (std::size_t y = 0; y < k; ++y) {
      const auto o = std::count_if(p.begin(), p.end(), [&](double pc) { return p[y] >= pc; });
      const auto excess = std::max<long>(static_cast<long>(o) - params.raps_kreg, 0);
      out(i, y) += params.raps_nu * static_cast<double>(excess);
    }
  }
  return ScoreTable(std::move(out));
}

ScoreTable score_daps(const ScoreTable& point_scores, const GraphStructure& graph, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("daps_delta must lie in [0, 1]");
  if (graph.num_nodes() != point_scores.rows()) {
    throw ValidationError("graph has " + std::to_string(graph.num_nodes()) + " nodes for " +
                          std::to_string(point_scores.rows()) + " score rows");
  }
  const std::size_t k = point_scores.num_classes();
  Matrix out = point_scores.matrix();
  std::vector<double> mean(k);
  for (std::size_t v = 0; v < point_scores.rows(); ++v) {
    const auto nbrs = graph.neighbors(v);
    if (nbrs.empty()) continue;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t u : nbrs) {
      if (u >= point_scores.rows()) {
        throw ValidationError("neighbor id " + std::to_string(u) + " out of range");
      }
      for (std::size_t y = 0; y < k; ++y) mean[y] += point_scores(u, y);
    }
    const double deg = static_cast<double>(nbrs.size());
    for (std::size_t y = 0; y < k; ++y) {
      out(v, y) = (1.0 - delta) * point_scores(v, y) + delta * (mean[y] / deg);
    }
  }
  return ScoreTable(std::move(out));
}

ScoreTable compute_scores(const Dataset& data, const ScoreParams& params) {
  params.validate();
  const auto ids = data.item_ids();
  auto point = [&](ScoreKind kind) {
    switch (kind) {
      case ScoreKind::TPS: return score_tps(data.probs);
      case ScoreKind::APS: return score_aps(data.probs, ids, params);
      case ScoreKind::RAPS: return score_raps(data.probs, ids, params);
      case ScoreKind::DAPS: break;
    }
    throw ValidationError("DAPS needs a point score as its base");
  };
  if (params.kind != ScoreKind::DAPS) return point(params.kind);
  if (!data.graph) throw ValidationError("DAPS requires a graph (edge list) for the dataset");
  return score_daps(point(params.daps_base), *data.graph, params.daps_delta);
}

}  // namespace cfair
