#include "cfair/report.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cfair {

namespace {

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown config key '" + key + "' in " + where);
  }
}

template <class T>
void read(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <class T>
void read_optional(const Json& obj, const char* key, std::optional<T>& out) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v);
  out = std::move(v);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string group_name(const GroupAssignment& groups, int g) {
  return g >= 0 && static_cast<std::size_t>(g) < groups.group_names.size()
             ? groups.group_names[static_cast<std::size_t>(g)]
             : std::to_string(g);
}

SynthConfig parse_synth(const Json& j, SynthConfig s) {
  reject_unknown(j, {"n", "num_classes", "attributes", "signal", "noise", "temperature", "label_priors",
                     "unlabeled_fraction", "graph", "p_in", "p_out", "seed"},
                 "synth");
  read(j, "n", s.n);
  read(j, "num_classes", s.num_classes);
  read(j, "signal", s.signal);
  read(j, "noise", s.noise);
  read(j, "temperature", s.temperature);
  read(j, "label_priors", s.label_priors);
  read(j, "unlabeled_fraction", s.unlabeled_fraction);
  read(j, "graph", s.graph);
  read(j, "p_in", s.p_in);
  read(j, "p_out", s.p_out);
  read(j, "seed", s.seed);
  if (j.contains("attributes")) {
    s.attributes.clear();
    for (const auto& a : j.at("attributes")) {
      reject_unknown(a, {"name", "proportions", "bias"}, "synth.attributes");
      SynthAttribute at;
      read(a, "name", at.name);
      read(a, "proportions", at.proportions);
      at.bias.assign(at.proportions.size(), 0.0);
      read(a, "bias", at.bias);
      s.attributes.push_back(std::move(at));
    }
  }
  return s;
}

}  // namespace

FairnessSpec RunConfig::fairness_spec(int num_classes) const {
  FairnessSpec spec;
  spec.metric = metric;
  spec.closeness = closeness;
  spec.alpha = alpha;
  spec.classwise = classwise;
  spec.labels = positive_labels ? LabelSet(num_classes, *positive_labels) : LabelSet::all(num_classes);
  spec.ratio_variant = ratio_variant;
  spec.degenerate = degenerate;
  spec.validate();
  return spec;
}

RunConfig parse_config(const Json& doc) {
  reject_unknown(doc,
                 {"metric", "c", "alpha", "score", "score_params", "classwise", "intersectional", "seed",
                  "lambda_grid", "positive_labels", "group_attribute", "split", "resplit",
                  "degenerate_policy", "ratio_variant", "lambda", "audit_split", "exhaustive", "threads",
                  "gcp", "synth"},
                 "config");
  RunConfig c;
  std::string s;
  if (doc.contains("metric")) {
    read(doc, "metric", s);
    c.metric = parse_metric(s);
  }
  read(doc, "c", c.closeness);
  read(doc, "alpha", c.alpha);
  read(doc, "classwise", c.classwise);
  read(doc, "intersectional", c.groups.intersectional);
  read_optional(doc, "group_attribute", c.groups.attribute);
  read(doc, "seed", c.seed);
  read_optional(doc, "lambda_grid", c.lambda_grid);
  read_optional(doc, "positive_labels", c.positive_labels);
  if (doc.contains("split")) {
    std::vector<double> f;
    read(doc, "split", f);
    if (f.size() != 4) throw ValidationError("config key 'split' needs four fractions (train, valid, calib, test)");
    std::copy(f.begin(), f.end(), c.split.begin());
  }
  read(doc, "resplit", c.resplit);
  if (doc.contains("degenerate_policy")) {
    read(doc, "degenerate_policy", s);
    c.degenerate = parse_degenerate_policy(s);
  }
  if (doc.contains("ratio_variant")) {
    read(doc, "ratio_variant", s);
    c.ratio_variant = parse_ratio_variant(s);
  }
  if (doc.contains("lambda") && !doc.at("lambda").is_null()) {
    if (doc.at("lambda").is_number()) {
      c.lambda = std::vector<double>{doc.at("lambda").get<double>()};
    } else {
      read_optional(doc, "lambda", c.lambda);
    }
  }
  if (doc.contains("audit_split") && !doc.at("audit_split").is_null()) {
    read(doc, "audit_split", s);
    c.audit_split = parse_split(s);
  }
  read(doc, "exhaustive", c.search.exhaustive);
  read(doc, "threads", c.search.threads);
  if (c.search.threads == 0) throw ValidationError("threads must be at least 1");

  if (doc.contains("score")) {
    read(doc, "score", s);
    c.score.kind = parse_score_kind(s);
  }
  if (doc.contains("score_params")) {
    const auto& p = doc.at("score_params");
    reject_unknown(p, {"randomized", "nu", "k_reg", "delta", "base"}, "score_params");
    read(p, "randomized", c.score.aps_randomized);
    read(p, "nu", c.score.raps_nu);
    read(p, "k_reg", c.score.raps_kreg);
    read(p, "delta", c.score.daps_delta);
    if (p.contains("base")) {
      read(p, "base", s);
      c.score.daps_base = parse_score_kind(s);
    }
  }
  c.score.seed = c.seed;
  c.score.validate();

  if (doc.contains("gcp")) {
    const auto& g = doc.at("gcp");
    reject_unknown(g, {"max_iterations", "tolerance"}, "gcp");
    read(g, "max_iterations", c.gcp.max_iterations);
    read(g, "tolerance", c.gcp.tolerance);
  }
  c.synth.seed = c.seed;
  if (doc.contains("synth")) c.synth = parse_synth(doc.at("synth"), c.synth);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (!(c.closeness > 0.0 && c.closeness <= 1.0)) throw ValidationError("c must lie in (0, 1]");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path.string() + "'", 0);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed config JSON: ") + e.what(), 0);
  }
  return parse_config(doc);
}

Json to_json(const RunConfig& c) {
  Json j;
  j["metric"] = std::string(to_string(c.metric));
  j["c"] = c.closeness;
  j["alpha"] = c.alpha;
  j["classwise"] = c.classwise;
  j["positive_labels"] = c.positive_labels ? Json(*c.positive_labels) : Json(nullptr);
  j["ratio_variant"] = std::string(to_string(c.ratio_variant));
  j["degenerate_policy"] = std::string(to_string(c.degenerate));
  j["intersectional"] = c.groups.intersectional;
  j["group_attribute"] = c.groups.attribute ? Json(*c.groups.attribute) : Json(nullptr);
  j["score"] = std::string(to_string(c.score.kind));
  j["score_params"] = {{"randomized", c.score.aps_randomized},
                       {"nu", c.score.raps_nu},
                       {"k_reg", c.score.raps_kreg},
                       {"delta", c.score.daps_delta},
                       {"base", std::string(to_string(c.score.daps_base))}};
  j["seed"] = c.seed;
  j["lambda_grid"] = c.lambda_grid ? Json(*c.lambda_grid) : Json(nullptr);
  j["split"] = std::vector<double>(c.split.begin(), c.split.end());
  j["resplit"] = c.resplit;
  j["exhaustive"] = c.search.exhaustive;
  j["threads"] = c.search.threads;
  return j;
}

Json to_json(const CoverageInterval& c) {
  return {{"lower", c.lower}, {"upper", c.upper}, {"width", c.width}};
}

Json to_json(const DisparityReport& r, const GroupAssignment& groups) {
  Json j;
  j["metric"] = std::string(to_string(r.metric));
  j["mode"] = std::string(to_string(r.mode));
  if (r.mode == ComparisonMode::Ratio) j["ratio_variant"] = std::string(to_string(r.ratio_variant));
  j["closeness"] = r.closeness;
  j["satisfied"] = r.satisfied;
  j["worst_disparity"] = r.worst_disparity;
  j["labels"] = Json::array();
  for (const auto& l : r.labels) {
    Json e;
    e["component"] = std::string(to_string(l.component));
    e["label"] = l.label;
    e["alpha_min"] = l.alpha_min;
    e["alpha_max"] = l.alpha_max;
    e[r.mode == ComparisonMode::Ratio ? "ratio" : "gap"] = l.value;
    e["satisfied"] = l.satisfied;
    e["groups_compared"] = l.groups_compared;
    if (!l.missing_groups.empty()) {
      Json missing = Json::array();
      for (int g : l.missing_groups) missing.push_back(group_name(groups, g));
      e["missing_groups"] = missing;
    }
    j["labels"].push_back(std::move(e));
  }
  j["slices"] = Json::array();
  for (const auto& s : r.slices) {
    Json e;
    e["component"] = std::string(to_string(s.component));
    e["group"] = group_name(groups, s.group);
    e["label"] = s.label;
    e["size"] = s.size;
    e["hits"] = s.hits;
    e["coverage"] = to_json(s.coverage);
    if (s.degenerate) e["degenerate"] = true;
    j["slices"].push_back(std::move(e));
  }
  if (!r.proxy_cells.empty()) {
    j["proxy_cells"] = Json::array();
    for (const auto& p : r.proxy_cells) {
      j["proxy_cells"].push_back({{"group", group_name(groups, p.group)},
                                  {"label", p.label},
                                  {"members", p.members},
                                  {"label_count", p.label_count},
                                  {"in_set", p.in_set},
                                  {"in_set_correct", p.in_set_correct},
                                  {"prior", p.prior},
                                  {"ppv", optional_json(p.ppv)},
                                  {"proxy", optional_json(p.proxy)}});
    }
  }
  j["warnings"] = r.warnings;
  return j;
}

Json thresholds_json(const Thresholds& t) {
  if (t.values().empty()) return nullptr;
  return t.shared() ? Json(t.values().front()) : Json(t.values());
}

Json to_json(const ThresholdResult& r, const GroupAssignment& groups) {
  Json j;
  j["status"] = r.found() ? "found" : "no_satisfying_threshold";
  j["lambda"] = r.found() ? thresholds_json(r.lambda) : Json(nullptr);
  j["qhat"] = r.qhat;
  j["candidates"] = r.candidates;
  j["tested"] = r.tested;
  j["satisfying_count"] = r.satisfying_count ? Json(*r.satisfying_count) : Json(nullptr);
  j["best_candidate"] = optional_json(r.best_candidate);
  if (!r.per_class.empty()) {
    j["per_class"] = Json::array();
    for (const auto& c : r.per_class) {
      j["per_class"].push_back({{"label", c.label},
                                {"status", c.status == SearchStatus::Found ? "found" : "no_satisfying_threshold"},
                                {"lambda", optional_json(c.lambda)},
                                {"best_candidate", optional_json(c.best_candidate)},
                                {"tested", c.tested},
                                {"satisfying_count", c.satisfying_count ? Json(*c.satisfying_count) : Json(nullptr)}});
    }
  }
  if (!r.verdicts.empty()) {
    j["verdicts"] = Json::array();
    for (const auto& v : r.verdicts) {
      j["verdicts"].push_back({{"lambda", v.lambda}, {"satisfied", v.satisfied}, {"worst_disparity", v.worst_disparity}});
    }
  }
  j["report"] = to_json(r.report, groups);
  return j;
}

Json to_json(const SetEvaluation& e, const GroupAssignment& groups) {
  Json j;
  j["items"] = e.items;
  j["coverage"] = e.coverage;
  j["efficiency"] = e.efficiency;
  j["worst_disparity"] = e.worst_disparity;
  j["demographic_parity_gap"] = e.demographic_parity_gap;
  j["disparate_impact_ratio"] = e.disparate_impact_ratio;
  Json gc = Json::array();
  for (std::size_t g = 0; g < e.group_coverage.size(); ++g) {
    gc.push_back({{"group", group_name(groups, static_cast<int>(g))},
                  {"size", e.group_sizes[g]},
                  {"coverage", e.group_coverage[g]}});
  }
  j["group_coverage"] = gc;
  j["slices"] = Json::array();
  for (const auto& s : e.slices) {
    j["slices"].push_back({{"component", std::string(to_string(s.component))},
                           {"group", group_name(groups, s.group)},
                           {"label", s.label},
                           {"size", s.size},
                           {"hits", s.hits},
                           {"rate", s.rate}});
  }
  return j;
}

Json to_json(const AuditVerdict& v, const GroupAssignment& groups) {
  Json j;
  j["pass"] = v.pass;
  j["spec"] = {{"metric", std::string(to_string(v.spec.metric))},
               {"c", v.spec.closeness},
               {"alpha", v.spec.alpha},
               {"positive_labels", v.spec.labels.positive()},
               {"ratio_variant", std::string(to_string(v.spec.ratio_variant))},
               {"degenerate_policy", std::string(to_string(v.spec.degenerate))}};
  j["report"] = to_json(v.report, groups);
  j["evidence"] = Json::array();
  for (const auto& e : v.evidence) {
    j["evidence"].push_back({{"component", std::string(to_string(e.component))},
                             {"group", group_name(groups, e.group)},
                             {"label", e.label},
                             {"size", e.size},
                             {"hits", e.hits}});
  }
  return j;
}

Json to_json(const GcpFit& fit) {
  Json j;
  j["f"] = fit.model.base;
  Json offsets = Json::object();
  for (std::size_t g = 0; g < fit.model.offsets.size(); ++g) offsets[fit.model.group_names[g]] = fit.model.offsets[g];
  j["lambda"] = offsets;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["objective"] = fit.objective;
  j["warnings"] = fit.warnings;
  return j;
}

Json to_json(const GcpEvaluation& e, const GroupMembership& membership, const GroupAssignment& groups) {
  Json j;
  j["requires_group_information"] = e.requires_group_information;
  Json gc = Json::array();
  for (std::size_t g = 0; g < e.group_coverage.size(); ++g) {
    gc.push_back({{"group", membership.names[g]}, {"size", e.group_sizes[g]}, {"coverage", e.group_coverage[g]}});
  }
  j["group_coverage"] = gc;
  j["test"] = to_json(e.sets, groups);
  j["demographic_parity"] = to_json(e.demographic_parity, groups);
  return j;
}

}  // namespace cfair
