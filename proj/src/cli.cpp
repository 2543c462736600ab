#include "cfair/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cfair/data_io.hpp"
#include "cfair/report.hpp"

namespace cfair {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string data;
  std::string scores;
  std::string sets;
  std::string out;
  std::string format;
};

std::shared_ptr<spdlog::logger> logger() {
  if (auto l = spdlog::get("cfair")) return l;
  auto l = spdlog::stderr_color_mt("cfair");
  l->set_pattern("[%l] %v");
  const char* env = std::getenv("CFAIR_LOG_LEVEL");
  l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  return l;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

DataFormat report_format(const Options& o) {
  return o.format.empty() ? DataFormat::Json : parse_data_format(o.format);
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  const fs::path p(o.out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write '" + o.out + "'");
  f << text;
}

RunConfig config_of(const Options& o) {
  return o.config.empty() ? RunConfig{} : load_config(o.config);
}

Dataset data_of(const Options& o) {
  if (o.data.empty()) throw ValidationError("--data is required");
  return load_dataset(o.data);
}

bool has_split_tags(const Dataset& data) {
  for (const auto& it : data.items) {
    if (it.label && it.split != Split::Unassigned) return true;
  }
  return false;
}

void ensure_split(Dataset& data, const RunConfig& cfg) {
  if (cfg.resplit || !has_split_tags(data)) {
    logger()->info("assigning stratified train/valid/calib/test split with seed {}", cfg.seed);
    data = stratified_split(std::move(data), cfg.split, cfg.seed);
  }
}

ScoreTable scores_of(const Options& o, const Dataset& data, const RunConfig& cfg) {
  if (!o.scores.empty()) return load_scores(o.scores, data);
  return compute_scores(data, cfg.score);
}

Json data_summary(const Dataset& data, const GroupAssignment& groups) {
  Json splits = Json::object();
  for (Split s : {Split::Train, Split::Valid, Split::Calib, Split::Test}) {
    splits[std::string(to_string(s))] = data.indices_in(s).size();
  }
  return {{"items", data.size()},
          {"classes", data.num_classes},
          {"groups", groups.group_names},
          {"split_sizes", splits}};
}

void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) logger()->warn("{}", w);
}

std::string finish_json(Json doc, Clock::time_point start) {
  doc["wall_time_seconds"] = seconds_since(start);
  return doc.dump(2) + "\n";
}

std::string slice_row(const std::string& scope, Metric component, const std::string& group, int label,
                      std::size_t size, std::size_t hits, double value, double lower, double upper) {
  return scope + "," + std::string(to_string(component)) + "," + group + "," + std::to_string(label) + "," +
         std::to_string(size) + "," + std::to_string(hits) + "," + format_double(value) + "," +
         format_double(lower) + "," + format_double(upper) + "\n";
}

constexpr const char* kSliceHeader = "scope,component,group,label,size,hits,value,lower,upper\n";

std::string slices_csv(const std::string& scope, const DisparityReport& r, const GroupAssignment& groups) {
  std::string out;
  for (const auto& s : r.slices) {
    out += slice_row(scope, s.component, groups.group_names[static_cast<std::size_t>(s.group)], s.label, s.size,
                     s.hits, s.coverage.lower, s.coverage.lower, s.coverage.upper);
  }
  return out;
}

std::string rates_csv(const std::string& scope, const SetEvaluation& e, const GroupAssignment& groups) {
  std::string out;
  for (const auto& s : e.slices) {
    out += slice_row(scope, s.component, groups.group_names[static_cast<std::size_t>(s.group)], s.label, s.size,
                     s.hits, s.rate, s.rate, s.rate);
  }
  return out;
}

// Shared by calibrate and compare-gcp.
struct CalibrationRun {
  Dataset data;
  GroupAssignment groups;
  ScoreTable table;
  FairnessSpec spec;
  Cohort calib;
  Cohort test;
  ThresholdResult result;
  std::optional<SetEvaluation> test_eval;
  double qhat = 0.0;
  DisparityReport baseline_report;
  std::optional<SetEvaluation> baseline_test;
};

CalibrationRun run_calibration(const Options& o, const RunConfig& cfg) {
  CalibrationRun run;
  run.data = data_of(o);
  ensure_split(run.data, cfg);
  run.groups = make_group_assignment(run.data, cfg.groups);
  run.table = scores_of(o, run.data, cfg);
  run.spec = cfg.fairness_spec(run.data.num_classes);
  run.calib = make_cohort(run.data, run.groups, Split::Calib);
  run.test = make_cohort(run.data, run.groups, Split::Test);
  if (run.calib.items.empty()) throw ValidationError("no labeled items in the calibration split");
  logger()->info("calibrating {} on {} calibration items", to_string(run.spec.metric), run.calib.items.size());

  const FairnessProblem problem(run.calib, run.table, run.spec, cfg.lambda_grid);
  run.result = calibrate(problem, cfg.search);
  log_warnings(run.result.report.warnings);
  run.qhat = problem.qhat();
  run.baseline_report = satisfy_lambda(problem, run.qhat).report;
  if (!run.test.items.empty()) {
    if (run.result.found()) {
      run.test_eval = evaluate_sets(run.test, score_membership(run.table, run.result.lambda), run.spec);
    }
    run.baseline_test = evaluate_sets(run.test, score_membership(run.table, Thresholds(run.qhat)), run.spec);
  } else {
    logger()->warn("test split is empty; held-out metrics are omitted");
  }
  return run;
}

Json optional_eval(const std::optional<SetEvaluation>& e, const GroupAssignment& groups) {
  return e ? to_json(*e, groups) : Json(nullptr);
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const RunConfig cfg = config_of(o);
  const auto format = report_format(o);
  const CalibrationRun run = run_calibration(o, cfg);

  if (format == DataFormat::Json) {
    Json doc;
    doc["command"] = "calibrate";
    doc["config"] = to_json(cfg);
    doc["data"] = data_summary(run.data, run.groups);
    doc["result"] = to_json(run.result, run.groups);
    doc["marginal_coverage_lower_bound"] = 1.0 - run.spec.alpha;
    doc["test"] = optional_eval(run.test_eval, run.groups);
    doc["baseline"] = {{"lambda", run.qhat},
                       {"calibration", to_json(run.baseline_report, run.groups)},
                       {"test", optional_eval(run.baseline_test, run.groups)}};
    emit(o, finish_json(std::move(doc), start), out);
  } else {
    std::string csv = kSliceHeader;
    csv += slices_csv("calib", run.result.report, run.groups);
    if (run.test_eval) csv += rates_csv("test", *run.test_eval, run.groups);
    emit(o, csv, out);
  }
  if (!run.result.found()) {
    logger()->warn("no threshold in the search space satisfies the fairness criterion");
    return kExitUnsatisfied;
  }
  return kExitOk;
}

Cohort audit_cohort(const Dataset& data, const GroupAssignment& groups, const RunConfig& cfg) {
  if (cfg.audit_split) return make_cohort(data, groups, *cfg.audit_split);
  if (!data.indices_in(Split::Calib).empty()) return make_cohort(data, groups, Split::Calib);
  return make_cohort(data, groups, data.labeled_indices());
}

int cmd_audit(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const RunConfig cfg = config_of(o);
  const auto format = report_format(o);
  const Dataset data = data_of(o);
  const GroupAssignment groups = make_group_assignment(data, cfg.groups);
  const FairnessSpec spec = cfg.fairness_spec(data.num_classes);
  const Cohort cohort = audit_cohort(data, groups, cfg);
  if (cohort.items.empty()) throw ValidationError("audit set is empty");

  AuditVerdict verdict;
  Json lambda = nullptr;
  std::string source;
  if (!o.sets.empty()) {
    source = "sets";
    verdict = audit_sets(cohort, load_prediction_sets(o.sets, data), spec);
  } else {
    if (!cfg.lambda) throw ValidationError("audit needs --sets or a 'lambda' entry in the config");
    Thresholds t;
    if (cfg.lambda->size() == 1) {
      t = Thresholds(cfg.lambda->front());
    } else if (cfg.lambda->size() == static_cast<std::size_t>(data.num_classes)) {
      t = Thresholds(*cfg.lambda);
    } else {
      throw ValidationError("'lambda' must hold one value or one per class");
    }
    source = "lambda";
    lambda = thresholds_json(t);
    const ScoreTable table = scores_of(o, data, cfg);
    verdict = audit_lambda(cohort, table, spec, t);
  }
  log_warnings(verdict.report.warnings);

  if (format == DataFormat::Json) {
    Json doc;
    doc["command"] = "audit";
    doc["config"] = to_json(cfg);
    doc["audit_items"] = cohort.items.size();
    doc["source"] = source;
    doc["lambda"] = lambda;
    doc["verdict"] = to_json(verdict, groups);
    emit(o, finish_json(std::move(doc), start), out);
  } else {
    std::string csv = kSliceHeader;
    csv += slices_csv("audit", verdict.report, groups);
    emit(o, csv, out);
  }
  return verdict.pass ? kExitOk : kExitUnsatisfied;
}

std::string long_row(const std::string& method, const std::string& quantity, const std::string& group,
                     double value) {
  return method + "," + quantity + "," + group + "," + format_double(value) + "\n";
}

std::string summary_csv(const std::string& method, const SetEvaluation& e,
                        const std::vector<std::string>& group_names) {
  std::string out;
  out += long_row(method, "coverage", "", e.coverage);
  out += long_row(method, "efficiency", "", e.efficiency);
  out += long_row(method, "demographic_parity_gap", "", e.demographic_parity_gap);
  out += long_row(method, "disparate_impact_ratio", "", e.disparate_impact_ratio);
  for (std::size_t g = 0; g < e.group_coverage.size(); ++g) {
    out += long_row(method, "group_coverage", group_names[g], e.group_coverage[g]);
  }
  return out;
}

int cmd_compare_gcp(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const RunConfig cfg = config_of(o);
  const auto format = report_format(o);
  const CalibrationRun run = run_calibration(o, cfg);
  if (run.test.items.empty()) throw ValidationError("compare-gcp needs a non-empty test split");

  const GroupMembership membership = disjoint_membership(run.groups);
  const GcpFit fit = fit_batchgcp(run.calib, run.table, membership, run.spec.alpha, cfg.gcp);
  log_warnings(fit.warnings);
  const GcpEvaluation gcp = evaluate_batchgcp(fit.model, run.test, run.table, membership, run.spec);

  if (format == DataFormat::Json) {
    Json doc;
    doc["command"] = "compare-gcp";
    doc["config"] = to_json(cfg);
    doc["data"] = data_summary(run.data, run.groups);
    doc["cf"] = {{"result", to_json(run.result, run.groups)},
                 {"requires_group_information", false},
                 {"test", optional_eval(run.test_eval, run.groups)}};
    doc["batchgcp"] = {{"model", to_json(fit)}, {"evaluation", to_json(gcp, membership, run.groups)}};
    emit(o, finish_json(std::move(doc), start), out);
  } else {
    std::string csv = "method,quantity,group,value\n";
    if (run.test_eval) csv += summary_csv("cf", *run.test_eval, run.groups.group_names);
    csv += summary_csv("batchgcp", gcp.sets, run.groups.group_names);
    emit(o, csv, out);
  }
  return run.result.found() ? kExitOk : kExitUnsatisfied;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const RunConfig cfg = config_of(o);
  if (o.out.empty()) throw ValidationError("synth needs --out");
  const DataFormat format = o.format.empty() ? guess_data_format(o.out) : parse_data_format(o.format);
  Dataset data = stratified_split(generate(cfg.synth), cfg.split, cfg.seed);
  save_dataset(data, o.out, format);
  logger()->info("wrote {} items to {}", data.size(), o.out);
  Json doc;
  doc["command"] = "synth";
  doc["items"] = data.size();
  doc["classes"] = data.num_classes;
  doc["format"] = std::string(to_string(format));
  doc["path"] = o.out;
  out << doc.dump(2) << "\n";
  return kExitOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON run configuration");
  sub->add_option("--data", o.data, "dataset directory (CSV) or .json file");
  sub->add_option("--scores", o.scores, "precomputed score table CSV (id,s0,...)");
  sub->add_option("--sets", o.sets, "explicit prediction sets CSV (item_id,labels)");
  sub->add_option("--out", o.out, "output path (default: stdout)");
  sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibrate and audit conformal prediction thresholds under group-fairness criteria", "cfair"};
  app.require_subcommand(1);
  Options o;
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
  auto* calibrate_cmd = app.add_subcommand("calibrate", "search the smallest fair threshold");
  auto* audit = app.add_subcommand("audit", "check a threshold or explicit prediction sets");
  auto* compare = app.add_subcommand("compare-gcp", "compare against the BatchGCP baseline");
  for (auto* sub : {synth, calibrate_cmd, audit, compare}) add_common(sub, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (calibrate_cmd->parsed()) return cmd_calibrate(o, out);
    if (audit->parsed()) return cmd_audit(o, out);
    return cmd_compare_gcp(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace cfair
