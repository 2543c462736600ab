#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cfair/cli.hpp"
#include "helpers.hpp"

using namespace cfair;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

nlohmann::json strip_time(nlohmann::json j) {
  j.erase("wall_time_seconds");
  return j;
}

struct Workspace {
  fs::path dir;
  fs::path data;
  fs::path config;
};

Workspace workspace(const std::string& name, const std::string& extra = "") {
  Workspace w;
  w.dir = test::tmp_dir(name);
  w.data = w.dir / "data.json";
  w.config = w.dir / "config.json";
  write(w.config, R"({"metric": "demographic_parity", "c": 0.1, "alpha": 0.1, "seed": 3)" + extra +
                      R"(, "synth": {"n": 1500, "num_classes": 3,
                       "attributes": [{"name": "group", "proportions": [0.5, 0.5], "bias": [0, -1]}]}})");
  const auto r = run({"synth", "--config", w.config.string(), "--out", w.data.string()});
  REQUIRE(r.code == 0);
  return w;
}

}  // namespace

TEST_CASE("cli usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"calibrate"}).code == 1);
  CHECK(run({"calibrate", "--data", "/nonexistent/x.json"}).code == 1);
  CHECK(run({"calibrate", "--format", "xml"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"synth"}).code == 1);
}

TEST_CASE("calibrate exit codes and determinism") {
  const auto w = workspace("cli_cal");
  const auto a = run({"calibrate", "--config", w.config.string(), "--data", w.data.string()});
  REQUIRE(a.code == 0);
  const auto ja = nlohmann::json::parse(a.out);
  CHECK(ja["result"]["status"] == "found");
  CHECK(ja.contains("wall_time_seconds"));
  CHECK(ja["result"]["lambda"].get<double>() >= ja["result"]["qhat"].get<double>());
  const auto b = run({"calibrate", "--config", w.config.string(), "--data", w.data.string()});
  CHECK(strip_time(ja) == strip_time(nlohmann::json::parse(b.out)));

  write(w.dir / "tight.json", R"({"metric": "demographic_parity", "c": 0.000001, "seed": 3})");
  const auto t = run({"calibrate", "--config", (w.dir / "tight.json").string(), "--data", w.data.string()});
  CHECK(t.code == 2);
  CHECK(nlohmann::json::parse(t.out)["result"]["status"] == "no_satisfying_threshold");

  write(w.dir / "unknown.json", R"({"metric": "demographic_parity", "colour": 1})");
  const auto u = run({"calibrate", "--config", (w.dir / "unknown.json").string(), "--data", w.data.string()});
  CHECK(u.code == 1);
  CHECK(u.err.find("colour") != std::string::npos);

  const auto csv = run({"calibrate", "--config", w.config.string(), "--data", w.data.string(), "--format", "csv"});
  CHECK(csv.code == 0);
  CHECK(csv.out.rfind("scope,component,group,label,size,hits,value,lower,upper", 0) == 0);

  const auto file = w.dir / "report.json";
  CHECK(run({"calibrate", "--config", w.config.string(), "--data", w.data.string(), "--out", file.string()}).code ==
        0);
  CHECK(fs::file_size(file) > 0);
}

TEST_CASE("audit exit codes") {
  const auto w = workspace("cli_audit");
  const auto cal = nlohmann::json::parse(run({"calibrate", "--config", w.config.string(), "--data", w.data.string()}).out);
  const double lambda = cal["result"]["lambda"];

  nlohmann::json cfg = {{"metric", "demographic_parity"}, {"c", 0.1}, {"seed", 3}, {"lambda", lambda}};
  write(w.dir / "audit.json", cfg.dump());
  const auto pass = run({"audit", "--config", (w.dir / "audit.json").string(), "--data", w.data.string()});
  CHECK(pass.code == 0);
  CHECK(nlohmann::json::parse(pass.out)["verdict"]["pass"] == true);

  write(w.dir / "sets.csv", "item_id,labels\n");
  const auto missing = run({"audit", "--config", (w.dir / "audit.json").string(), "--data", w.data.string(),
                            "--sets", (w.dir / "sets.csv").string()});
  CHECK(missing.code == 1);

  cfg["c"] = 1e-6;
  write(w.dir / "low.json", cfg.dump());
  const auto low = run({"audit", "--config", (w.dir / "low.json").string(), "--data", w.data.string()});
  CHECK(low.code == 2);

  cfg.erase("lambda");
  write(w.dir / "none.json", cfg.dump());
  CHECK(run({"audit", "--config", (w.dir / "none.json").string(), "--data", w.data.string()}).code == 1);
}

TEST_CASE("compare-gcp report") {
  const auto w = workspace("cli_gcp");
  const auto r = run({"compare-gcp", "--config", w.config.string(), "--data", w.data.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["cf"]["requires_group_information"] == false);
  CHECK(j["batchgcp"]["evaluation"].contains("requires_group_information"));
  const auto csv = run({"compare-gcp", "--config", w.config.string(), "--data", w.data.string(), "--format", "csv"});
  CHECK(csv.out.rfind("method,quantity,group,value\n", 0) == 0);
  CHECK(csv.out.find("batchgcp,coverage") != std::string::npos);
}

TEST_CASE("synth writes csv directories") {
  const auto dir = test::tmp_dir("cli_synth_csv");
  write(dir / "c.json", R"({"seed": 1, "synth": {"n": 200}})");
  const auto r = run({"synth", "--config", (dir / "c.json").string(), "--out", (dir / "d").string(), "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "d" / "items.csv"));
  CHECK(fs::exists(dir / "d" / "probs.csv"));
  const auto cal = run({"calibrate", "--config", (dir / "c.json").string(), "--data", (dir / "d").string()});
  CHECK(cal.code != 1);
}
