#include "ryam/experiments.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

using namespace ryam;

namespace {

std::string read_config(const std::string& name) {
  std::ifstream in(std::string(RYAM_CONFIG_DIR) + "/" + name, std::ios::binary);
  REQUIRE(in);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("experiment names round-trip") {
  for (Experiment e : {Experiment::Curvature, Experiment::Cutoff, Experiment::ApproxStudy, Experiment::Variation,
                       Experiment::Glue, Experiment::Eigen, Experiment::Yamabe, Experiment::Sandwich,
                       Experiment::DoubleCheck, Experiment::PscPath})
    CHECK(parse_experiment(experiment_name(e)) == e);
  CHECK(parse_experiment("approx-study") == Experiment::ApproxStudy);
  CHECK_FALSE(parse_experiment("approx_study").has_value());
  CHECK_FALSE(parse_experiment("").has_value());
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.0) == "-2");
  CHECK(format_double(0.25 * std::exp(-4.0)) == "0.004578909722183545");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  const double x = 1.0 / 3.0;
  CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("config hash ignores formatting") {
  const std::string a = config_hash(R"({"name": "x", "seed": 3})");
  CHECK(a.size() == 16);
  CHECK(a == config_hash("{\n  \"seed\": 3,\n  \"name\": \"x\"\n}\n"));
  CHECK(a != config_hash(R"({"name": "x", "seed": 4})"));
}

TEST_CASE("malformed configs are config errors") {
  CHECK_THROWS_AS(run_experiment(Experiment::Cutoff, "{ not json"), ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Cutoff, "[1, 2]"), ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Cutoff, R"({"name": "c", "deltas": [0.1, 0.25]})"), ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Cutoff, R"({"name": "c", "deltas": "0.1"})"), ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Cutoff, R"({"name": "../c", "deltas": [0.25]})"), ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Cutoff, R"({"experiment": "eigen", "deltas": [0.25]})"), ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Curvature, R"({"manifold": {"kind": "klein-bottle"}})"), ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Curvature,
                                 R"({"manifold": {"kind": "torus-block", "dim": 3, "resolution": [8, 8]},
                                     "metric": {"type": "flat"}})"),
                  ConfigError);
  CHECK_THROWS_AS(run_experiment(Experiment::Curvature,
                                 R"({"manifold": {"kind": "torus-block", "dim": 3, "resolution": [8, 8, 8]},
                                     "metric": {"type": "round-cap"}})"),
                  ConfigError);
}

TEST_CASE("cutoff experiment output") {
  const RunOutput out = run_experiment(Experiment::Cutoff, read_config("cutoff.json"));
  CHECK(out.name == "cutoff");
  CHECK(out.csv.find("\n0.25,0.004578909722183545,") != std::string::npos);
  const nlohmann::json j = nlohmann::json::parse(out.json);
  CHECK(j["experiment"] == "cutoff");
  CHECK(j["config_hash"] == config_hash(read_config("cutoff.json")));
  CHECK(j["all_hold"] == out.all_hold());
  for (const auto& v : j["verdicts"]) {
    REQUIRE(v.contains("lhs"));
    REQUIRE(v.contains("rhs"));
    REQUIRE(v.contains("tolerance"));
    REQUIRE(v.contains("holds"));
  }
  // |t w'| peaks at (4/3) / log(delta/eps): below delta at 0.5, above it from 0.25 down.
  int seen = 0;
  for (const Verdict& v : out.verdicts) {
    if (v.name == "t_dw[delta=0.5]") {
      ++seen;
      CHECK(v.holds);
    }
    if (v.name == "t_dw[delta=0.25]") {
      ++seen;
      CHECK(v.lhs == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
      CHECK_FALSE(v.holds);
    }
  }
  CHECK(seen == 2);
}

TEST_CASE("runs are deterministic") {
  const std::string cfg = read_config("eigen.json");
  const RunOutput a = run_experiment(Experiment::Eigen, cfg);
  const RunOutput b = run_experiment(Experiment::Eigen, cfg);
  CHECK(a.csv == b.csv);
  CHECK(a.json == b.json);
  CHECK(a.all_hold());
}

TEST_CASE("flat curvature run") {
  const RunOutput out = run_experiment(Experiment::Curvature, read_config("flat.json"));
  CHECK(out.all_hold());
  CHECK(out.csv.rfind("refine,h,nodes,min_R,max_R,max_err\n", 0) == 0);
}

TEST_CASE("all_hold ignores inapplicable verdicts") {
  RunOutput out;
  out.verdicts.push_back(make_verdict("a", 0.0, 1.0, 0.0));
  Verdict na = make_verdict("b", 2.0, 1.0, 0.0);
  na.applicable = false;
  out.verdicts.push_back(na);
  CHECK(out.all_hold());
  out.verdicts.push_back(make_verdict("c", 2.0, 1.0, 0.5));
  CHECK_FALSE(out.all_hold());
}
