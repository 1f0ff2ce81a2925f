#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tcdp/run.hpp"

using namespace tcdp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
  return json::parse(R"({
    "run_id": "unit",
    "model": "no_consumption",
    "market": {"r": 0.03, "mu": [0.07, 0.07], "sigma": 0.2, "tau": 0.002},
    "preferences": {"gamma": 3},
    "discretization": {"horizon": 2, "dt": 1, "degree": 5},
    "diagnostics": {"ntr_resolution": 21, "ce_points": [0.3], "policy_error": true, "policy_probes": 100}
  })");
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tcdp_run_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json without_run_section(const fs::path& p) {
  auto j = json::parse(slurp(p));
  j.erase("run");
  return j;
}

}  // namespace

TEST(Config, ParsesAndEchoesRoundTrip) {
  const auto cfg = parse_config(small_config());
  EXPECT_EQ(cfg.kind, ModelKind::NoConsumption);
  EXPECT_EQ(cfg.portfolio.periods(), 2);
  EXPECT_EQ(cfg.portfolio.chain.states[0].sigma, (std::vector<double>{0.2, 0.2}));
  const auto echo = cfg.to_json();
  EXPECT_EQ(parse_config(echo).to_json(), echo);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto j = small_config();
  j["market"]["drift"] = 1;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_config();
  j["extra"] = true;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_config();
  j["discretization"]["horizon"] = 1.5;
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "horizon not integer periods");
  }
  j = small_config();
  j["model"] = "lifecycle";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_config();
  j["market"]["sigma"] = "high";
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, FactorsComposeByKroneckerProduct) {
  auto j = small_config();
  j["market"]["factors"] = json::parse(R"([
    {"param": "r", "values": [0.03, 0.04, 0.05], "transition": [[0.6, 0.4, 0], [0.2, 0.6, 0.2], [0, 0.4, 0.6]]},
    {"param": "sigma", "asset": 1, "values": [0.16, 0.24], "transition": [[0.75, 0.25], [0.25, 0.75]]}
  ])");
  const auto cfg = parse_config(j);
  ASSERT_EQ(cfg.portfolio.chain.size(), 6u);
  EXPECT_EQ(cfg.portfolio.chain.states[3].r, 0.04);
  EXPECT_EQ(cfg.portfolio.chain.states[3].sigma[1], 0.24);
  // State index = 2 * (r index) + (sigma index).
  EXPECT_DOUBLE_EQ(cfg.portfolio.chain.transition(3, 5), 0.2 * 0.75);
  EXPECT_DOUBLE_EQ(cfg.portfolio.chain.transition(2, 5), 0.2 * 0.25);
  // The echo lists the expanded chain and reproduces it.
  const auto again = parse_config(cfg.to_json());
  EXPECT_EQ(again.portfolio.chain.transition, cfg.portfolio.chain.transition);
}

TEST(Config, OptionModel) {
  const auto j = json::parse(R"({
    "model": "option_ez",
    "market": {"r": 0.01, "mu": 0.07, "sigma": 0.2, "tau": 0.001},
    "preferences": {"gamma": 2, "psi": 5, "rho": 0.015},
    "discretization": {"horizon": 3, "steps_per_year": 52, "sub_periods": 10, "degree": 8},
    "option": {"kind": "put", "expiration": 0.5, "tau": 0.001}
  })");
  const auto cfg = parse_config(j);
  EXPECT_EQ(cfg.option.rounds, 6);
  EXPECT_EQ(cfg.option.preference, Preference::EpsteinZin);
  EXPECT_TRUE(cfg.option.consumption);
  EXPECT_NEAR(cfg.option.h, 1.0 / 520, 1e-17);
  EXPECT_EQ(parse_config(cfg.to_json()).to_json(), cfg.to_json());
  auto bad = j;
  bad["discretization"]["horizon"] = 2.75;
  EXPECT_THROW(parse_config(bad), ConfigError);
}

TEST(Config, ShippedExamplesLoad) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(TCDP_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    SCOPED_TRACE(e.path().filename().string());
    EXPECT_NO_THROW(load_config(e.path()));
    ++n;
  }
  EXPECT_GE(n, 5);
}

TEST(Run, ExitCodesAndErrorJson) {
  const auto dir = scratch_dir("exit");
  fs::create_directories(dir);
  auto j = small_config();
  j["discretization"]["horizon"] = 2.5;
  j["output"] = {{"dir", (dir / "out").string()}};
  {
    std::ofstream(dir / "bad.json") << j.dump();
  }
  EXPECT_EQ(run_main(dir / "bad.json", {}), 2);
  const auto err = json::parse(slurp(dir / "out" / "error.json"));
  EXPECT_EQ(err["exit_code"], 2);
  EXPECT_EQ(err["message"], "horizon not integer periods");
  EXPECT_EQ(run_main(dir / "missing.json", {}), 2);
  fs::remove_all(dir);
}

TEST(Run, ArtifactsDeterministicAcrossWorkerCounts) {
  const auto dir = scratch_dir("det");
  auto j = small_config();
  {
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json") << j.dump();
  }
  for (int w : {1, 4, 8}) {
    RunOverrides ov;
    ov.output_dir = (dir / ("w" + std::to_string(w))).string();
    ov.workers = w;
    ASSERT_EQ(run_main(dir / "cfg.json", ov), 0);
  }
  for (const char* f : {"surfaces/t0000.json", "surfaces/t0001.json", "policies/policy_t0000.csv",
                        "policies/policy_t0001.csv", "ntr_t0.csv", "ntr_t0.json"}) {
    EXPECT_EQ(slurp(dir / "w1" / f), slurp(dir / "w4" / f)) << f;
    EXPECT_EQ(slurp(dir / "w1" / f), slurp(dir / "w8" / f)) << f;
  }
  EXPECT_EQ(without_run_section(dir / "w1" / "diagnostics.json"), without_run_section(dir / "w8" / "diagnostics.json"));

  // Re-running from the echoed config reproduces the run.
  RunOverrides ov;
  ov.output_dir = (dir / "echo").string();
  ASSERT_EQ(run_main(dir / "w1" / "config.json", ov), 0);
  EXPECT_EQ(slurp(dir / "w1" / "surfaces/t0000.json"), slurp(dir / "echo" / "surfaces/t0000.json"));

  const auto rep = compare_runs(dir / "w1", dir / "w4");
  EXPECT_EQ(rep["surfaces"]["max_l1"], 0.0);
  EXPECT_EQ(rep["surfaces"]["max_linf"], 0.0);
  for (const auto& p : rep["policies"]) EXPECT_EQ(p["max_abs"], 0.0);
  ASSERT_EQ(rep.at("ntr_nesting").size(), 1u);
  EXPECT_EQ(rep["ntr_nesting"][0]["verdict"], "equal");

  const auto diag = json::parse(slurp(dir / "w1" / "diagnostics.json"));
  EXPECT_EQ(diag["run"]["workers"], 1);
  const auto& pe = diag.at("states").at(0).at("policy_error");
  EXPECT_LE(pe.at("l1").get<double>(), pe.at("linf").get<double>());
  fs::remove_all(dir);
}

TEST(Run, CompareRejectsIncompatibleRuns) {
  const auto dir = scratch_dir("cmp");
  auto a = parse_config(small_config());
  a.output_dir = (dir / "a").string();
  a.diagnostics.ntr = false;
  a.diagnostics.policy_error = false;
  run(a);
  auto jb = small_config();
  jb["model"] = "consumption";
  jb["preferences"]["rho"] = 0.05;
  auto b = parse_config(jb);
  b.output_dir = (dir / "b").string();
  b.diagnostics.ntr = false;
  b.diagnostics.policy_error = false;
  run(b);
  EXPECT_THROW(compare_runs(dir / "a", dir / "b"), ConfigError);
  fs::remove_all(dir);
}
