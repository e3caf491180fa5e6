#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mgig/experiments.hpp"

using namespace mgig;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("mgig_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("configs survive a JSON round trip") {
  BenchmarkConfig b;
  b.dims = {3, 7};
  b.scenarios = {"II", "custom"};
  b.custom_psi_diag = {1, 2, 4};
  b.seed = 99;
  b.timing = false;
  BenchmarkConfig b2 = BenchmarkConfig::from_json(b.to_json());
  REQUIRE(b2.to_json() == b.to_json());

  AarConfig a;
  a.lambda_grid = {-0.9, 0.0, 2.0};
  a.psi_grid = {1.0, 100.0};
  REQUIRE(AarConfig::from_json(a.to_json()).to_json() == a.to_json());

  PggmSimConfig pg;
  pg.schemes = {"GS", "MI"};
  pg.replicates = 2;
  REQUIRE(PggmSimConfig::from_json(pg.to_json()).to_json() == pg.to_json());

  MstSimConfig ms;
  ms.nu_list = {8.0};
  ms.b_scale = 3.0;
  REQUIRE(MstSimConfig::from_json(ms.to_json()).to_json() == ms.to_json());
}

TEST_CASE("unknown and malformed config keys are rejected") {
  Json j = BenchmarkConfig{}.to_json();
  j["surprise"] = 1;
  REQUIRE_THROWS_AS(BenchmarkConfig::from_json(j), ConfigError);
  Json j2 = BenchmarkConfig{}.to_json();
  j2["n_iter"] = "many";
  REQUIRE_THROWS_AS(BenchmarkConfig::from_json(j2), ConfigError);
  REQUIRE_THROWS_AS(BenchmarkConfig::from_json(Json::array()), ConfigError);

  BenchmarkConfig bad;
  bad.replicates = 0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = BenchmarkConfig{};
  bad.samplers = {"GS", "bogus"};
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = BenchmarkConfig{};
  bad.burn_in = bad.n_iter;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  AarConfig a;
  a.lambda_grid.clear();
  a.psi_grid.clear();
  REQUIRE_THROWS_AS(a.validate(), ConfigError);
  a = AarConfig{};
  a.n_pairs = 50;
  REQUIRE_THROWS_AS(a.validate(), ConfigError);
}

TEST_CASE("scenario diagonals are built as documented") {
  Matrix s1 = scenario_psi("I", 4);
  REQUIRE((s1 - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  Matrix s2 = scenario_psi("II", 5);
  Vector d2(5);
  d2 << 1, 1, 1, 10, 50;
  REQUIRE((s2.diagonal() - d2).cwiseAbs().maxCoeff() == 0.0);
  Matrix s3 = scenario_psi("III", 4);
  Vector d3(4);
  d3 << 1, 2, 3, 4;
  REQUIRE((s3.diagonal() - d3).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(scenario_psi("II", 1), ConfigError);
  REQUIRE_THROWS_AS(scenario_psi("custom", 3, {1.0}), ConfigError);
  Matrix sc = scenario_psi("custom", 2, {4.0, 9.0});
  REQUIRE(sc(1, 1) == 9.0);
}

TEST_CASE("benchmark runs are byte-identical across reruns and thread counts") {
  BenchmarkConfig cfg;
  cfg.dims = {3};
  cfg.scenarios = {"I", "III"};
  cfg.samplers = {"GS", "MH1"};
  cfg.n_iter = 300;
  cfg.burn_in = 50;
  cfg.replicates = 2;
  cfg.seed = 42;
  cfg.timing = false;  // zero out wall-clock columns for reproducibility

  auto d1 = temp_dir("bench1"), d2 = temp_dir("bench2"), d3 = temp_dir("bench3");
  cfg.output_dir = d1.string();
  BenchmarkResult r1 = run_benchmark(cfg, 1);
  cfg.output_dir = d2.string();
  run_benchmark(cfg, 1);
  cfg.output_dir = d3.string();
  run_benchmark(cfg, 3);

  REQUIRE(r1.n_failed == 0);
  REQUIRE(r1.rows.size() == 2 * 2 * 2);
  for (const char* f : {"results.csv", "traces.jsonl"}) {
    const std::string base = slurp(d1 / f);
    REQUIRE(base == slurp(d2 / f));
    REQUIRE(base == slurp(d3 / f));
  }
  // manifests agree except for the output directory field
  Json m1 = Json::parse(slurp(d1 / "manifest.json"));
  Json m2 = Json::parse(slurp(d2 / "manifest.json"));
  m1["config"].erase("output_dir");
  m2["config"].erase("output_dir");
  REQUIRE(m1 == m2);

  const std::string csv = slurp(d1 / "results.csv");
  REQUIRE(csv.rfind("sampler,p,scenario,replicate,mean_ess,ess_per_sec,wall_s,accept_rate,"
                    "status\n", 0) == 0);
  // with timing off the wall and rate columns must be exactly zero
  for (const auto& row : r1.rows) {
    REQUIRE(row.status == "ok");
    REQUIRE(row.wall_s == 0.0);
    REQUIRE(row.ess_per_sec == 0.0);
    REQUIRE(row.mean_ess > 0.0);
    REQUIRE(row.mean_ess <= cfg.n_iter - cfg.burn_in);
  }
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  std::filesystem::remove_all(d3);
}

TEST_CASE("a failing cell is reported in the CSV without sinking the run") {
  BenchmarkConfig cfg;
  cfg.dims = {1, 3};  // scenario II is undefined at p = 1
  cfg.scenarios = {"II"};
  cfg.samplers = {"GS"};
  cfg.n_iter = 100;
  cfg.burn_in = 10;
  cfg.timing = false;
  auto d = temp_dir("bench_fail");
  cfg.output_dir = d.string();
  BenchmarkResult r = run_benchmark(cfg, 1);
  REQUIRE(r.n_failed == 1);
  int ok = 0, err = 0;
  for (const auto& row : r.rows) {
    if (row.status == "ok") ++ok;
    else {
      REQUIRE(row.status.rfind("error:", 0) == 0);
      REQUIRE(row.status.find(',') == std::string::npos);
      ++err;
    }
  }
  REQUIRE(ok == 1);
  REQUIRE(err == 1);
  std::filesystem::remove_all(d);
}

TEST_CASE("acceptance-rate grid writes one row per grid point") {
  AarConfig cfg;
  cfg.p = 2;
  cfg.lambda_grid = {0.0, 2.0};
  cfg.psi_grid = {1.0, 100.0};
  cfg.n_pairs = 400;
  cfg.seed = 7;
  auto d = temp_dir("aar");
  cfg.output_dir = d.string();
  AarResult r = run_aar(cfg, 1);
  REQUIRE(r.n_failed == 0);
  REQUIRE(r.rows.size() == 4);
  for (const auto& row : r.rows) {
    REQUIRE(row.est.value >= 0.0);
    REQUIRE(row.est.value <= 2.0);
    REQUIRE(row.est.n_pairs == 400);
  }
  const std::string csv = slurp(d / "results.csv");
  REQUIRE(csv.rfind("kind,value,estimate,mc_se,n_pairs,status\n", 0) == 0);
  std::filesystem::remove_all(d);
}

TEST_CASE("model experiment drivers run end to end deterministically") {
  PggmSimConfig pg;
  pg.n = 40;
  pg.p = 4;
  pg.q = 2;
  pg.schemes = {"GS", "MI"};
  pg.n_iter = 60;
  pg.burn_in = 20;
  pg.replicates = 1;
  pg.timing = false;
  auto d1 = temp_dir("pggm1"), d2 = temp_dir("pggm2");
  pg.output_dir = d1.string();
  PggmSimResult r1 = run_pggm_sim(pg, 1);
  pg.output_dir = d2.string();
  run_pggm_sim(pg, 2);
  REQUIRE(r1.n_failed == 0);
  REQUIRE(r1.rows.size() == 2);
  REQUIRE(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);

  MstSimConfig ms;
  ms.n = 10;
  ms.nu_list = {8.0};
  ms.n_iter = 40;
  ms.burn_in = 10;
  ms.replicates = 1;
  ms.timing = false;
  auto d3 = temp_dir("mst1"), d4 = temp_dir("mst2");
  ms.output_dir = d3.string();
  MstSimResult m1 = run_mst_sim(ms, 1);
  ms.output_dir = d4.string();
  run_mst_sim(ms, 2);
  REQUIRE(m1.n_failed == 0);
  REQUIRE(m1.rows.size() == 2);  // skew-t and restricted
  bool saw_skew = false, saw_restricted = false;
  for (const auto& row : m1.rows) {
    if (row.model == "skew-t") saw_skew = true;
    if (row.model == "restricted") saw_restricted = true;
    REQUIRE(row.loss > 0.0);
  }
  REQUIRE(saw_skew);
  REQUIRE(saw_restricted);
  REQUIRE(slurp(d3 / "results.csv") == slurp(d4 / "results.csv"));
  std::filesystem::remove_all(d3);
  std::filesystem::remove_all(d4);
}
