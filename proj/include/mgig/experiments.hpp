#pragma once

// Config-driven experiment runners behind the command line tool: the ESS
// benchmark grid, the acceptance-rate grid, and the two model studies.
// Configs are JSON; unknown keys are rejected and round-tripping through
// to_json/from_json is the identity. Output is results.csv (fixed column
// order), traces.jsonl (one record per retained scan, first replicate only),
// and manifest.json (config echo plus seed, sufficient to reproduce the run
// bit for bit). With timing disabled, all wall-clock columns are written as
// 0 so reruns are byte-identical.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mgig/diagnostics.hpp"
#include "mgig/mgig.hpp"
#include "mgig/models/mst.hpp"
#include "mgig/models/pggm.hpp"

namespace mgig {

using Json = nlohmann::json;

namespace detail {

inline void require_keys(const Json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) { ok = true; break; }
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
inline T get_or(const Json& j, const std::string& key, const T& dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("field '" + key + "': " + e.what());
  }
}

// Stable float formatting for CSV cells.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Benchmark grid.

struct BenchmarkConfig {
  std::vector<int> dims = {5, 10, 20};
  double lambda = 2.0;
  std::vector<std::string> scenarios = {"I", "II", "III"};
  std::vector<double> custom_psi_diag;    // used by scenario "custom"
  std::vector<double> custom_gamma_diag;  // defaults to ones
  std::vector<std::string> samplers = {"GS", "MH1", "MH2", "HR"};
  int n_iter = 5000;
  int burn_in = 500;
  int thin = 1;
  int replicates = 1;
  double rho = 5.0;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool timing = true;

  static BenchmarkConfig from_json(const Json& j) {
    detail::require_keys(j, {"dims", "lambda", "scenarios", "custom_psi_diag",
                             "custom_gamma_diag", "samplers", "n_iter", "burn_in", "thin",
                             "replicates", "rho", "seed", "output_dir", "timing"},
                         "benchmark config");
    BenchmarkConfig c;
    c.dims = detail::get_or(j, "dims", c.dims);
    c.lambda = detail::get_or(j, "lambda", c.lambda);
    c.scenarios = detail::get_or(j, "scenarios", c.scenarios);
    c.custom_psi_diag = detail::get_or(j, "custom_psi_diag", c.custom_psi_diag);
    c.custom_gamma_diag = detail::get_or(j, "custom_gamma_diag", c.custom_gamma_diag);
    c.samplers = detail::get_or(j, "samplers", c.samplers);
    c.n_iter = detail::get_or(j, "n_iter", c.n_iter);
    c.burn_in = detail::get_or(j, "burn_in", c.burn_in);
    c.thin = detail::get_or(j, "thin", c.thin);
    c.replicates = detail::get_or(j, "replicates", c.replicates);
    c.rho = detail::get_or(j, "rho", c.rho);
    c.seed = detail::get_or(j, "seed", c.seed);
    c.output_dir = detail::get_or(j, "output_dir", c.output_dir);
    c.timing = detail::get_or(j, "timing", c.timing);
    c.validate();
    return c;
  }
  Json to_json() const {
    return Json{{"dims", dims},
                {"lambda", lambda},
                {"scenarios", scenarios},
                {"custom_psi_diag", custom_psi_diag},
                {"custom_gamma_diag", custom_gamma_diag},
                {"samplers", samplers},
                {"n_iter", n_iter},
                {"burn_in", burn_in},
                {"thin", thin},
                {"replicates", replicates},
                {"rho", rho},
                {"seed", seed},
                {"output_dir", output_dir},
                {"timing", timing}};
  }
  void validate() const {
    if (dims.empty()) throw ConfigError("benchmark config: dims must be nonempty");
    for (int d : dims)
      if (d < 1) throw ConfigError("benchmark config: dims must be >= 1");
    if (scenarios.empty()) throw ConfigError("benchmark config: scenarios must be nonempty");
    for (const auto& s : scenarios)
      if (s != "I" && s != "II" && s != "III" && s != "custom")
        throw ConfigError("benchmark config: unknown scenario '" + s + "'");
    if (samplers.empty()) throw ConfigError("benchmark config: samplers must be nonempty");
    for (const auto& s : samplers) sampler_kind_from_string(s);
    if (n_iter <= 0 || burn_in < 0 || burn_in >= n_iter || thin <= 0)
      throw ConfigError("benchmark config: bad iteration counts");
    if (replicates <= 0) throw ConfigError("benchmark config: replicates must be >= 1");
    if (!(rho > 0.0)) throw ConfigError("benchmark config: rho must be positive");
  }
};

// Psi for the named scenario at dimension p (Gamma is the identity except
// for scenario "custom").
inline Matrix scenario_psi(const std::string& scenario, int p,
                           const std::vector<double>& custom_diag = {}) {
  Vector d = Vector::Ones(p);
  if (scenario == "II") {
    if (p < 2) throw ConfigError("scenario II needs p >= 2");
    d[p - 2] = 10.0;
    d[p - 1] = 50.0;
  } else if (scenario == "III") {
    for (int i = 0; i < p; ++i) d[i] = i + 1;
  } else if (scenario == "custom") {
    if (static_cast<int>(custom_diag.size()) != p)
      throw ConfigError("custom scenario: custom_psi_diag must have length p");
    for (int i = 0; i < p; ++i) d[i] = custom_diag[i];
  } else if (scenario != "I") {
    throw ConfigError("unknown scenario '" + scenario + "'");
  }
  return d.asDiagonal();
}

struct ResultRow {
  std::string sampler, scenario, status;
  int p = 0, replicate = 0;
  double mean_ess = 0, ess_per_sec = 0, wall_s = 0, accept_rate = 0;
};

struct BenchmarkResult {
  std::vector<ResultRow> rows;
  int n_failed = 0;
};

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "sampler,p,scenario,replicate,mean_ess,ess_per_sec,wall_s,accept_rate,status\n";
  for (const auto& r : rows) {
    out += r.sampler + "," + std::to_string(r.p) + "," + r.scenario + "," +
           std::to_string(r.replicate) + "," + detail::fmt(r.mean_ess) + "," +
           detail::fmt(r.ess_per_sec) + "," + detail::fmt(r.wall_s) + "," +
           detail::fmt(r.accept_rate) + "," + r.status + "\n";
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const Json& config) {
  Json m{{"format_version", 1}, {"command", command}, {"config", config}};
  detail::write_file(dir / "manifest.json", m.dump(2) + "\n");
}

namespace detail {

inline void run_pool(int n_cells, int threads, const std::function<void(int)>& work) {
  if (threads <= 1) {
    for (int i = 0; i < n_cells; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n_cells) return;
        work(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, int threads = 1) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);

  struct Cell {
    std::string sampler, scenario;
    int p, replicate;
  };
  std::vector<Cell> cells;
  for (const auto& scen : cfg.scenarios)
    for (int p : cfg.dims)
      for (const auto& samp : cfg.samplers)
        for (int r = 0; r < cfg.replicates; ++r) cells.push_back({samp, scen, p, r});

  std::vector<ResultRow> rows(cells.size());
  std::vector<std::string> traces(cells.size());
  std::atomic<int> failed{0};

  detail::run_pool(static_cast<int>(cells.size()), threads, [&](int i) {
    const Cell& c = cells[i];
    ResultRow row;
    row.sampler = c.sampler;
    row.scenario = c.scenario;
    row.p = c.p;
    row.replicate = c.replicate;
    try {
      MgigParams params{cfg.lambda, scenario_psi(c.scenario, c.p, cfg.custom_psi_diag),
                        Matrix::Identity(c.p, c.p)};
      if (c.scenario == "custom" && !cfg.custom_gamma_diag.empty()) {
        if (static_cast<int>(cfg.custom_gamma_diag.size()) != c.p)
          throw ConfigError("custom scenario: custom_gamma_diag must have length p");
        Vector g = Eigen::Map<const Vector>(cfg.custom_gamma_diag.data(), c.p);
        params.gamma = g.asDiagonal();
      }
      RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      ChainOptions opt;
      opt.n_iter = cfg.n_iter;
      opt.burn_in = cfg.burn_in;
      opt.thin = cfg.thin;
      opt.mh2_rho = cfg.rho;
      Chain chain = sample_chain(params, sampler_kind_from_string(c.sampler), opt, rng);
      EssReport rep = ess_matrix_chain(chain.draws, cfg.timing ? chain.wall_seconds : 0.0);
      row.mean_ess = rep.mean_ess;
      row.ess_per_sec = rep.ess_per_second;
      row.wall_s = rep.wall_seconds;
      row.accept_rate = chain.accept_rate;
      row.status = "ok";
      if (c.replicate == 0) {
        std::string tr;
        for (std::size_t t = 0; t < chain.draws.size(); ++t) {
          Json rec{{"sampler", c.sampler}, {"p", c.p},       {"scenario", c.scenario},
                   {"iter", t},            {"s00", chain.draws[t](0, 0)},
                   {"s01", c.p > 1 ? chain.draws[t](0, 1) : 0.0}};
          tr += rec.dump() + "\n";
        }
        traces[i] = std::move(tr);
      }
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      row.status = "error:" + msg;
      failed.fetch_add(1);
    }
    rows[i] = std::move(row);
  });

  std::filesystem::path dir(cfg.output_dir);
  detail::write_file(dir / "results.csv", results_csv(rows));
  std::string all_traces;
  for (const auto& t : traces) all_traces += t;
  detail::write_file(dir / "traces.jsonl", all_traces);
  write_manifest(dir, "benchmark", cfg.to_json());
  return {rows, failed.load()};
}

// ---------------------------------------------------------------------------
// Acceptance-rate grid.

struct AarConfig {
  int p = 2;
  double lambda = 2.0;                 // used for the psi grid rows
  std::vector<double> lambda_grid;     // rows with Psi = Gamma = I
  std::vector<double> psi_grid;        // rows with Psi = diag(psi, 1, ..., 1), Gamma = I
  int n_pairs = 5000;
  int gap = 10;
  int warmup = 500;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  static AarConfig from_json(const Json& j) {
    detail::require_keys(j, {"p", "lambda", "lambda_grid", "psi_grid", "n_pairs", "gap",
                             "warmup", "seed", "output_dir"},
                         "aar config");
    AarConfig c;
    c.p = detail::get_or(j, "p", c.p);
    c.lambda = detail::get_or(j, "lambda", c.lambda);
    c.lambda_grid = detail::get_or(j, "lambda_grid", c.lambda_grid);
    c.psi_grid = detail::get_or(j, "psi_grid", c.psi_grid);
    c.n_pairs = detail::get_or(j, "n_pairs", c.n_pairs);
    c.gap = detail::get_or(j, "gap", c.gap);
    c.warmup = detail::get_or(j, "warmup", c.warmup);
    c.seed = detail::get_or(j, "seed", c.seed);
    c.output_dir = detail::get_or(j, "output_dir", c.output_dir);
    c.validate();
    return c;
  }
  Json to_json() const {
    return Json{{"p", p},
                {"lambda", lambda},
                {"lambda_grid", lambda_grid},
                {"psi_grid", psi_grid},
                {"n_pairs", n_pairs},
                {"gap", gap},
                {"warmup", warmup},
                {"seed", seed},
                {"output_dir", output_dir}};
  }
  void validate() const {
    if (p < 1) throw ConfigError("aar config: p must be >= 1");
    if (lambda_grid.empty() && psi_grid.empty())
      throw ConfigError("aar config: need a nonempty lambda_grid or psi_grid");
    if (n_pairs < 100) throw ConfigError("aar config: n_pairs must be >= 100");
    if (gap <= 0 || warmup < 0) throw ConfigError("aar config: bad gap/warmup");
    for (double l : lambda_grid)
      if (!(l > -1.0)) throw ConfigError("aar config: lambda grid values must exceed -1");
    for (double s : psi_grid)
      if (!(s > 0.0)) throw ConfigError("aar config: psi grid values must be positive");
  }
};

struct AarRow {
  std::string kind;  // "lambda" or "psi"
  double value;      // grid coordinate
  AarEstimate est;
  std::string status;
};

struct AarResult {
  std::vector<AarRow> rows;
  int n_failed = 0;
};

inline AarResult run_aar(const AarConfig& cfg, int threads = 1) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  struct Cell {
    std::string kind;
    double value;
  };
  std::vector<Cell> cells;
  for (double l : cfg.lambda_grid) cells.push_back({"lambda", l});
  for (double s : cfg.psi_grid) cells.push_back({"psi", s});
  std::vector<AarRow> rows(cells.size());
  std::atomic<int> failed{0};
  detail::run_pool(static_cast<int>(cells.size()), threads, [&](int i) {
    AarRow row;
    row.kind = cells[i].kind;
    row.value = cells[i].value;
    try {
      Matrix psi = Matrix::Identity(cfg.p, cfg.p);
      double lambda = cfg.lambda;
      if (cells[i].kind == "lambda")
        lambda = cells[i].value;
      else
        psi(0, 0) = cells[i].value;
      MgigParams params{lambda, psi, Matrix::Identity(cfg.p, cfg.p)};
      RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      row.est = estimate_aar(params, {cfg.n_pairs, cfg.warmup, cfg.gap}, rng);
      row.status = "ok";
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      row.status = "error:" + msg;
      failed.fetch_add(1);
    }
    rows[i] = std::move(row);
  });
  std::string csv = "kind,value,estimate,mc_se,n_pairs,status\n";
  for (const auto& r : rows)
    csv += r.kind + "," + detail::fmt(r.value) + "," + detail::fmt(r.est.value) + "," +
           detail::fmt(r.est.mc_std_error) + "," + std::to_string(r.est.n_pairs) + "," +
           r.status + "\n";
  std::filesystem::path dir(cfg.output_dir);
  detail::write_file(dir / "results.csv", csv);
  detail::write_file(dir / "traces.jsonl", "");
  write_manifest(dir, "aar", cfg.to_json());
  return {rows, failed.load()};
}

// ---------------------------------------------------------------------------
// Sparse regression study.

struct PggmSimConfig {
  int n = 100, p = 10, q = 3;
  std::vector<std::string> schemes = {"GS", "MH1", "HR", "MI"};
  int n_iter = 5000;
  int burn_in = 500;
  int replicates = 5;
  int omega_gibbs_steps = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool timing = true;

  static PggmSimConfig from_json(const Json& j) {
    detail::require_keys(j, {"n", "p", "q", "schemes", "n_iter", "burn_in", "replicates",
                             "omega_gibbs_steps", "seed", "output_dir", "timing"},
                         "pggm-sim config");
    PggmSimConfig c;
    c.n = detail::get_or(j, "n", c.n);
    c.p = detail::get_or(j, "p", c.p);
    c.q = detail::get_or(j, "q", c.q);
    c.schemes = detail::get_or(j, "schemes", c.schemes);
    c.n_iter = detail::get_or(j, "n_iter", c.n_iter);
    c.burn_in = detail::get_or(j, "burn_in", c.burn_in);
    c.replicates = detail::get_or(j, "replicates", c.replicates);
    c.omega_gibbs_steps = detail::get_or(j, "omega_gibbs_steps", c.omega_gibbs_steps);
    c.seed = detail::get_or(j, "seed", c.seed);
    c.output_dir = detail::get_or(j, "output_dir", c.output_dir);
    c.timing = detail::get_or(j, "timing", c.timing);
    c.validate();
    return c;
  }
  Json to_json() const {
    return Json{{"n", n},
                {"p", p},
                {"q", q},
                {"schemes", schemes},
                {"n_iter", n_iter},
                {"burn_in", burn_in},
                {"replicates", replicates},
                {"omega_gibbs_steps", omega_gibbs_steps},
                {"seed", seed},
                {"output_dir", output_dir},
                {"timing", timing}};
  }
  void validate() const {
    if (n < 1 || p < 1 || q < 1) throw ConfigError("pggm-sim config: bad dimensions");
    if (schemes.empty()) throw ConfigError("pggm-sim config: schemes must be nonempty");
    for (const auto& s : schemes)
      if (s != "GS" && s != "MH1" && s != "HR" && s != "MI")
        throw ConfigError("pggm-sim config: unknown scheme '" + s + "'");
    if (n_iter <= 0 || burn_in < 0 || burn_in >= n_iter)
      throw ConfigError("pggm-sim config: bad iteration counts");
    if (replicates <= 0) throw ConfigError("pggm-sim config: replicates must be >= 1");
    if (omega_gibbs_steps <= 0) throw ConfigError("pggm-sim config: bad omega_gibbs_steps");
  }
};

inline PggmOmegaUpdate pggm_update_from_string(const std::string& s) {
  if (s == "GS") return PggmOmegaUpdate::GS;
  if (s == "MH1") return PggmOmegaUpdate::MH1;
  if (s == "HR") return PggmOmegaUpdate::HR;
  if (s == "MI") return PggmOmegaUpdate::MI;
  throw ConfigError("unknown update scheme: " + s);
}

struct PggmSimRow {
  std::string scheme, status;
  int replicate = 0;
  double mse_omega = 0, mean_ess_omega = 0, wall_s = 0;
};

struct PggmSimResult {
  std::vector<PggmSimRow> rows;
  int n_failed = 0;
};

inline PggmSimResult run_pggm_sim(const PggmSimConfig& cfg, int threads = 1) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  struct Cell {
    std::string scheme;
    int replicate;
  };
  std::vector<Cell> cells;
  for (const auto& s : cfg.schemes)
    for (int r = 0; r < cfg.replicates; ++r) cells.push_back({s, r});
  std::vector<PggmSimRow> rows(cells.size());
  std::vector<std::string> traces(cells.size());
  std::atomic<int> failed{0};

  detail::run_pool(static_cast<int>(cells.size()), threads, [&](int i) {
    const Cell& c = cells[i];
    PggmSimRow row;
    row.scheme = c.scheme;
    row.replicate = c.replicate;
    try {
      // One dataset per replicate, shared across schemes (stream keyed by
      // replicate only), so schemes are compared on identical data.
      RngStream data_rng(cfg.seed, 1000000u + static_cast<std::uint64_t>(c.replicate));
      PggmSimTruth truth = simulate_pggm(cfg.n, cfg.p, cfg.q, data_rng);
      PggmHyper hy = PggmHyper::defaults(cfg.p, cfg.q);
      PggmOptions opt;
      opt.omega_update = pggm_update_from_string(c.scheme);
      opt.omega_gibbs_steps = cfg.omega_gibbs_steps;
      RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      PggmState st = pggm_initial_state(truth.data, hy);
      Matrix mean_omega = Matrix::Zero(cfg.q, cfg.q);
      std::vector<Matrix> omega_draws;
      omega_draws.reserve(cfg.n_iter - cfg.burn_in);
      std::string tr;
      const auto t0 = std::chrono::steady_clock::now();
      for (int t = 0; t < cfg.n_iter; ++t) {
        st = pggm_gibbs_step(truth.data, st, hy, opt, rng);
        if (t >= cfg.burn_in) {
          mean_omega += st.omega;
          omega_draws.push_back(st.omega);
        }
        if (c.replicate == 0) {
          Json rec{{"scheme", c.scheme},
                   {"iter", t},
                   {"omega00", st.omega(0, 0)},
                   {"omega01", cfg.q > 1 ? st.omega(0, 1) : 0.0},
                   {"delta03", cfg.p > 3 ? st.delta(0, 3) : 0.0},
                   {"delta13", (cfg.p > 3 && cfg.q > 1) ? st.delta(1, 3) : 0.0}};
          tr += rec.dump() + "\n";
        }
      }
      const auto t1 = std::chrono::steady_clock::now();
      mean_omega /= (cfg.n_iter - cfg.burn_in);
      row.mse_omega = (mean_omega - truth.omega_true).squaredNorm() / (cfg.q * cfg.q);
      EssReport rep = ess_matrix_chain(omega_draws);
      row.mean_ess_omega = rep.mean_ess;
      row.wall_s = cfg.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
      row.status = "ok";
      traces[i] = std::move(tr);
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      row.status = "error:" + msg;
      failed.fetch_add(1);
    }
    rows[i] = std::move(row);
  });

  std::string csv = "scheme,replicate,mse_omega,mean_ess_omega,wall_s,status\n";
  for (const auto& r : rows)
    csv += r.scheme + "," + std::to_string(r.replicate) + "," + detail::fmt(r.mse_omega) +
           "," + detail::fmt(r.mean_ess_omega) + "," + detail::fmt(r.wall_s) + "," +
           r.status + "\n";
  std::filesystem::path dir(cfg.output_dir);
  detail::write_file(dir / "results.csv", csv);
  std::string all_traces;
  for (const auto& t : traces) all_traces += t;
  detail::write_file(dir / "traces.jsonl", all_traces);
  write_manifest(dir, "pggm-sim", cfg.to_json());
  return {rows, failed.load()};
}

// ---------------------------------------------------------------------------
// Skew-t study: fit the full model and the symmetric restriction on the
// same synthetic data and compare predictive losses.

struct MstSimConfig {
  int n = 50, p = 2, q = 2;
  std::vector<double> nu_list = {5.0, 10.0};
  double b_scale = 2.0;  // true skewness: B = b_scale * (matrix of ones)
  std::string scheme = "GS";
  int n_iter = 2000;
  int burn_in = 400;
  int replicates = 5;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool timing = true;

  static MstSimConfig from_json(const Json& j) {
    detail::require_keys(j, {"n", "p", "q", "nu_list", "b_scale", "scheme", "n_iter",
                             "burn_in", "replicates", "seed", "output_dir", "timing"},
                         "mst-sim config");
    MstSimConfig c;
    c.n = detail::get_or(j, "n", c.n);
    c.p = detail::get_or(j, "p", c.p);
    c.q = detail::get_or(j, "q", c.q);
    c.nu_list = detail::get_or(j, "nu_list", c.nu_list);
    c.b_scale = detail::get_or(j, "b_scale", c.b_scale);
    c.scheme = detail::get_or(j, "scheme", c.scheme);
    c.n_iter = detail::get_or(j, "n_iter", c.n_iter);
    c.burn_in = detail::get_or(j, "burn_in", c.burn_in);
    c.replicates = detail::get_or(j, "replicates", c.replicates);
    c.seed = detail::get_or(j, "seed", c.seed);
    c.output_dir = detail::get_or(j, "output_dir", c.output_dir);
    c.timing = detail::get_or(j, "timing", c.timing);
    c.validate();
    return c;
  }
  Json to_json() const {
    return Json{{"n", n},
                {"p", p},
                {"q", q},
                {"nu_list", nu_list},
                {"b_scale", b_scale},
                {"scheme", scheme},
                {"n_iter", n_iter},
                {"burn_in", burn_in},
                {"replicates", replicates},
                {"seed", seed},
                {"output_dir", output_dir},
                {"timing", timing}};
  }
  void validate() const {
    if (n < 1 || p < 1 || q < 1) throw ConfigError("mst-sim config: bad dimensions");
    if (nu_list.empty()) throw ConfigError("mst-sim config: nu_list must be nonempty");
    for (double nu : nu_list)
      if (!(nu > p - 1)) throw ConfigError("mst-sim config: nu must exceed p - 1");
    if (scheme != "GS" && scheme != "MH1" && scheme != "HR")
      throw ConfigError("mst-sim config: unknown scheme '" + scheme + "'");
    if (n_iter <= 0 || burn_in < 0 || burn_in >= n_iter)
      throw ConfigError("mst-sim config: bad iteration counts");
    if (replicates <= 0) throw ConfigError("mst-sim config: replicates must be >= 1");
  }
};

inline MstWUpdate mst_update_from_string(const std::string& s) {
  if (s == "GS") return MstWUpdate::GS;
  if (s == "MH1") return MstWUpdate::MH1;
  if (s == "HR") return MstWUpdate::HR;
  throw ConfigError("unknown update scheme: " + s);
}

struct MstSimRow {
  std::string model, status;  // model: "skew-t" or "restricted"
  double nu = 0;
  int replicate = 0;
  double loss = 0, wall_s = 0;
};

struct MstSimResult {
  std::vector<MstSimRow> rows;
  int n_failed = 0;
};

inline MstSimResult run_mst_sim(const MstSimConfig& cfg, int threads = 1) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  struct Cell {
    double nu;
    int replicate;
    bool restricted;
  };
  std::vector<Cell> cells;
  for (double nu : cfg.nu_list)
    for (int r = 0; r < cfg.replicates; ++r) {
      cells.push_back({nu, r, false});
      cells.push_back({nu, r, true});
    }
  std::vector<MstSimRow> rows(cells.size());
  std::atomic<int> failed{0};

  detail::run_pool(static_cast<int>(cells.size()), threads, [&](int i) {
    const Cell& c = cells[i];
    MstSimRow row;
    row.model = c.restricted ? "restricted" : "skew-t";
    row.nu = c.nu;
    row.replicate = c.replicate;
    try {
      // Shared dataset per (nu, replicate) so both fits see the same data.
      const std::uint64_t data_id =
          2000000u + static_cast<std::uint64_t>(c.replicate) * 1000u +
          static_cast<std::uint64_t>(c.nu);
      RngStream data_rng(cfg.seed, data_id);
      Matrix m_true = Matrix::Constant(cfg.p, cfg.q, 1.0);
      Matrix b_true = Matrix::Constant(cfg.p, cfg.q, cfg.b_scale);
      MstData data = simulate_mst(cfg.n, m_true, b_true, Matrix::Identity(cfg.p, cfg.p),
                                  Matrix::Identity(cfg.q, cfg.q), c.nu, data_rng);
      MstHyper hy = MstHyper::defaults(cfg.p, cfg.q, c.nu);
      MstOptions opt;
      opt.w_update = mst_update_from_string(cfg.scheme);
      opt.fix_b_zero = c.restricted;
      RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
      MstState st = mst_initial_state(data, hy);
      std::vector<MstState> kept;
      kept.reserve(cfg.n_iter - cfg.burn_in);
      const auto t0 = std::chrono::steady_clock::now();
      for (int t = 0; t < cfg.n_iter; ++t) {
        st = mst_gibbs_step(data, st, hy, opt, rng);
        if (t >= cfg.burn_in) kept.push_back(st);
      }
      const auto t1 = std::chrono::steady_clock::now();
      row.loss = predictive_loss(kept, data, hy, rng);
      row.wall_s = cfg.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
      row.status = "ok";
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      row.status = "error:" + msg;
      failed.fetch_add(1);
    }
    rows[i] = std::move(row);
  });

  std::string csv = "model,nu,replicate,loss,wall_s,status\n";
  for (const auto& r : rows)
    csv += r.model + "," + detail::fmt(r.nu) + "," + std::to_string(r.replicate) + "," +
           detail::fmt(r.loss) + "," + detail::fmt(r.wall_s) + "," + r.status + "\n";
  std::filesystem::path dir(cfg.output_dir);
  detail::write_file(dir / "results.csv", csv);
  detail::write_file(dir / "traces.jsonl", "");
  write_manifest(dir, "mst-sim", cfg.to_json());
  return {rows, failed.load()};
}

}  // namespace mgig
