#include <catch2/catch_amalgamated.hpp>

#include "mgig/diagnostics.hpp"
#include "mgig/mgig.hpp"

using namespace mgig;

TEST_CASE("iid series has effective size close to its length") {
  RngStream rng(1);
  const int n = 10000;
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  EssResult r = ess(x);
  REQUIRE_FALSE(r.degenerate);
  REQUIRE(r.ess > 0.9 * n);
  REQUIRE(r.ess <= 1.1 * n);
}

TEST_CASE("AR(1) series matches the known effective-size formula") {
  // for rho = 0.9 the integrated autocorrelation time is (1+rho)/(1-rho) = 19
  RngStream rng(2);
  const int n = 100000;
  std::vector<double> x(n);
  double state = 0.0;
  for (int i = 0; i < n; ++i) {
    state = 0.9 * state + rng.normal();
    x[i] = state;
  }
  EssResult r = ess(x);
  REQUIRE(r.ess == Catch::Approx(n / 19.0).epsilon(0.2));
}

TEST_CASE("constant series is flagged degenerate with full size") {
  std::vector<double> x(500, 3.14);
  EssResult r = ess(x);
  REQUIRE(r.degenerate);
  REQUIRE(r.ess == 500.0);
}

TEST_CASE("effective size never exceeds the series length") {
  RngStream rng(3);
  // antithetic-ish alternating noise would inflate a naive estimator
  const int n = 5000;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = (i % 2 ? 1.0 : -1.0) * std::abs(rng.normal());
  EssResult r = ess(x);
  REQUIRE(r.ess <= n);
  REQUIRE(r.ess > 0.0);
}

TEST_CASE("short series is rejected") {
  std::vector<double> x(9, 0.0);
  REQUIRE_THROWS_AS(ess(x), EmptyChainError);
}

TEST_CASE("matrix chain report covers the upper triangle") {
  RngStream rng(4);
  std::vector<Matrix> draws;
  for (int t = 0; t < 2000; ++t) {
    Matrix m(2, 2);
    double a = rng.normal(), b = rng.normal(), c = rng.normal();
    m << a, b, b, c;
    draws.push_back(m);
  }
  EssReport rep = ess_matrix_chain(draws, 2.0);
  REQUIRE(rep.per_entry.size() == 3);  // (0,0), (0,1), (1,1)
  REQUIRE(rep.mean_ess > 0.8 * 2000);
  REQUIRE(rep.wall_seconds == 2.0);
  REQUIRE(rep.ess_per_second == Catch::Approx(rep.mean_ess / 2.0));

  std::vector<Matrix> flat(100, Matrix::Identity(2, 2));
  EssReport deg = ess_matrix_chain(flat);
  REQUIRE(deg.mean_ess == 100.0);
  REQUIRE(deg.ess_per_second == 0.0);  // no wall time recorded
}

TEST_CASE("acceptance proxy is invariant under congruence transformations") {
  // the comparison tr(Gamma S_new^{-1}) vs tr(Gamma S_old^{-1}) is preserved
  // by (Gamma, S) -> (C Gamma C^T, C S C^T), so the estimate only moves by
  // Monte Carlo noise when the problem is rescaled this way
  MgigParams base{3.0, Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  Matrix c(3, 3);
  c << 2, 0, 0, 0.5, 1, 0, 0, 0.3, 1.5;
  Matrix cinv = c.inverse();
  MgigParams mapped{3.0,
                    0.5 * ((cinv.transpose() * base.psi * cinv) +
                           (cinv.transpose() * base.psi * cinv).transpose()),
                    0.5 * ((c * base.gamma * c.transpose()) +
                           (c * base.gamma * c.transpose()).transpose())};
  AarOptions opt;
  opt.n_pairs = 4000;
  RngStream r1(11, 0), r2(11, 1);
  AarEstimate e1 = estimate_aar(base, opt, r1);
  AarEstimate e2 = estimate_aar(mapped, opt, r2);
  REQUIRE(std::abs(e1.value - e2.value) < 4.0 * (e1.mc_std_error + e2.mc_std_error) + 1e-9);
}

TEST_CASE("acceptance proxy behaves at the extremes") {
  AarOptions opt;
  opt.n_pairs = 3000;
  RngStream r1(12, 0);
  AarEstimate high =
      estimate_aar({50.0, Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, opt, r1);
  REQUIRE(high.value > 0.9);
  REQUIRE(high.value <= 2.0);
  RngStream r2(12, 1);
  AarEstimate low =
      estimate_aar({-0.95, Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, opt, r2);
  REQUIRE(low.value < 0.15);
  REQUIRE(low.n_pairs == 3000);
  RngStream r3(12, 2);
  REQUIRE_THROWS_AS(
      estimate_aar({-1.5, Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, opt, r3),
      InvalidParamsError);
}

TEST_CASE("univariate moment oracle handles interior and boundary parameters") {
  // interior case cross-checked against direct numerical integration
  GigParams p{1.3, 2.0, 0.7};
  auto kernel = [&](double x, int r) {
    return std::pow(x, r) * std::exp(gig_log_kernel(x, p));
  };
  const int steps = 400000;
  const double hi = 40.0, h = hi / steps;
  double z = 0, m1 = 0, m2 = 0;
  for (int i = 1; i <= steps; ++i) {
    const double x = i * h;
    z += kernel(x, 0);
    m1 += kernel(x, 1);
    m2 += kernel(x, 2);
  }
  REQUIRE(gig_moment_oracle(p, 1) == Catch::Approx(m1 / z).epsilon(1e-6));
  REQUIRE(gig_moment_oracle(p, 2) == Catch::Approx(m2 / z).epsilon(1e-6));

  // b = 0 collapses to Gamma(nu, rate a/2)
  REQUIRE(gig_moment_oracle({2.0, 4.0, 0.0}, 1) == Catch::Approx(1.0));
  REQUIRE(gig_moment_oracle({2.0, 4.0, 0.0}, 2) == Catch::Approx(1.5));
  // a = 0 collapses to inverse-Gamma(-nu, b/2)
  REQUIRE(gig_moment_oracle({-3.0, 0.0, 4.0}, 1) == Catch::Approx(1.0));
  REQUIRE_THROWS_AS(gig_moment_oracle({-2.0, 0.0, 4.0}, 2), InvalidParamsError);
  REQUIRE_THROWS_AS(gig_moment_oracle({-1.0, 3.0, 0.0}, 1), InvalidParamsError);
}

TEST_CASE("chain summary of the scalar case matches the moment oracle") {
  MgigParams par{2.0, Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 2.0)};
  ChainOptions opt;
  opt.n_iter = 52000;
  opt.burn_in = 2000;
  RngStream rng(21, 0);
  Chain c = sample_chain(par, SamplerKind::GS, opt, rng);
  ChainSummary s = chain_summary(c.draws);
  // scalar density with exponent lambda corresponds to GIG order lambda + 1
  GigParams g{3.0, 2.0, 2.0};
  GigParams ginv{-3.0, 2.0, 2.0};
  REQUIRE(std::abs(s.mean_sigma(0, 0) - gig_moment_oracle(g, 1)) <
          4.0 * s.se_sigma(0, 0));
  REQUIRE(std::abs(s.mean_sigma_inv(0, 0) - gig_moment_oracle(ginv, 1)) <
          4.0 * s.se_sigma_inv(0, 0));
  REQUIRE(s.n == 50000);
}
