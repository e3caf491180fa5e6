#pragma once

// Chain diagnostics: effective sample size via the initial monotone positive
// sequence estimator, a Monte Carlo estimate of the average acceptance rate
// of the independent-Wishart Metropolis kernel, and closed-form moments of
// the univariate GIG distribution (Bessel ratios) used as test oracles.

#include <cmath>
#include <limits>
#include <vector>

#include <gsl/gsl_sf_bessel.h>

#include "mgig/common.hpp"
#include "mgig/mgig.hpp"

namespace mgig {

struct EssResult {
  double ess;
  bool degenerate;  // series was constant; ess is reported as n
};

// Geyer's initial monotone positive sequence estimator:
// ESS = n / (1 + 2 * sum of kept autocorrelations), where successive pairs
// rho_{2m} + rho_{2m+1} are truncated at the first nonpositive pair and
// forced nonincreasing. Result is clipped to (0, n].
inline EssResult ess(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n < 10) throw EmptyChainError("ess: need at least 10 points");
  bool constant = true;
  for (double v : x)
    if (v != x.front()) {
      constant = false;
      break;
    }
  if (constant) return {static_cast<double>(n), true};
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  if (var <= 0.0 || !(var > 0.0)) return {static_cast<double>(n), true};

  auto acov = [&](int k) {
    double s = 0.0;
    for (int t = 0; t + k < n; ++t) s += (x[t] - mean) * (x[t + k] - mean);
    return s / n;
  };

  double sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (int m = 0; 2 * m + 1 < n; ++m) {
    double pair = (acov(2 * m) + acov(2 * m + 1)) / var;
    if (m == 0) pair -= 1.0;  // rho_0 = 1 is accounted for separately
    const double full_pair = (m == 0) ? pair + 1.0 : pair;
    if (full_pair <= 0.0) break;
    const double kept = std::min(full_pair, prev_pair);
    prev_pair = kept;
    sum += (m == 0) ? kept - 1.0 : kept;
  }
  double denom = 1.0 + 2.0 * sum;
  double out = n / std::max(denom, 1e-12);
  out = std::min(out, static_cast<double>(n));
  out = std::max(out, 1e-12);
  return {out, false};
}

struct EssReport {
  std::vector<double> per_entry;  // upper triangle, row-major (i <= j)
  double mean_ess;
  double wall_seconds;
  double ess_per_second;  // mean_ess / wall_seconds, 0 if wall time unknown
};

// ESS for each upper-triangle entry of a matrix-valued chain.
inline EssReport ess_matrix_chain(const std::vector<Matrix>& draws, double wall_seconds = 0.0) {
  if (draws.empty()) throw EmptyChainError("ess_matrix_chain: empty chain");
  const int d = static_cast<int>(draws.front().rows());
  EssReport rep;
  rep.wall_seconds = wall_seconds;
  double total = 0.0;
  std::vector<double> series(draws.size());
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      for (std::size_t t = 0; t < draws.size(); ++t) series[t] = draws[t](i, j);
      const double e = ess(series).ess;
      rep.per_entry.push_back(e);
      total += e;
    }
  rep.mean_ess = total / rep.per_entry.size();
  rep.ess_per_second = wall_seconds > 0.0 ? rep.mean_ess / wall_seconds : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Average acceptance rate of the independent-Wishart kernel.

struct AarEstimate {
  double value;         // 2 * P[tr(Gamma S_new^{-1}) <= tr(Gamma S_old^{-1})]
  double mc_std_error;  // 2 * sqrt(phat (1 - phat) / n)
  int n_pairs;
};

struct AarOptions {
  int n_pairs = 5000;
  int warmup = 500;  // Gibbs iterations before the first retained target draw
  int gap = 10;      // Gibbs iterations between retained target draws
};

// The stationary acceptance rate of the independent proposal
// S_new ~ W(2*lambda + p + 1, Psi^{-1}) against a target draw S_old equals
// 2 * P[tr(Gamma S_new^{-1}) <= tr(Gamma S_old^{-1})] because the acceptance
// probability min(1, e^{-delta/2}) integrates to twice the one-sided tail by
// symmetry of the exchange argument. Target draws come from a Gibbs chain
// subsampled with the given gap.
inline AarEstimate estimate_aar(const MgigParams& p, const AarOptions& opt, RngStream& rng) {
  p.validate();
  if (!(p.lambda > -1.0))
    throw InvalidParamsError("estimate_aar: requires lambda > -1");
  if (opt.n_pairs <= 0 || opt.gap <= 0 || opt.warmup < 0)
    throw InvalidParamsError("estimate_aar: bad options");
  const int d = p.dim();
  Eigen::LLT<Matrix> llt(p.psi);
  Matrix psi_inv = llt.solve(Matrix::Identity(d, d));
  psi_inv = 0.5 * (psi_inv + psi_inv.transpose());
  WishartParams prop{2.0 * p.lambda + d + 1, psi_inv};

  Matrix init = p.lambda > -1.0 ? mgig_mode(p) : Matrix::Identity(d, d);
  CholeskyFactors state = cholesky_unit(init);
  for (int t = 0; t < opt.warmup; ++t) state = gibbs_step(state, p, rng);

  long hits = 0;
  for (int k = 0; k < opt.n_pairs; ++k) {
    for (int t = 0; t < opt.gap; ++t) state = gibbs_step(state, p, rng);
    Matrix s_old = reconstruct(state);
    Matrix s_new = sample_wishart(prop, rng);
    const double tr_new = Eigen::LLT<Matrix>(s_new).solve(p.gamma).trace();
    const double tr_old = Eigen::LLT<Matrix>(s_old).solve(p.gamma).trace();
    if (tr_new <= tr_old) ++hits;
  }
  const double phat = static_cast<double>(hits) / opt.n_pairs;
  AarEstimate out;
  out.value = 2.0 * phat;
  out.mc_std_error = 2.0 * std::sqrt(phat * (1.0 - phat) / opt.n_pairs);
  out.n_pairs = opt.n_pairs;
  return out;
}

// ---------------------------------------------------------------------------
// GIG moment oracle: E[X^r] = (b/a)^{r/2} K_{nu+r}(sqrt(ab)) / K_nu(sqrt(ab)).

inline double gig_moment_oracle(const GigParams& p, int r) {
  p.validate();
  if (p.b == 0.0) {
    // Gamma(nu, rate a/2): E[X^r] = (2/a)^r Gamma(nu+r)/Gamma(nu)
    if (p.nu + r <= 0.0)
      throw InvalidParamsError("gig_moment_oracle: moment does not exist");
    return std::pow(2.0 / p.a, r) * std::exp(std::lgamma(p.nu + r) - std::lgamma(p.nu));
  }
  if (p.a == 0.0) {
    // inverse-Gamma(-nu, b/2): E[X^r] = (b/2)^r Gamma(-nu-r)/Gamma(-nu), needs -nu > r
    if (-p.nu - r <= 0.0)
      throw InvalidParamsError("gig_moment_oracle: moment does not exist");
    return std::pow(0.5 * p.b, r) * std::exp(std::lgamma(-p.nu - r) - std::lgamma(-p.nu));
  }
  const double omega = std::sqrt(p.a * p.b);
  // K_{-v} = K_v; scaled Bessel ratios cancel the common exp factor.
  const double k_num = gsl_sf_bessel_Knu_scaled(std::abs(p.nu + r), omega);
  const double k_den = gsl_sf_bessel_Knu_scaled(std::abs(p.nu), omega);
  return std::pow(p.b / p.a, 0.5 * r) * (k_num / k_den);
}

// ---------------------------------------------------------------------------
// Summary of a matrix chain: entrywise means of S and S^{-1} with Monte
// Carlo standard errors based on the per-entry ESS.

struct ChainSummary {
  Matrix mean_sigma, se_sigma;
  Matrix mean_sigma_inv, se_sigma_inv;
  int n;
};

inline ChainSummary chain_summary(const std::vector<Matrix>& draws) {
  if (draws.empty()) throw EmptyChainError("chain_summary: empty chain");
  const int d = static_cast<int>(draws.front().rows());
  const int n = static_cast<int>(draws.size());
  ChainSummary s;
  s.n = n;
  s.mean_sigma = Matrix::Zero(d, d);
  s.mean_sigma_inv = Matrix::Zero(d, d);
  std::vector<Matrix> inv_draws;
  inv_draws.reserve(n);
  for (const Matrix& m : draws) {
    s.mean_sigma += m;
    Matrix inv = Eigen::LLT<Matrix>(m).solve(Matrix::Identity(d, d));
    inv_draws.push_back(0.5 * (inv + inv.transpose()));
    s.mean_sigma_inv += inv_draws.back();
  }
  s.mean_sigma /= n;
  s.mean_sigma_inv /= n;

  auto se_matrix = [&](const std::vector<Matrix>& ds, const Matrix& mean) {
    Matrix se = Matrix::Zero(d, d);
    std::vector<double> series(n);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double var = 0.0;
        for (int t = 0; t < n; ++t) {
          series[t] = ds[t](i, j);
          var += (series[t] - mean(i, j)) * (series[t] - mean(i, j));
        }
        var /= n;
        const double e = ess(series).ess;
        se(i, j) = se(j, i) = std::sqrt(var / e);
      }
    return se;
  };
  s.se_sigma = se_matrix(draws, s.mean_sigma);
  s.se_sigma_inv = se_matrix(inv_draws, s.mean_sigma_inv);
  return s;
}

}  // namespace mgig
