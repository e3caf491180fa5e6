#pragma once

// Matrix generalized inverse Gaussian distribution on SPD matrices,
//   p(S) ∝ |S|^lambda exp{-tr(Psi S + Gamma S^{-1}) / 2},
// with a blocked Gibbs sampler on the unit-Cholesky parameterization
// S = B A B^T, three Metropolis-Hastings kernels (independent Wishart,
// mode-matched Wishart, hit-and-run on the matrix-log scale), chain
// orchestration, and the low-rank composition for degenerate Gamma.

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "mgig/common.hpp"
#include "mgig/gig.hpp"
#include "mgig/matrix_core.hpp"
#include "mgig/mvn_wishart.hpp"
#include "mgig/rng.hpp"

namespace mgig {

struct MgigParams {
  double lambda;
  Matrix psi;
  Matrix gamma;

  int dim() const { return static_cast<int>(psi.rows()); }
  void validate() const {
    require_spd(psi, "MgigParams(psi)");
    require_spd(gamma, "MgigParams(gamma)");
    require_same_dim(psi, gamma, "MgigParams");
  }
  // S ~ MGIG(lambda, Psi, Gamma) iff S^{-1} ~ MGIG(-lambda-(p+1), Gamma, Psi).
  // Applied by callers that wish to canonicalize; never applied implicitly.
  MgigParams inverted() const { return {-lambda - (dim() + 1), gamma, psi}; }
};

inline double log_density_unnorm(const Matrix& sigma, const MgigParams& p) {
  require_same_dim(sigma, p.psi, "log_density_unnorm");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NotSpdError("log_density_unnorm: sigma not SPD");
  const int d = p.dim();
  Matrix L = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(L(i, i));
  const double tr_psi_sigma = (p.psi * sigma).trace();
  const double tr_gamma_siginv = llt.solve(p.gamma).trace();
  return p.lambda * logdet - 0.5 * (tr_psi_sigma + tr_gamma_siginv);
}

// ---------------------------------------------------------------------------
// Full conditionals on the (a, b) parameterization.

// Given the off-diagonals b, the diagonals are conditionally independent:
//   a_i | b ~ GIG(lambda + p - i, (B^T Psi B)_{ii}, (B^{-1} Gamma B^{-T})_{ii})
// with i counted from 0.
inline std::vector<GigParams> cond_a_params(const Vector& b, const MgigParams& p) {
  const int d = p.dim();
  Matrix B = unit_lower_from_packed(d, b);
  Matrix Binv = B.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Matrix BtPsiB = B.transpose() * p.psi * B;
  Matrix BinvGamBinvT = Binv * p.gamma * Binv.transpose();
  std::vector<GigParams> out;
  out.reserve(d);
  for (int i = 0; i < d; ++i)
    out.push_back({p.lambda + (d - i), BtPsiB(i, i), BinvGamBinvT(i, i)});
  return out;
}

namespace detail {

// Column factor B_i = I + c_i e_i^T where c_i carries the subdiagonal part
// of column i and is zero elsewhere; its inverse is 2I - B_i = I - c_i e_i^T.
// B factors as B_0 B_1 ... B_{p-1} and the product overlays columns, so a
// partial product is just B with the remaining columns reset to identity.
inline Vector column_factor(int d, int i, const Vector& bi) {
  Vector c = Vector::Zero(d);
  c.segment(i + 1, d - i - 1) = bi;
  return c;
}

inline Vector packed_block(const Vector& b, int d, int i) {
  return b.segment(packed_index(d, i + 1, i), d - i - 1);
}

}  // namespace detail

// Conditional of the i-th column block b_i (0-based, 0 <= i <= p-2) given a
// and the other blocks, as a normal in precision form. Direct evaluation of
// the factor products from scratch; the Gibbs scan below carries them with
// rank-one updates and is checked against this in the tests.
inline MvnPrecisionParams cond_b_params(int i, const Vector& a, const Vector& b,
                                        const MgigParams& p) {
  const int d = p.dim();
  if (i < 0 || i >= d - 1) throw DimMismatchError("cond_b_params: index out of range");
  if (a.size() != d || b.size() != packed_offdiag_size(d))
    throw DimMismatchError("cond_b_params: state size mismatch");
  for (int j = 0; j < d; ++j)
    if (!(a[j] > 0.0)) throw InvalidParamsError("cond_b_params: diagonals must be positive");
  Matrix B = unit_lower_from_packed(d, b);
  Matrix Binv = B.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Vector sqrt_a = a.array().sqrt();

  // M = (B_0 ... B_{i-1})^T Psi (B_0 ... B_{i-1})
  Matrix Bleft = Matrix::Identity(d, d);
  Bleft.leftCols(i) = B.leftCols(i);
  Matrix M = Bleft.transpose() * p.psi * Bleft;

  // R = B_{i+1} ... B_{p-1} A^{1/2}
  Matrix Bright = B;
  Bright.leftCols(i + 1) = Matrix::Identity(d, d).leftCols(i + 1);
  Matrix R = Bright * sqrt_a.asDiagonal();

  // Mbar = (Bbar_{i-1} ... Bbar_0) Gamma (Bbar_{i-1} ... Bbar_0)^T
  Matrix P = Matrix::Identity(d, d);
  for (int j = 0; j < i; ++j) {
    Vector c = detail::column_factor(d, j, detail::packed_block(b, d, j));
    Vector rowj = P.row(j);
    P.noalias() -= c * rowj.transpose();  // P <- Bbar_j P
  }
  Matrix Mbar = P * p.gamma * P.transpose();

  // Rbar = Bbar_{i+1}^T ... Bbar_{p-1}^T A^{-1/2} = (B_{i+1} ... B_{p-1})^{-T} A^{-1/2}
  Matrix Rbar = Bright.triangularView<Eigen::Lower>().transpose().solve(
      Matrix(sqrt_a.cwiseInverse().asDiagonal()));

  Matrix Q = Binv.transpose() * a.cwiseInverse().asDiagonal() * Binv;
  const int k = d - i - 1;
  MvnPrecisionParams out;
  out.precision =
      a[i] * p.psi.block(i + 1, i + 1, k, k) + Mbar(i, i) * Q.block(i + 1, i + 1, k, k);
  Vector w1 = R * R.row(i).transpose();
  Vector w2 = Rbar.transpose() * Mbar.row(i).transpose();
  out.precision_times_mean = -M.block(i + 1, 0, k, d) * w1 + Rbar.block(i + 1, 0, k, d) * w2;
  return out;
}

// One scan of the blocked Gibbs sampler: refresh all diagonals a, then the
// column blocks b_0, ..., b_{p-2} in order. Block i conditions on the already
// refreshed blocks before it and the old blocks after it. The four factor
// matrices are carried with rank-one updates: M and Mbar absorb the refreshed
// factor from the previous block, R and Rbar shed the old factor of the
// current block. The trailing submatrix of Q = B^{-T} A^{-1} B^{-1} used at
// block i only involves columns of B^{-1} past i, which the scan has not
// touched yet, so Q is computed once per scan from the old B and the new a.
inline CholeskyFactors gibbs_step(const CholeskyFactors& state, const MgigParams& p,
                                  RngStream& rng) {
  const int d = p.dim();
  if (state.dim() != d) throw DimMismatchError("gibbs_step: state dim mismatch");

  Matrix B = unit_lower_from_packed(d, state.b);
  Matrix Binv = B.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Matrix BtPsiB = B.transpose() * p.psi * B;
  Matrix BinvGamBinvT = Binv * p.gamma * Binv.transpose();

  Vector a_new(d);
  for (int i = 0; i < d; ++i)
    a_new[i] = sample_gig({p.lambda + (d - i), BtPsiB(i, i), BinvGamBinvT(i, i)}, rng);
  if (d == 1) return {a_new, state.b};

  Vector sqrt_a = a_new.array().sqrt();
  Matrix Q = Binv.transpose() * a_new.cwiseInverse().asDiagonal() * Binv;

  Matrix M = p.psi;
  Matrix Mbar = p.gamma;
  Matrix R = B * sqrt_a.asDiagonal();
  Matrix Rbar = Binv.transpose() * sqrt_a.cwiseInverse().asDiagonal();

  Vector b_new(packed_offdiag_size(d));
  Vector c_prev;
  for (int i = 0; i < d - 1; ++i) {
    const int k = d - i - 1;
    Vector c_old = detail::column_factor(d, i, detail::packed_block(state.b, d, i));
    {
      // R <- Bbar_i R,  Rbar <- B_i^T Rbar  (old factor for column i)
      Vector ri = R.row(i);
      R.noalias() -= c_old * ri.transpose();
      Vector t = Rbar.transpose() * c_old;
      Rbar.row(i) += t.transpose();
    }
    if (i > 0) {
      // M <- B*^T M B*,  Mbar <- Bbar* Mbar Bbar*^T  (new factor for column i-1)
      Vector mc = M * c_prev;
      M.col(i - 1) += mc;
      Vector cm = M.transpose() * c_prev;
      M.row(i - 1) += cm.transpose();
      Vector mbr = Mbar.row(i - 1);
      Mbar.noalias() -= c_prev * mbr.transpose();
      Vector mbc = Mbar.col(i - 1);
      Mbar.noalias() -= mbc * c_prev.transpose();
    }
    MvnPrecisionParams cond;
    cond.precision =
        a_new[i] * p.psi.block(i + 1, i + 1, k, k) + Mbar(i, i) * Q.block(i + 1, i + 1, k, k);
    Vector w1 = R * R.row(i).transpose();
    Vector w2 = Rbar.transpose() * Mbar.row(i).transpose();
    cond.precision_times_mean =
        -M.block(i + 1, 0, k, d) * w1 + Rbar.block(i + 1, 0, k, d) * w2;
    Vector bi_new = sample_mvn_precision(cond, rng);
    b_new.segment(packed_index(d, i + 1, i), k) = bi_new;
    c_prev = detail::column_factor(d, i, bi_new);
  }
  return {a_new, b_new};
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings kernels. Each returns the new state plus whether the
// proposal was accepted and the log acceptance probability (capped at 0).

struct MhResult {
  Matrix sigma;
  bool accepted;
  double log_accept_prob;
};

// Independent Wishart proposal W(2*lambda + p + 1, Psi^{-1}). The |S|^lambda
// factor and the Psi trace cancel against the proposal kernel exactly, so the
// acceptance ratio only involves the Gamma trace. Requires lambda > -1 for
// the proposal degrees of freedom to be valid.
inline MhResult mh1_step(const Matrix& sigma, const MgigParams& p, RngStream& rng) {
  const int d = p.dim();
  if (!(p.lambda > -1.0))
    throw InvalidParamsError("mh1_step: requires lambda > -1");
  Eigen::LLT<Matrix> llt(p.psi);
  if (llt.info() != Eigen::Success) throw NotSpdError("mh1_step: psi not SPD");
  Matrix psi_inv = llt.solve(Matrix::Identity(d, d));
  Matrix prop =
      sample_wishart({2.0 * p.lambda + d + 1, 0.5 * (psi_inv + psi_inv.transpose())}, rng);
  Eigen::LLT<Matrix> llt_new(prop), llt_old(sigma);
  if (llt_new.info() != Eigen::Success || llt_old.info() != Eigen::Success)
    throw NotSpdError("mh1_step: state not SPD");
  const double log_r =
      -0.5 * (llt_new.solve(p.gamma).trace() - llt_old.solve(p.gamma).trace());
  const double lap = std::min(0.0, log_r);
  if (std::log(rng.uniform()) < log_r) return {prop, true, lap};
  return {sigma, false, lap};
}

// Mode of the target: the unique SPD solution of 2*lambda*S - S*Psi*S + Gamma = 0.
inline Matrix mgig_mode(const MgigParams& p) {
  return solve_riccati(p.lambda, p.psi, p.gamma);
}

// Independent Wishart proposal centered at the target mode:
// W(rho0, mode / (rho0 - p - 1)) with rho0 = p + 1 + rho, so the proposal
// mode matches the target mode for any concentration rho > 0.
inline MhResult mh2_step(const Matrix& sigma, const MgigParams& p, double rho, RngStream& rng,
                         const std::optional<Matrix>& cached_mode = std::nullopt) {
  const int d = p.dim();
  if (!(rho > 0.0)) throw InvalidParamsError("mh2_step: rho must be positive");
  Matrix mode = cached_mode ? *cached_mode : mgig_mode(p);
  const double rho0 = d + 1 + rho;
  WishartParams q{rho0, mode / (rho0 - d - 1)};
  Matrix prop = sample_wishart(q, rng);
  const double log_r = (log_density_unnorm(prop, p) - log_density_unnorm(sigma, p)) -
                       (wishart_log_kernel(prop, q) - wishart_log_kernel(sigma, q));
  const double lap = std::min(0.0, log_r);
  if (std::log(rng.uniform()) < log_r) return {prop, true, lap};
  return {sigma, false, lap};
}

namespace detail {

// log of (x - y) / (log x - log y) for x, y > 0, continuous limit x as y -> x.
inline double log_mean_slope(double x, double y) {
  if (std::abs(x - y) <= tol::eig_coincide * std::max(x, y)) return std::log(std::max(x, y));
  return std::log((x - y) / (std::log(x) - std::log(y)));
}

}  // namespace detail

// Random-direction walk on the matrix-log scale: draw a random symmetric
// direction of unit Frobenius norm, scaled by a standard normal magnitude,
// and add it to log(S). The Jacobian of the exp map enters the ratio through
// the divided differences of paired eigenvalues.
inline MhResult hr_step(const Matrix& sigma, const MgigParams& p, RngStream& rng) {
  const int d = p.dim();
  require_same_dim(sigma, p.psi, "hr_step");
  Matrix Lmat(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) {
      const double l = rng.normal();
      Lmat(i, j) = l;
      Lmat(j, i) = l;
    }
  const double v = rng.normal();
  double ss = 0.0;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) ss += Lmat(i, j) * Lmat(i, j);
  Matrix V = (v / std::sqrt(ss)) * Lmat;
  Matrix log_old = matrix_log_spd(sigma);
  Matrix prop = matrix_exp_sym(Matrix(log_old + V));

  EigenSym e_old = eigen_sym(sigma);
  EigenSym e_new = eigen_sym(prop);
  double log_jac = 0.0;
  for (int i = 0; i < d; ++i) {
    // the i = j divided difference is the eigenvalue itself
    log_jac += std::log(e_new.values[i]) - std::log(e_old.values[i]);
    for (int j = i + 1; j < d; ++j)
      log_jac += detail::log_mean_slope(e_new.values[i], e_new.values[j]) -
                 detail::log_mean_slope(e_old.values[i], e_old.values[j]);
  }
  const double log_r =
      log_density_unnorm(prop, p) - log_density_unnorm(sigma, p) + log_jac;
  const double lap = std::min(0.0, log_r);
  if (std::log(rng.uniform()) < log_r) return {prop, true, lap};
  return {sigma, false, lap};
}

// ---------------------------------------------------------------------------
// Chain orchestration.

enum class SamplerKind { GS, MH1, MH2, HR };

inline const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::GS: return "GS";
    case SamplerKind::MH1: return "MH1";
    case SamplerKind::MH2: return "MH2";
    case SamplerKind::HR: return "HR";
  }
  return "?";
}

inline SamplerKind sampler_kind_from_string(const std::string& s) {
  if (s == "GS") return SamplerKind::GS;
  if (s == "MH1") return SamplerKind::MH1;
  if (s == "MH2") return SamplerKind::MH2;
  if (s == "HR") return SamplerKind::HR;
  throw ConfigError("unknown sampler kind: " + s);
}

struct ChainOptions {
  int n_iter = 1000;           // total iterations including burn-in
  int burn_in = 0;
  int thin = 1;
  double mh2_rho = 5.0;        // concentration of the mode-matched proposal
  std::optional<Matrix> init;  // default: target mode if lambda > -1, else I
};

struct Chain {
  std::vector<Matrix> draws;     // post burn-in, thinned
  SamplerKind kind;
  double accept_rate;            // fraction accepted post burn-in (1 for GS)
  double wall_seconds;           // time spent in post burn-in iterations
  int n_iter, burn_in, thin;
};

inline Chain sample_chain(const MgigParams& p, SamplerKind kind, const ChainOptions& opt,
                          RngStream& rng) {
  p.validate();
  if (opt.n_iter <= 0 || opt.burn_in < 0 || opt.burn_in >= opt.n_iter || opt.thin <= 0)
    throw InvalidParamsError("sample_chain: bad iteration counts");
  const int d = p.dim();
  Matrix init;
  if (opt.init) {
    init = *opt.init;
    require_spd(init, "sample_chain(init)");
    require_same_dim(init, p.psi, "sample_chain(init)");
  } else if (p.lambda > -1.0) {
    init = mgig_mode(p);
  } else {
    init = Matrix::Identity(d, d);
  }

  std::optional<Matrix> mode_cache;
  if (kind == SamplerKind::MH2) mode_cache = mgig_mode(p);

  Chain out;
  out.kind = kind;
  out.n_iter = opt.n_iter;
  out.burn_in = opt.burn_in;
  out.thin = opt.thin;
  out.draws.reserve((opt.n_iter - opt.burn_in + opt.thin - 1) / opt.thin);

  CholeskyFactors gs_state;
  Matrix mh_state;
  if (kind == SamplerKind::GS) gs_state = cholesky_unit(init);
  else mh_state = init;

  long accepted = 0, proposals = 0;
  double wall = 0.0;
  for (int t = 0; t < opt.n_iter; ++t) {
    const bool post = t >= opt.burn_in;
    const auto t0 = std::chrono::steady_clock::now();
    Matrix draw;
    switch (kind) {
      case SamplerKind::GS: {
        gs_state = gibbs_step(gs_state, p, rng);
        if (post) ++accepted, ++proposals;
        break;
      }
      case SamplerKind::MH1: {
        MhResult r = mh1_step(mh_state, p, rng);
        mh_state = r.sigma;
        if (post) ++proposals, accepted += r.accepted;
        break;
      }
      case SamplerKind::MH2: {
        MhResult r = mh2_step(mh_state, p, opt.mh2_rho, rng, mode_cache);
        mh_state = r.sigma;
        if (post) ++proposals, accepted += r.accepted;
        break;
      }
      case SamplerKind::HR: {
        MhResult r = hr_step(mh_state, p, rng);
        mh_state = r.sigma;
        if (post) ++proposals, accepted += r.accepted;
        break;
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (post) wall += std::chrono::duration<double>(t1 - t0).count();
    if (post && (t - opt.burn_in) % opt.thin == 0)
      out.draws.push_back(kind == SamplerKind::GS ? reconstruct(gs_state) : mh_state);
  }
  out.accept_rate = proposals > 0 ? static_cast<double>(accepted) / proposals : 0.0;
  out.wall_seconds = wall;
  return out;
}

// ---------------------------------------------------------------------------
// Degenerate second parameter: Gamma = Theta Theta^T with Theta p x q of full
// column rank, q < p. A draw from MGIG(lambda, Psi, Theta Theta^T) is
// Theta X Theta^T + Y with independent
//   X ~ MGIG_q(-lambda - 1 - q, Theta^T Psi Theta, I_q),
//   Y ~ W_p(2*lambda + p + 1, Psi^{-1}).
// For q = 1 the inner draw is a plain GIG.

struct DegenerateMgigParams {
  double lambda;  // > -1
  Matrix psi;     // p x p SPD
  Matrix theta;   // p x q, full column rank, q < p

  int dim() const { return static_cast<int>(psi.rows()); }
  int rank() const { return static_cast<int>(theta.cols()); }
  void validate() const {
    require_spd(psi, "DegenerateMgigParams(psi)");
    if (!(lambda > -1.0))
      throw InvalidParamsError("DegenerateMgigParams: requires lambda > -1");
    if (theta.rows() != psi.rows())
      throw DimMismatchError("DegenerateMgigParams: theta rows must match psi");
    if (theta.cols() >= theta.rows())
      throw InvalidParamsError("DegenerateMgigParams: need rank < dim");
    Eigen::JacobiSVD<Matrix> svd(theta);
    const Vector sv = svd.singularValues();
    if (sv.size() == 0 || sv[sv.size() - 1] <= tol::rank_svd * sv[0])
      throw RankDeficientError("DegenerateMgigParams: theta is column rank deficient");
  }
};

struct MatsumotoYorOptions {
  int inner_iters = 200;  // Gibbs iterations for the inner q x q draw (q >= 2)
};

inline Matrix sample_via_matsumoto_yor(const DegenerateMgigParams& p, RngStream& rng,
                                       const MatsumotoYorOptions& opt = {}) {
  p.validate();
  const int d = p.dim();
  const int q = p.rank();
  Eigen::LLT<Matrix> llt(p.psi);
  Matrix psi_inv = llt.solve(Matrix::Identity(d, d));
  Matrix inner_psi = p.theta.transpose() * p.psi * p.theta;

  Matrix x;
  if (q == 1) {
    x = Matrix::Constant(1, 1, sample_gig({-p.lambda - 1.0, inner_psi(0, 0), 1.0}, rng));
  } else {
    MgigParams inner{-p.lambda - 1.0 - q, 0.5 * (inner_psi + inner_psi.transpose()),
                     Matrix::Identity(q, q)};
    ChainOptions copt;
    copt.n_iter = opt.inner_iters;
    copt.burn_in = opt.inner_iters - 1;
    Chain c = sample_chain(inner, SamplerKind::GS, copt, rng);
    x = c.draws.back();
  }
  Matrix y =
      sample_wishart({2.0 * p.lambda + d + 1, 0.5 * (psi_inv + psi_inv.transpose())}, rng);
  Matrix s = p.theta * x * p.theta.transpose() + y;
  return 0.5 * (s + s.transpose());
}

}  // namespace mgig
