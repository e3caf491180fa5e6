#pragma once

// Matrix-variate skew-t regression via the normal mean-variance mixture
//   Y_i | W_i ~ N_{p x q}(M + W_i B, W_i, Omega),   W_i ~ IW_p(Psi, nu),
// with psi_11 = 1 for identifiability. The full conditional of each W_i^{-1}
// is matrix GIG, updated with the Gibbs kernel or either Metropolis kernel.
// Setting B = 0 recovers the symmetric matrix-t model, in which case the
// W_i conditionals are inverse Wishart and drawn exactly.

#include <cmath>
#include <vector>

#include "mgig/mgig.hpp"

namespace mgig {

enum class MstWUpdate { GS, MH1, HR };

inline const char* to_string(MstWUpdate u) {
  switch (u) {
    case MstWUpdate::GS: return "GS";
    case MstWUpdate::MH1: return "MH1";
    case MstWUpdate::HR: return "HR";
  }
  return "?";
}

struct MstData {
  std::vector<Matrix> y;  // n observations, each p x q

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return y.empty() ? 0 : static_cast<int>(y.front().rows()); }
  int q() const { return y.empty() ? 0 : static_cast<int>(y.front().cols()); }
};

struct MstHyper {
  double nu = 10.0;            // mixing degrees of freedom (fixed, > p - 1)
  Matrix a0_m, u0_m, v0_m;     // mean prior: vec(M) ~ N(vec(A0), V0 (x) U0)
  Matrix a0_b, u0_b, v0_b;     // skewness prior, same structure
  double eta0 = 1.0;           // Wishart prior dof for Psi
  Matrix psi0;                 // Wishart prior scale for Psi
  double xi0 = 1.0;            // inverse Wishart prior dof for Omega
  Matrix omega0;               // inverse Wishart prior scale for Omega

  static MstHyper defaults(int p, int q, double nu = 10.0) {
    MstHyper h;
    h.nu = nu;
    h.a0_m = Matrix::Zero(p, q);
    h.u0_m = 100.0 * Matrix::Identity(p, p);
    h.v0_m = Matrix::Identity(q, q);
    h.a0_b = Matrix::Zero(p, q);
    h.u0_b = 100.0 * Matrix::Identity(p, p);
    h.v0_b = Matrix::Identity(q, q);
    h.eta0 = p + 1;
    h.psi0 = Matrix::Identity(p, p);
    h.xi0 = q + 1;
    h.omega0 = Matrix::Identity(q, q);
    return h;
  }
  void validate(int p, int q) const {
    if (!(nu > p - 1)) throw InvalidParamsError("MstHyper: nu must exceed p - 1");
    if (!(eta0 > p - 1)) throw InvalidParamsError("MstHyper: eta0 must exceed p - 1");
    if (!(xi0 > q - 1)) throw InvalidParamsError("MstHyper: xi0 must exceed q - 1");
  }
};

struct MstState {
  Matrix m;                // p x q location
  Matrix b;                // p x q skewness
  Matrix psi;              // p x p mixing scale, psi(0,0) = 1
  Matrix omega;            // q x q column covariance
  std::vector<Matrix> w;   // n mixing matrices, each p x p SPD
};

namespace detail {

// Column-major vec and its inverse.
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}
inline Matrix unvec(const Vector& v, int rows, int cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix sym_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NotSpdError("sym_inverse: matrix not SPD");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace detail

// Parameters of the full conditional of W_i^{-1} (not W_i):
//   W_i^{-1} | . ~ MGIG_p((nu + q - p - 1)/2,
//                         Psi + (Y_i - M) Omega^{-1} (Y_i - M)^T,
//                         B Omega^{-1} B^T).
inline MgigParams mst_winv_conditional(const Matrix& yi, const MstState& st,
                                       const MstHyper& hy) {
  const int p = static_cast<int>(yi.rows());
  const int q = static_cast<int>(yi.cols());
  Matrix omega_inv = detail::sym_inverse(st.omega);
  Matrix resid = yi - st.m;
  Matrix gam_tilde = st.psi + resid * omega_inv * resid.transpose();
  Matrix phi_tilde = st.b * omega_inv * st.b.transpose();
  return {0.5 * (hy.nu + q - p - 1), 0.5 * (gam_tilde + gam_tilde.transpose()),
          0.5 * (phi_tilde + phi_tilde.transpose())};
}

// vec(M) | . ~ N in precision form, precision Omega^{-1} (x) sum W_i^{-1}
// plus the matrix-normal prior precision. Returns the prior itself at n = 0.
inline MvnPrecisionParams mst_m_conditional(const MstData& data, const MstState& st,
                                            const MstHyper& hy) {
  const int p = static_cast<int>(st.m.rows());
  const int q = static_cast<int>(st.m.cols());
  Matrix omega_inv = detail::sym_inverse(st.omega);
  Matrix u0_inv = detail::sym_inverse(hy.u0_m);
  Matrix v0_inv = detail::sym_inverse(hy.v0_m);
  MvnPrecisionParams c;
  c.precision = detail::kron(v0_inv, u0_inv);
  c.precision_times_mean = c.precision * detail::vec(hy.a0_m);
  Matrix sum_w_inv = Matrix::Zero(p, p);
  for (int i = 0; i < data.n(); ++i) {
    Matrix w_inv = detail::sym_inverse(st.w[i]);
    sum_w_inv += w_inv;
    c.precision_times_mean +=
        detail::kron(omega_inv, w_inv) * detail::vec(data.y[i] - st.w[i] * st.b);
  }
  c.precision += detail::kron(omega_inv, sum_w_inv);
  return c;
}

// vec(B) | . ~ N in precision form, precision Omega^{-1} (x) sum W_i plus
// the prior; the W_i cancel in the data term, leaving plain residuals.
inline MvnPrecisionParams mst_b_conditional(const MstData& data, const MstState& st,
                                            const MstHyper& hy) {
  const int p = static_cast<int>(st.m.rows());
  Matrix omega_inv = detail::sym_inverse(st.omega);
  Matrix u0_inv = detail::sym_inverse(hy.u0_b);
  Matrix v0_inv = detail::sym_inverse(hy.v0_b);
  MvnPrecisionParams c;
  c.precision = detail::kron(v0_inv, u0_inv);
  c.precision_times_mean = c.precision * detail::vec(hy.a0_b);
  Matrix sum_w = Matrix::Zero(p, p);
  for (int i = 0; i < data.n(); ++i) {
    sum_w += st.w[i];
    c.precision_times_mean +=
        detail::kron(omega_inv, Matrix::Identity(p, p)) * detail::vec(data.y[i] - st.m);
  }
  c.precision += detail::kron(omega_inv, sum_w);
  return c;
}

// Psi | . ~ W(eta0 + n nu, (sum W_i^{-1} + Psi0^{-1})^{-1})
inline WishartParams mst_psi_conditional(const MstState& st, const MstHyper& hy, int n) {
  const int p = static_cast<int>(st.psi.rows());
  Matrix acc = detail::sym_inverse(hy.psi0);
  for (int i = 0; i < n; ++i) acc += detail::sym_inverse(st.w[i]);
  return {hy.eta0 + n * hy.nu, detail::sym_inverse(0.5 * (acc + acc.transpose()))};
}

struct InverseWishartParams {
  Matrix scale;
  double dof;
};

// Omega | . ~ IW(Omega0 + sum R_i^T W_i^{-1} R_i, xi0 + n p), R_i = Y_i - M - W_i B
inline InverseWishartParams mst_omega_conditional(const MstData& data, const MstState& st,
                                                  const MstHyper& hy) {
  Matrix acc = hy.omega0;
  for (int i = 0; i < data.n(); ++i) {
    Matrix r = data.y[i] - st.m - st.w[i] * st.b;
    acc += r.transpose() * detail::sym_inverse(st.w[i]) * r;
  }
  return {0.5 * (acc + acc.transpose()), hy.xi0 + data.n() * data.p()};
}

// All block conditionals evaluated at the given state (each conditions on
// the state's current values of the other blocks).
struct MstConditionals {
  std::vector<MgigParams> winv;       // conditional of each W_i^{-1}
  std::vector<bool> winv_degenerate;  // Gamma side singular (B rank deficient)
  MvnPrecisionParams m;
  MvnPrecisionParams b;
  WishartParams psi;
  InverseWishartParams omega;
};

inline MstConditionals mst_conditionals(const MstData& data, const MstState& st,
                                        const MstHyper& hy) {
  MstConditionals out;
  for (int i = 0; i < data.n(); ++i) {
    out.winv.push_back(mst_winv_conditional(data.y[i], st, hy));
    const Matrix& g = out.winv.back().gamma;
    bool degenerate = g.cwiseAbs().maxCoeff() == 0.0;
    if (!degenerate) {
      EigenSym e = eigen_sym(g);
      degenerate = e.values[e.values.size() - 1] <= tol::rank_svd * e.values[0];
    }
    out.winv_degenerate.push_back(degenerate);
  }
  out.m = mst_m_conditional(data, st, hy);
  out.b = mst_b_conditional(data, st, hy);
  out.psi = mst_psi_conditional(st, hy, data.n());
  out.omega = mst_omega_conditional(data, st, hy);
  return out;
}

struct MstOptions {
  MstWUpdate w_update = MstWUpdate::GS;
  int w_gibbs_steps = 1;
  bool fix_b_zero = false;  // restrict to the symmetric matrix-t model
};

namespace detail {

// Draw W_i given everything else, handling the rank structure of the
// skewness term: B = 0 gives an exact inverse Wishart; a low-rank
// B Omega^{-1} B^T (always the case when q < p) uses the degenerate
// composition for W_i^{-1}; the full-rank case runs the chosen MGIG kernel
// on W_i^{-1}.
inline Matrix mst_draw_w(const MgigParams& winv_cond, const Matrix& w_current,
                         double nu, int q, MstWUpdate update, int gibbs_steps,
                         RngStream& rng) {
  const int p = winv_cond.dim();
  const double phi_scale = winv_cond.gamma.cwiseAbs().maxCoeff();
  if (phi_scale == 0.0)
    return sample_inverse_wishart(winv_cond.psi, nu + q, rng);
  EigenSym eg = eigen_sym(winv_cond.gamma);
  int rank = 0;
  for (int i = 0; i < p; ++i)
    if (eg.values[i] > tol::rank_svd * eg.values[0]) ++rank;
  Matrix winv;
  if (rank < p && winv_cond.lambda > -1.0) {
    Matrix theta(p, rank);
    for (int r = 0; r < rank; ++r)
      theta.col(r) = eg.vectors.col(r) * std::sqrt(eg.values[r]);
    DegenerateMgigParams dp{winv_cond.lambda, winv_cond.psi, theta};
    winv = sample_via_matsumoto_yor(dp, rng);
  } else {
    MgigParams full = winv_cond;
    if (rank < p)
      full.gamma += (1e-8 * winv_cond.psi.trace() / p) * Matrix::Identity(p, p);
    Matrix cur_inv = sym_inverse(w_current);
    switch (update) {
      case MstWUpdate::GS: {
        CholeskyFactors st = cholesky_unit(cur_inv);
        for (int t = 0; t < gibbs_steps; ++t) st = gibbs_step(st, full, rng);
        winv = reconstruct(st);
        break;
      }
      case MstWUpdate::MH1:
        winv = mh1_step(cur_inv, full, rng).sigma;
        break;
      case MstWUpdate::HR:
        winv = hr_step(cur_inv, full, rng).sigma;
        break;
    }
  }
  return sym_inverse(winv);
}

}  // namespace detail

// One sweep of the Gibbs sampler: all W_i, then M, B, Psi, Omega. Psi is
// rescaled to psi_11 = 1 after its draw, with the W_i rescaled to match
// (the mixing model is invariant under the joint rescaling).
inline MstState mst_gibbs_step(const MstData& data, const MstState& st, const MstHyper& hy,
                               const MstOptions& opt, RngStream& rng) {
  const int n = data.n(), p = data.p(), q = data.q();
  hy.validate(p, q);
  MstState out = st;

  for (int i = 0; i < n; ++i) {
    MgigParams cond = mst_winv_conditional(data.y[i], out, hy);
    out.w[i] = detail::mst_draw_w(cond, out.w[i], hy.nu, q, opt.w_update,
                                  opt.w_gibbs_steps, rng);
  }

  out.m = detail::unvec(sample_mvn_precision(mst_m_conditional(data, out, hy), rng), p, q);

  if (opt.fix_b_zero)
    out.b = Matrix::Zero(p, q);
  else
    out.b = detail::unvec(sample_mvn_precision(mst_b_conditional(data, out, hy), rng), p, q);

  {
    Matrix psi = sample_wishart(mst_psi_conditional(out, hy, n), rng);
    const double s11 = psi(0, 0);
    out.psi = psi / s11;
    for (int i = 0; i < n; ++i) out.w[i] /= s11;
  }

  {
    InverseWishartParams c = mst_omega_conditional(data, out, hy);
    out.omega = sample_inverse_wishart(c.scale, c.dof, rng);
  }
  return out;
}

inline MstState mst_initial_state(const MstData& data, const MstHyper& hy) {
  const int n = data.n(), p = data.p(), q = data.q();
  MstState st;
  st.m = Matrix::Zero(p, q);
  for (const Matrix& yi : data.y) st.m += yi;
  if (n > 0) st.m /= n;
  st.b = Matrix::Zero(p, q);
  st.psi = Matrix::Identity(p, p);
  st.omega = Matrix::Identity(q, q);
  st.w.assign(n, Matrix::Identity(p, p));
  (void)hy;
  return st;
}

// Draw data from the generative model at the given parameter values.
inline MstData simulate_mst(int n, const Matrix& m, const Matrix& b, const Matrix& psi,
                            const Matrix& omega, double nu, RngStream& rng) {
  const int p = static_cast<int>(m.rows());
  const int q = static_cast<int>(m.cols());
  if (!(nu > p - 1)) throw InvalidParamsError("simulate_mst: nu must exceed p - 1");
  Matrix omega_sqrt = spd_sqrt(omega);
  MstData data;
  data.y.reserve(n);
  for (int i = 0; i < n; ++i) {
    Matrix w = sample_inverse_wishart(psi, nu, rng);
    Matrix w_sqrt = spd_sqrt(w);
    Matrix z(p, q);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < q; ++c) z(r, c) = rng.normal();
    data.y.push_back(m + w * b + w_sqrt * z * omega_sqrt);
  }
  return data;
}

// Posterior predictive draw of a new observation at the given state.
inline Matrix mst_predictive_draw(const MstState& st, const MstHyper& hy, RngStream& rng) {
  const int p = static_cast<int>(st.m.rows());
  const int q = static_cast<int>(st.m.cols());
  Matrix w = sample_inverse_wishart(st.psi, hy.nu, rng);
  Matrix w_sqrt = spd_sqrt(w);
  Matrix omega_sqrt = spd_sqrt(st.omega);
  Matrix z(p, q);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < q; ++c) z(r, c) = rng.normal();
  return st.m + w * st.b + w_sqrt * z * omega_sqrt;
}

// Quadratic predictive loss (goodness of fit plus predictive variance):
//   sum_i ||y_i - yhat_i||_F^2 + sum_i tr Var(Y_i^rep),
// with one replicate of each observation per retained state. Replicates are
// observation specific: Y_i^rep is drawn conditional on the state's latent
// W_i, so a model that tracks per-observation structure earns a lower fit
// term instead of inflating its variance.
inline double predictive_loss(const std::vector<MstState>& chain, const MstData& data,
                              const MstHyper& hy, RngStream& rng) {
  if (chain.empty()) throw EmptyChainError("predictive_loss: empty chain");
  const int n = data.n(), p = data.p(), q = data.q();
  const int s = static_cast<int>(chain.size());
  (void)hy;
  std::vector<Matrix> sum(n, Matrix::Zero(p, q));
  std::vector<double> sum_sq(n, 0.0);
  for (const MstState& st : chain) {
    Matrix omega_sqrt = spd_sqrt(st.omega);
    for (int i = 0; i < n; ++i) {
      Matrix w_sqrt = spd_sqrt(st.w[i]);
      Matrix z(p, q);
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < q; ++c) z(r, c) = rng.normal();
      Matrix rep = st.m + st.w[i] * st.b + w_sqrt * z * omega_sqrt;
      sum[i] += rep;
      sum_sq[i] += rep.squaredNorm();
    }
  }
  double fit = 0.0, penalty = 0.0;
  for (int i = 0; i < n; ++i) {
    Matrix mean = sum[i] / s;
    fit += (data.y[i] - mean).squaredNorm();
    penalty += std::max(0.0, sum_sq[i] / s - mean.squaredNorm());
  }
  return fit + penalty;
}

}  // namespace mgig
