#pragma once

// Multivariate normal (precision parameterization), Wishart via the Bartlett
// construction, and inverse Wishart.

#include <cmath>

#include "mgig/common.hpp"
#include "mgig/matrix_core.hpp"
#include "mgig/rng.hpp"

namespace mgig {

// N(N^{-1} n, N^{-1}) given (n, N).
struct MvnPrecisionParams {
  Vector precision_times_mean;  // n
  Matrix precision;             // N, SPD
};

inline Vector sample_mvn_precision(const MvnPrecisionParams& p, RngStream& rng) {
  require_square(p.precision, "sample_mvn_precision");
  if (p.precision.rows() != p.precision_times_mean.size())
    throw DimMismatchError("sample_mvn_precision: n and N dims differ");
  Eigen::LLT<Matrix> llt(p.precision);
  if (llt.info() != Eigen::Success) throw NotSpdError("sample_mvn_precision: N not SPD");
  const int k = static_cast<int>(p.precision.rows());
  Vector mean = llt.solve(p.precision_times_mean);
  Vector z(k);
  for (int i = 0; i < k; ++i) z[i] = rng.normal();
  // x = mean + L^{-T} z has covariance N^{-1}
  Matrix L = llt.matrixL();
  Vector shift = L.triangularView<Eigen::Lower>().transpose().solve(z);
  return mean + shift;
}

struct WishartParams {
  double dof;    // > dim - 1
  Matrix scale;  // SPD

  void validate() const {
    require_square(scale, "WishartParams");
    if (!(dof > scale.rows() - 1))
      throw InvalidParamsError("WishartParams: dof must exceed dim - 1");
  }
};

inline Matrix sample_wishart(const WishartParams& p, RngStream& rng) {
  p.validate();
  const int d = static_cast<int>(p.scale.rows());
  Eigen::LLT<Matrix> llt(p.scale);
  if (llt.info() != Eigen::Success) throw NotSpdError("sample_wishart: scale not SPD");
  Matrix L = llt.matrixL();
  Matrix T = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) T(i, i) = std::sqrt(rng.chi_squared(p.dof - i));
  for (int j = 0; j < d; ++j)
    for (int i = j + 1; i < d; ++i) T(i, j) = rng.normal();
  Matrix LT = L * T;
  return LT * LT.transpose();
}

// log W_p(x | dof, scale) up to the additive constant that does not depend
// on x (enough for Metropolis ratios with a fixed proposal).
inline double wishart_log_kernel(const Matrix& x, const WishartParams& p) {
  p.validate();
  require_same_dim(x, p.scale, "wishart_log_kernel");
  const int d = static_cast<int>(x.rows());
  Eigen::LLT<Matrix> lltx(x);
  if (lltx.info() != Eigen::Success) throw NotSpdError("wishart_log_kernel: x not SPD");
  double logdet = 0.0;
  Matrix Lx = lltx.matrixL();
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(Lx(i, i));
  Eigen::LLT<Matrix> llts(p.scale);
  const double quad = llts.solve(x).trace();
  return 0.5 * (p.dof - d - 1) * logdet - 0.5 * quad;
}

// x ~ IW(psi, dof)  <=>  x^{-1} ~ W(dof, psi^{-1})
inline Matrix sample_inverse_wishart(const Matrix& psi, double dof, RngStream& rng) {
  require_square(psi, "sample_inverse_wishart");
  Eigen::LLT<Matrix> llt(psi);
  if (llt.info() != Eigen::Success) throw NotSpdError("sample_inverse_wishart: psi not SPD");
  const int d = static_cast<int>(psi.rows());
  Matrix psi_inv = llt.solve(Matrix::Identity(d, d));
  Matrix w = sample_wishart({dof, 0.5 * (psi_inv + psi_inv.transpose())}, rng);
  Eigen::LLT<Matrix> lltw(w);
  if (lltw.info() != Eigen::Success) throw NotSpdError("sample_inverse_wishart: draw singular");
  Matrix inv = lltw.solve(Matrix::Identity(d, d));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace mgig
