#pragma once

// Dense symmetric/SPD kernels: unit-diagonal Cholesky, symmetric eigen
// decomposition, matrix exp/log/sqrt on the SPD cone, and the closed-form
// solver for the quadratic matrix equation 2*lambda*S - S*Psi*S + Gamma = 0.

#include <cmath>
#include <utility>

#include "mgig/common.hpp"

namespace mgig {

// Sigma = B * diag(a) * B^T with B unit lower triangular.
// Off-diagonals are packed column by column: b = (b_1, ..., b_{p-1}) where
// b_j = (B(j+1,j), ..., B(p,j)).
struct CholeskyFactors {
  Vector a;  // p positive diagonals
  Vector b;  // p(p-1)/2 packed off-diagonals

  int dim() const { return static_cast<int>(a.size()); }
};

inline int packed_offdiag_size(int p) { return p * (p - 1) / 2; }

// Index of B(i,j), i>j (0-based), inside the packed vector.
inline int packed_index(int p, int i, int j) {
  // column j holds p-1-j entries, preceded by columns 0..j-1
  return j * p - j * (j + 1) / 2 + (i - j - 1);
}

inline Matrix unit_lower_from_packed(int p, const Vector& b) {
  if (b.size() != packed_offdiag_size(p))
    throw DimMismatchError("unit_lower_from_packed: packed size does not match dim");
  Matrix B = Matrix::Identity(p, p);
  for (int j = 0; j < p - 1; ++j)
    for (int i = j + 1; i < p; ++i) B(i, j) = b[packed_index(p, i, j)];
  return B;
}

inline Vector packed_from_unit_lower(const Matrix& B) {
  const int p = static_cast<int>(B.rows());
  Vector b(packed_offdiag_size(p));
  for (int j = 0; j < p - 1; ++j)
    for (int i = j + 1; i < p; ++i) b[packed_index(p, i, j)] = B(i, j);
  return b;
}

struct EigenSym {
  Vector values;   // descending
  Matrix vectors;  // columns are eigenvectors, orthogonal
};

inline EigenSym eigen_sym(const Matrix& m) {
  require_symmetric(m, "eigen_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw Error("eigen_sym: eigendecomposition failed");
  const int p = static_cast<int>(m.rows());
  EigenSym out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  (void)p;
  return out;
}

inline void require_spd(const Matrix& m, const char* what) {
  require_symmetric(m, what);
  EigenSym e = eigen_sym(m);
  const double largest = e.values[0];
  if (largest <= 0.0 || e.values[e.values.size() - 1] <= tol::eps_spd * largest)
    throw NotSpdError(std::string(what) + ": matrix is not positive definite");
}

inline bool is_spd(const Matrix& m) {
  try {
    require_spd(m, "is_spd");
    return true;
  } catch (const Error&) {
    return false;
  }
}

// Sigma = B A B^T, unique for SPD input. Throws NotSpdError on a
// nonpositive pivot.
inline CholeskyFactors cholesky_unit(const Matrix& sigma) {
  require_symmetric(sigma, "cholesky_unit");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NotSpdError("cholesky_unit: pivot <= 0 during factorization");
  Matrix L = llt.matrixL();
  const int p = static_cast<int>(sigma.rows());
  CholeskyFactors f;
  f.a.resize(p);
  for (int i = 0; i < p; ++i) f.a[i] = L(i, i) * L(i, i);
  Matrix B = L * L.diagonal().cwiseInverse().asDiagonal();
  f.b = packed_from_unit_lower(B);
  return f;
}

inline Matrix reconstruct(const CholeskyFactors& f) {
  const int p = f.dim();
  for (int i = 0; i < p; ++i)
    if (!(f.a[i] > 0.0))
      throw InvalidParamsError("reconstruct: diagonal entries must be positive");
  Matrix B = unit_lower_from_packed(p, f.b);
  return B * f.a.asDiagonal() * B.transpose();
}

inline Matrix matrix_exp_sym(const Matrix& v) {
  require_symmetric(v, "matrix_exp_sym");
  EigenSym e = eigen_sym(v);
  return e.vectors * e.values.array().exp().matrix().asDiagonal() * e.vectors.transpose();
}

inline Matrix matrix_log_spd(const Matrix& m) {
  require_spd(m, "matrix_log_spd");
  EigenSym e = eigen_sym(m);
  return e.vectors * e.values.array().log().matrix().asDiagonal() * e.vectors.transpose();
}

inline Matrix spd_sqrt(const Matrix& m) {
  require_spd(m, "spd_sqrt");
  EigenSym e = eigen_sym(m);
  return e.vectors * e.values.array().sqrt().matrix().asDiagonal() * e.vectors.transpose();
}

// Positive semidefinite square root, for inputs that may be singular.
inline Matrix psd_sqrt(const Matrix& m) {
  require_symmetric(m, "psd_sqrt");
  EigenSym e = eigen_sym(m);
  return e.vectors * e.values.array().max(0.0).sqrt().matrix().asDiagonal() *
         e.vectors.transpose();
}

// Unique SPD solution of 2*lambda*S - S*Psi*S + Gamma = 0 (the stationarity
// condition of the target's log-density). With Psi = L L^T,
// Y = lambda*I + sqrt(lambda^2 I + L^T Gamma L) and S = L^{-T} Y L^{-1}.
// Gamma may be positive semidefinite as long as lambda > 0.
inline Matrix solve_riccati(double lambda, const Matrix& psi, const Matrix& gamma) {
  require_spd(psi, "solve_riccati(psi)");
  require_symmetric(gamma, "solve_riccati(gamma)");
  require_same_dim(psi, gamma, "solve_riccati");
  const int p = static_cast<int>(psi.rows());
  Eigen::LLT<Matrix> llt(psi);
  if (llt.info() != Eigen::Success) throw NotSpdError("solve_riccati: psi not SPD");
  Matrix L = llt.matrixL();
  Matrix inner = lambda * lambda * Matrix::Identity(p, p) + L.transpose() * gamma * L;
  Matrix Y = lambda * Matrix::Identity(p, p) + psd_sqrt(inner);
  // S = L^{-T} Y L^{-1}
  auto Lt = L.triangularView<Eigen::Lower>().transpose();
  Matrix W = Lt.solve(Y);
  Matrix S = Lt.solve(W.transpose()).transpose();
  return 0.5 * (S + S.transpose());
}

}  // namespace mgig
