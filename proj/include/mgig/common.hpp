#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mgig {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. Everything thrown by this library derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotSpdError : Error {
  using Error::Error;
};
struct NotSymmetricError : Error {
  using Error::Error;
};
struct DimMismatchError : Error {
  using Error::Error;
};
struct InvalidParamsError : Error {
  using Error::Error;
};
struct RankDeficientError : Error {
  using Error::Error;
};
struct EmptyChainError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

// Centralized numeric tolerances.
namespace tol {
inline constexpr double sym = 1e-9;          // relative symmetry check
inline constexpr double eps_spd = 1e-12;     // min eigenvalue relative to max
inline constexpr double rank_svd = 1e-10;    // singular values below this x largest are zero
inline constexpr double eig_coincide = 1e-12;// coincident-eigenvalue threshold (hit-and-run)
}  // namespace tol

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DimMismatchError(std::string(what) + ": matrix must be square and nonempty");
}

inline void require_symmetric(const Matrix& m, const char* what) {
  require_square(m, what);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > tol::sym * scale)
    throw NotSymmetricError(std::string(what) + ": matrix is not symmetric");
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimMismatchError(std::string(what) + ": dimension mismatch");
}

}  // namespace mgig
