#pragma once

// Univariate generalized inverse Gaussian sampling, density
//   f(x) ∝ x^{nu-1} exp{-(a x + b / x) / 2},  x > 0.
// Boundary cases dispatch to Gamma (b=0, nu>0) and inverse-Gamma (a=0, nu<0).
// The interior case reduces to the standardized two-parameter family
// z^{nu-1} exp{-omega (z + 1/z) / 2} with omega = sqrt(a b), scale
// sqrt(b/a), and is sampled by ratio-of-uniforms (with mode shift when the
// density is peaked enough) or a two-piece rejection envelope for
// 0 < nu < 1 with small omega, where ratio-of-uniforms degrades.

#include <cmath>

#include "mgig/common.hpp"
#include "mgig/rng.hpp"

namespace mgig {

struct GigParams {
  double nu;  // order
  double a;   // rate on x
  double b;   // rate on 1/x

  void validate() const {
    if (a < 0.0 || b < 0.0) throw InvalidParamsError("GigParams: rates must be nonnegative");
    if (a == 0.0 && b == 0.0) throw InvalidParamsError("GigParams: a and b cannot both be 0");
    if (b == 0.0 && nu <= 0.0)
      throw InvalidParamsError("GigParams: b=0 requires nu > 0 (Gamma limit)");
    if (a == 0.0 && nu >= 0.0)
      throw InvalidParamsError("GigParams: a=0 requires nu < 0 (inverse-Gamma limit)");
  }
};

inline double gig_log_kernel(double x, const GigParams& p) {
  return (p.nu - 1.0) * std::log(x) - 0.5 * (p.a * x + p.b / x);
}

namespace detail {

// log of z^{nu-1} exp{-omega(z+1/z)/2}
inline double gig_std_logf(double z, double nu, double omega) {
  return (nu - 1.0) * std::log(z) - 0.5 * omega * (z + 1.0 / z);
}

inline double gig_std_mode(double nu, double omega) {
  if (nu >= 1.0) return ((nu - 1.0) + std::sqrt((nu - 1.0) * (nu - 1.0) + omega * omega)) / omega;
  return omega / ((1.0 - nu) + std::sqrt((1.0 - nu) * (1.0 - nu) + omega * omega));
}

// Ratio-of-uniforms with mode shift. Valid for all nu >= 0, omega > 0;
// efficient when nu >= 1 or omega > 1.
inline double gig_rou_shift(double nu, double omega, RngStream& rng) {
  const double m = gig_std_mode(nu, omega);
  const double lfm = gig_std_logf(m, nu, omega);
  // Roots of x^3 + A x^2 + B x + C = 0 bracket the mode; they are the
  // stationary points of (x-m)^2 f(x).
  const double A = -2.0 * (nu + 1.0) / omega - m;
  const double B = 2.0 * (nu - 1.0) * m / omega - 1.0;
  const double C = m;
  // trigonometric solution (three real roots)
  const double pp = B - A * A / 3.0;
  const double qq = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
  const double phi = std::acos(std::clamp(-qq / (2.0 * std::sqrt(-pp * pp * pp / 27.0)), -1.0, 1.0));
  const double r = 2.0 * std::sqrt(-pp / 3.0);
  double roots[3];
  for (int k = 0; k < 3; ++k)
    roots[k] = r * std::cos(phi / 3.0 - 2.0943951023931954923 * k) - A / 3.0;
  double xlo = 0.0, xhi = 0.0;
  for (double x : roots) {
    if (x > 0.0 && x < m) xlo = x;
    if (x > m) xhi = x;
  }
  const double ulo = (xlo - m) * std::exp(0.5 * (gig_std_logf(xlo, nu, omega) - lfm));
  const double uhi = (xhi - m) * std::exp(0.5 * (gig_std_logf(xhi, nu, omega) - lfm));
  for (;;) {
    const double u = ulo + rng.uniform() * (uhi - ulo);
    const double v = rng.uniform();
    const double x = u / v + m;
    if (x <= 0.0) continue;
    if (2.0 * std::log(v) <= gig_std_logf(x, nu, omega) - lfm) return x;
  }
}

// Plain ratio-of-uniforms (no shift); used for 0 <= nu < 1 with moderate omega.
inline double gig_rou_noshift(double nu, double omega, RngStream& rng) {
  const double m = gig_std_mode(nu, omega);
  const double lfm = gig_std_logf(m, nu, omega);
  const double xu = ((1.0 + nu) + std::sqrt((1.0 + nu) * (1.0 + nu) + omega * omega)) / omega;
  const double uhi = xu * std::exp(0.5 * (gig_std_logf(xu, nu, omega) - lfm));
  for (;;) {
    const double u = rng.uniform() * uhi;
    const double v = rng.uniform();
    const double x = u / v;
    if (2.0 * std::log(v) <= gig_std_logf(x, nu, omega) - lfm) return x;
  }
}

// Two-piece envelope for 0 < nu < 1 and small omega: x^{nu-1} on (0, x0],
// x0^{nu-1} exp(-omega x / 2) on (x0, inf), x0 = omega / (1 - nu).
inline double gig_two_piece(double nu, double omega, RngStream& rng) {
  const double x0 = omega / (1.0 - nu);
  const double area1 = std::pow(x0, nu) / nu;
  const double area2 = std::pow(x0, nu - 1.0) * (2.0 / omega) * std::exp(-0.5 * omega * x0);
  for (;;) {
    const double u = rng.uniform() * (area1 + area2);
    double x, log_accept;
    if (u < area1) {
      x = x0 * std::pow(rng.uniform(), 1.0 / nu);
      log_accept = -0.5 * omega * (x + 1.0 / x);
    } else {
      x = x0 + (2.0 / omega) * rng.exponential();
      log_accept = (nu - 1.0) * (std::log(x) - std::log(x0)) - 0.5 * omega / x;
    }
    if (std::log(rng.uniform()) <= log_accept) return x;
  }
}

// Standardized draw, nu >= 0.
inline double gig_std(double nu, double omega, RngStream& rng) {
  if (nu >= 1.0 || omega > 1.0) return gig_rou_shift(nu, omega, rng);
  if (omega >= std::min(0.5, (2.0 / 3.0) * std::sqrt(1.0 - nu)))
    return gig_rou_noshift(nu, omega, rng);
  if (nu > 1e-8) return gig_two_piece(nu, omega, rng);
  return gig_rou_noshift(nu, omega, rng);  // nu ~ 0, tiny omega: rare, still exact
}

}  // namespace detail

inline double sample_gig(const GigParams& p, RngStream& rng) {
  p.validate();
  if (p.b == 0.0) return 2.0 * rng.gamma(p.nu) / p.a;
  if (p.a == 0.0) return 0.5 * p.b / rng.gamma(-p.nu);
  const double omega = std::sqrt(p.a * p.b);
  const double scale = std::sqrt(p.b / p.a);
  if (p.nu >= 0.0) return scale * detail::gig_std(p.nu, omega, rng);
  return scale / detail::gig_std(-p.nu, omega, rng);
}

}  // namespace mgig
