#pragma once

// Implicit closed forms for psi_theta of two tractable models, tracked on the
// branch through (theta, psi) = (0, 0).
//
// Reflected BM with drift, weight concentrated at 0: with c = b/sigma2,
// d = mu^2 + 2 sigma2 psi and a = sqrt(|d|), the three root regimes
// d > 0, d = 0, d < 0 collapse into
//
//   theta = 2 psi T / (1 - mu T),   T = tanh(a c)/a  |  c  |  tan(a c)/a
//
// The complex regime is evaluated in its sin/cos form so the zeros of
// cos(a c) are harmless.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "rjd/errors.hpp"

namespace rjd::oracle {

struct RbmParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  double b = 1.0;

  void validate() const {
    if (!(sigma2 > 0)) throw InvalidInput("rbm oracle needs sigma2 > 0");
    if (!(b > 0)) throw InvalidInput("rbm oracle needs b > 0");
    if (!std::isfinite(mu)) throw InvalidInput("rbm oracle needs finite mu");
  }
};

struct BdParams {
  double lambda = 50.0;
  int b = 3;

  void validate() const {
    if (!(lambda > 0)) throw InvalidInput("birth-death oracle needs lambda > 0");
    if (b < 2) throw InvalidInput("birth-death oracle needs b >= 2");
  }
};

namespace detail {

enum class Regime { real, repeated, complex };

struct RbmRoot {
  Regime regime;
  double alpha;  // sqrt(|mu^2 + 2 sigma2 psi|)
};

inline RbmRoot rbm_root(const RbmParams& p, double psi) {
  const double d = p.mu * p.mu + 2 * p.sigma2 * psi;
  const double scale = p.mu * p.mu + 2 * p.sigma2 * std::abs(psi);
  if (std::abs(d) <= 1e-15 * scale) return {Regime::repeated, 0.0};
  if (d > 0) return {Regime::real, std::sqrt(d)};
  return {Regime::complex, std::sqrt(-d)};
}

// Numerator and denominator of theta = num / den.
inline std::pair<double, double> rbm_theta_parts(const RbmParams& p, double psi) {
  const double c = p.b / p.sigma2;
  const RbmRoot r = rbm_root(p, psi);
  switch (r.regime) {
    case Regime::real: {
      const double k = r.alpha * c;
      const double t = r.alpha == 0 ? c : std::tanh(k) / r.alpha;
      return {2 * psi * t, 1 - p.mu * t};
    }
    case Regime::repeated:
      return {2 * psi * c, 1 - p.mu * c};
    case Regime::complex: {
      const double k = r.alpha * c;
      const double s = std::sin(k) / r.alpha;
      return {2 * psi * s, std::cos(k) - p.mu * s};
    }
  }
  return {0.0, 1.0};
}

// Denominator of the complex regime as a function of k = alpha*c.
inline double rbm_complex_den(const RbmParams& p, double k) {
  const double c = p.b / p.sigma2;
  const double s = k == 0 ? c : std::sin(k) * c / k;
  return std::cos(k) - p.mu * s;
}

template <class F>
double bracket_solve(F&& g, double lo, double hi, double glo, double ghi, double tol) {
  std::uintmax_t iters = 200;
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, stop, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace detail

/// Largest psi < 0 at which the implicit relation has a pole; the principal
/// branch lives on (pole, +inf).
inline double rbm_pole(const RbmParams& p) {
  p.validate();
  const double psi_rep = -p.mu * p.mu / (2 * p.sigma2);
  const double c = p.b / p.sigma2;
  if (1 - p.mu * c <= 0) {
    // Pole in the real regime between the repeated root and 0.
    auto den = [&](double psi) { return detail::rbm_theta_parts(p, psi).second; };
    return detail::bracket_solve(den, psi_rep, 0.0, den(psi_rep), den(0.0),
                                 1e-15 * std::max(1.0, std::abs(psi_rep)));
  }
  const double pi = std::acos(-1.0);
  auto den = [&](double k) { return detail::rbm_complex_den(p, k); };
  const double k = detail::bracket_solve(den, 0.0, pi, den(0.0), den(pi), 1e-15);
  const double alpha = k / c;
  return -(p.mu * p.mu + alpha * alpha) / (2 * p.sigma2);
}

inline double rbm_theta_of_psi(const RbmParams& p, double psi) {
  p.validate();
  if (psi == 0.0) return 0.0;
  const auto [num, den] = detail::rbm_theta_parts(p, psi);
  if (std::abs(den) <= 1e-14) {
    throw PoleError("rbm implicit relation has a pole near psi=" + std::to_string(psi), psi);
  }
  return num / den;
}

inline double rbm_psi_of_theta(const RbmParams& p, double theta, double tol = 1e-15) {
  p.validate();
  if (!std::isfinite(theta)) throw InvalidInput("theta must be finite");
  if (theta == 0.0) return 0.0;
  auto g = [&](double psi) { return rbm_theta_of_psi(p, psi) - theta; };
  if (theta > 0) {
    double hi = std::max(theta, 1e-3);
    while (g(hi) < 0) {
      hi *= 4;
      if (hi > 1e300) throw PoleError("no bracket for theta=" + std::to_string(theta), hi);
    }
    return detail::bracket_solve(g, 0.0, hi, -theta, g(hi), tol);
  }
  const double pole = rbm_pole(p);
  double gap = -pole;
  double lo = 0.0;
  for (int k = 0; k < 200; ++k) {
    gap *= 0.5;
    lo = pole + gap;
    if (g(lo) < 0) return detail::bracket_solve(g, lo, 0.0, g(lo), -theta, tol);
  }
  std::ostringstream m;
  m << "theta=" << theta << " is outside the principal branch (pole at psi=" << pole << ")";
  throw PoleError(m.str(), pole);
}

/// Eigenfunction with u(b) = 1 and u'(b) = 0.
inline double rbm_eigenfunction(const RbmParams& p, double psi, double x) {
  p.validate();
  if (x < 0 || x > p.b) throw InvalidInput("rbm eigenfunction needs x in [0, b]");
  const double q = (p.b - x) / p.sigma2;
  const detail::RbmRoot r = detail::rbm_root(p, psi);
  switch (r.regime) {
    case detail::Regime::real: {
      // e^{mu q}(cosh(a q) - mu sinh(a q)/a), factored to avoid overflow.
      const double a = r.alpha;
      const double e = std::exp(-2 * a * q);
      const double shc = a == 0 ? 2 * q : -std::expm1(-2 * a * q) / a;
      return std::exp((p.mu + a) * q) * ((1 + e) - p.mu * shc) / 2;
    }
    case detail::Regime::repeated:
      return std::exp(p.mu * q) * (1 - p.mu * q);
    case detail::Regime::complex: {
      const double a = r.alpha;
      return std::exp(p.mu * q) * (std::cos(a * q) - p.mu * std::sin(a * q) / a);
    }
  }
  return 1.0;
}

/// u(0), ..., u(b) from the reflecting recurrence with u(b) = 1.
inline std::vector<double> bd_eigenfunction(const BdParams& p, double psi) {
  p.validate();
  const int b = p.b;
  const double lam = p.lambda;
  std::vector<double> u(b + 1);
  u[b] = 1.0;
  u[b - 1] = 1.0 + 2.0 * psi / lam;
  for (int x = b - 1; x >= 1; --x) u[x - 1] = (2.0 / lam) * (lam + psi) * u[x] - u[x + 1];
  return u;
}

/// theta(psi) through the recurrence; valid for every psi including the
/// degenerate values 0 and -2 lambda.
inline double bd_theta_of_psi(const BdParams& p, double psi) {
  const auto u = bd_eigenfunction(p, psi);
  if (std::abs(u[0]) <= 1e-14 * std::abs(u[1])) {
    throw PoleError("birth-death implicit relation has a pole near psi=" + std::to_string(psi), psi);
  }
  return p.lambda / 2 + psi - (p.lambda / 2) * u[1] / u[0];
}

/// theta = A/B with the square root of psi(2 lambda + psi) taken in complex
/// arithmetic. Undefined at psi in {0, -2 lambda}.
inline double bd_theta_of_psi_closed_form(const BdParams& p, double psi) {
  p.validate();
  const double lam = p.lambda;
  if (psi == 0.0 || psi == -2 * lam) throw InvalidInput("closed form excludes psi in {0, -2 lambda}");
  using C = std::complex<double>;
  const C s = std::sqrt(C(psi * (2 * lam + psi), 0.0));
  const C bm = std::pow((lam + psi - s) / lam, p.b);
  const C bp = std::pow((lam + psi + s) / lam, p.b);
  const C A = psi * (lam * (bm - bp) + psi * (bm - bp) - s * (bm + bp));
  const C B = psi * (bm - bp) - s * (bm + bp);
  if (std::abs(B) == 0.0) throw PoleError("closed form denominator vanishes", psi);
  const C theta = A / B;
  if (std::abs(theta.imag()) > 1e-10 * std::max(1.0, std::abs(theta.real()))) {
    throw InvariantViolation("closed form left an imaginary residue");
  }
  return theta.real();
}

inline double bd_pole(const BdParams& p) {
  p.validate();
  auto u0 = [&](double psi) { return bd_eigenfunction(p, psi)[0]; };
  const int steps = 1000 * p.b;
  const double span = 2 * p.lambda;
  double prev = 0.0;
  double fprev = u0(prev);
  for (int k = 1; k <= steps; ++k) {
    const double psi = -span * k / steps;
    const double fk = u0(psi);
    if ((fk <= 0) != (fprev <= 0)) {
      return detail::bracket_solve(u0, psi, prev, fk, fprev, 1e-15 * span);
    }
    prev = psi;
    fprev = fk;
  }
  throw SolverError("no pole of the birth-death relation in [-2 lambda, 0]");
}

inline double bd_psi_of_theta(const BdParams& p, double theta, double tol = 1e-15) {
  p.validate();
  if (!std::isfinite(theta)) throw InvalidInput("theta must be finite");
  if (theta == 0.0) return 0.0;
  auto g = [&](double psi) { return bd_theta_of_psi(p, psi) - theta; };
  if (theta > 0) {
    double hi = std::max(theta, 1e-3);
    while (g(hi) < 0) {
      hi *= 4;
      if (hi > 1e300) throw PoleError("no bracket for theta=" + std::to_string(theta), hi);
    }
    return detail::bracket_solve(g, 0.0, hi, -theta, g(hi), tol);
  }
  const double pole = bd_pole(p);
  double gap = -pole;
  for (int k = 0; k < 200; ++k) {
    gap *= 0.5;
    const double lo = pole + gap;
    if (g(lo) < 0) return detail::bracket_solve(g, lo, 0.0, g(lo), -theta, tol);
  }
  std::ostringstream m;
  m << "theta=" << theta << " is outside the principal branch (pole at psi=" << pole << ")";
  throw PoleError(m.str(), pole);
}

}  // namespace rjd::oracle
