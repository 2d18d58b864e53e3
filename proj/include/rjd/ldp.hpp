#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rjd/errors.hpp"
#include "rjd/model.hpp"
#include "rjd/parallel.hpp"
#include "rjd/solver.hpp"

namespace rjd {

struct PsiCurve {
  std::vector<double> thetas;
  std::vector<double> psis;
  int N = 0;
  double tol = 0.0;

  /// Largest violation of discrete convexity (most negative scaled second
  /// difference), 0 when convex.
  double convexity_defect() const {
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < thetas.size(); ++k) {
      const double h0 = thetas[k] - thetas[k - 1];
      const double h1 = thetas[k + 1] - thetas[k];
      const double d2 = ((psis[k + 1] - psis[k]) / h1 - (psis[k] - psis[k - 1]) / h0) * 0.5 * (h0 + h1);
      worst = std::min(worst, d2);
    }
    return worst;
  }

  std::ptrdiff_t index_of_zero() const {
    auto it = std::find(thetas.begin(), thetas.end(), 0.0);
    return it == thetas.end() ? -1 : it - thetas.begin();
  }

  void validate(double convexity_tol = 1e-8, double zero_tol = 1e-9) const {
    if (thetas.size() != psis.size() || thetas.empty()) throw InvalidInput("psi curve needs matching nonempty grids");
    for (std::size_t k = 1; k < thetas.size(); ++k) {
      if (!(thetas[k] > thetas[k - 1])) throw InvalidInput("theta grid must be strictly increasing");
    }
    const auto z = index_of_zero();
    if (z < 0) throw InvalidInput("theta grid must contain 0");
    if (std::abs(psis[z]) > zero_tol) {
      throw InvariantViolation("psi at theta=0 is " + std::to_string(psis[z]) + ", not 0");
    }
    if (convexity_defect() < -convexity_tol) {
      std::ostringstream m;
      m << "psi curve is not convex: second difference " << convexity_defect();
      throw InvariantViolation(m.str());
    }
  }
};

inline PsiCurve psi_curve(const ReflectedModel& model, const WeightSpec& f, const std::vector<double>& thetas,
                          const Mesh& mesh, const EigenOptions& opt = {}, unsigned threads = 1) {
  PsiCurve c;
  c.thetas = thetas;
  c.psis.assign(thetas.size(), 0.0);
  c.N = mesh.N;
  c.tol = opt.tol;
  if (std::find(thetas.begin(), thetas.end(), 0.0) == thetas.end()) {
    throw InvalidInput("theta grid must contain 0");
  }
  parallel_for(thetas.size(), threads, [&](std::size_t i) {
    try {
      c.psis[i] = solve_psi(model, f, thetas[i], mesh, opt).psi_hat;
    } catch (const SolverError& e) {
      throw SolverError("theta=" + std::to_string(thetas[i]) + ": " + e.what(), e.eigenvalue());
    }
  });
  c.validate();
  return c;
}

struct RatePoint {
  double x = 0.0;
  double value = 0.0;
  double argmax_theta = 0.0;
  bool at_grid_edge = false;  // sup attained at a grid endpoint; extend the grid
};

using PsiEvaluator = std::function<double(double)>;

/// sup_theta [theta x - psi(theta)]: grid argmax, then ternary search over
/// the neighbouring cells. Off-grid psi comes from `evaluate` when given,
/// otherwise from the quadratic through the three nearest grid points.
inline RatePoint legendre_transform(const PsiCurve& curve, double x, const PsiEvaluator& evaluate = {}) {
  const auto& th = curve.thetas;
  const auto& ps = curve.psis;
  const std::size_t n = th.size();
  if (n == 0 || ps.size() != n) throw InvalidInput("legendre transform needs a nonempty curve");
  const auto zero = curve.index_of_zero();
  auto psi_at = [&](std::size_t k) { return static_cast<std::ptrdiff_t>(k) == zero ? 0.0 : ps[k]; };

  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (th[k] * x - psi_at(k) > th[best] * x - psi_at(best)) best = k;
  }
  RatePoint r{x, th[best] * x - psi_at(best), th[best], n > 1 && (best == 0 || best == n - 1)};
  if (n < 3) return r;

  const std::size_t c = std::clamp<std::size_t>(best, 1, n - 2);
  const double t0 = th[c - 1], t1 = th[c], t2 = th[c + 1];
  const double p0 = psi_at(c - 1), p1 = psi_at(c), p2 = psi_at(c + 1);
  auto quadratic = [=](double t) {
    return p0 * (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2)) + p1 * (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2)) +
           p2 * (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1));
  };
  auto objective = [&](double t) { return t * x - (evaluate ? evaluate(t) : quadratic(t)); };

  double lo = th[best == 0 ? 0 : best - 1];
  double hi = th[best == n - 1 ? n - 1 : best + 1];
  for (int it = 0; it < 30; ++it) {
    const double m1 = lo + (hi - lo) / 3;
    const double m2 = hi - (hi - lo) / 3;
    if (objective(m1) < objective(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  const double t = 0.5 * (lo + hi);
  const double v = objective(t);
  if (v > r.value) {
    r.value = v;
    r.argmax_theta = t;
  }
  return r;
}

inline std::vector<RatePoint> rate_function(const PsiCurve& curve, const std::vector<double>& xs,
                                            const PsiEvaluator& evaluate = {}) {
  std::vector<RatePoint> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(legendre_transform(curve, x, evaluate));
  return out;
}

struct MeanVariance {
  double psi_prime0 = 0.0;
  double psi_second0 = 0.0;
  double psi_minus = 0.0, psi_zero = 0.0, psi_plus = 0.0;
};

inline MeanVariance mean_variance_from(double psi_minus, double psi_zero, double psi_plus, double dtheta) {
  return {(psi_plus - psi_minus) / (2 * dtheta), (psi_plus - 2 * psi_zero + psi_minus) / (dtheta * dtheta),
          psi_minus, psi_zero, psi_plus};
}

inline MeanVariance mean_variance_at_zero(const ReflectedModel& model, const WeightSpec& f, const Mesh& mesh,
                                          double dtheta = 0.01, const EigenOptions& opt = {}) {
  if (!(dtheta > 0)) throw InvalidInput("dtheta must be positive");
  const double pm = solve_psi(model, f, -dtheta, mesh, opt).psi_hat;
  const double p0 = solve_psi(model, f, 0.0, mesh, opt).psi_hat;
  const double pp = solve_psi(model, f, dtheta, mesh, opt).psi_hat;
  return mean_variance_from(pm, p0, pp, dtheta);
}

}  // namespace rjd
