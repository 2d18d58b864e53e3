#pragma once

#include <cmath>
#include <string>

#include "rjd/errors.hpp"
#include "rjd/model.hpp"

namespace rjd {

/// Reflected Brownian motion with constant drift and diffusion on [0, b].
inline ReflectedModel rbm_model(double mu, double sigma2, double b, double rho0 = 1.0, double rhob = 1.0) {
  if (!(sigma2 > 0)) throw InvalidInput("reflected BM needs sigma2 > 0");
  ReflectedModel m;
  m.name = "rbm";
  m.b = b;
  m.mu = ScalarField(mu);
  m.sigma2 = ScalarField(sigma2);
  m.rho0 = rho0;
  m.rhob = rhob;
  m.has_continuous_reflection = true;
  m.validate(3);
  return m;
}

/// Symmetric birth-death chain on {0, ..., b}; jumps out of range are
/// clamped, which at the ends acts as a self-loop.
inline ReflectedModel birth_death_model(double lambda, int b) {
  if (!(lambda > 0)) throw InvalidInput("birth-death needs lambda > 0");
  if (b < 2) throw InvalidInput("birth-death needs b >= 2");
  ReflectedModel m;
  m.name = "birth-death";
  m.b = b;
  m.mu = ScalarField(0.0);
  m.sigma2 = ScalarField(0.0);
  m.kernel = JumpKernel({JumpAtom{+1.0, ScalarField(lambda / 2, "lambda/2")},
                         JumpAtom{-1.0, ScalarField(lambda / 2, "lambda/2")}},
                        {});
  m.has_continuous_reflection = false;
  return m;
}

struct CrnRates {
  double k10m = 1.0;
  double k01p = 1.0;
  double k11m = 16.0 / 3.0;
  double k21p = 32.0 / 3.0;

  double r_minus(double x) const { return k10m * x + k11m * x * (1 - x); }
  double r_plus(double x) const { return k01p * (1 - x) + k21p * x * x * (1 - x); }
  double drift(double x) const { return r_plus(x) - r_minus(x); }
};

inline ScalarField crn_drift(double k10m, double k01p, double k11m, double k21p) {
  const CrnRates k{k10m, k01p, k11m, k21p};
  return ScalarField([k](double x) { return k.drift(x); }, "crn drift");
}

inline ScalarField crn_drift(const CrnRates& k) { return crn_drift(k.k10m, k.k01p, k.k11m, k.k21p); }

inline double division_rate(double gamma_n, double x) { return 0.5 * gamma_n * x * (1 - x); }

namespace detail {
inline void check_scale(double n) {
  if (!(n >= 1)) throw InvalidInput("crn scale n must be >= 1");
}
}  // namespace detail

/// Constrained Langevin approximation; the 1/sqrt(n) reflection factor is
/// carried in rho0/rhob.
inline ReflectedModel crn_langevin(double n, const CrnRates& k = {}) {
  detail::check_scale(n);
  ReflectedModel m;
  m.name = "crn-langevin";
  m.b = 1.0;
  m.mu = crn_drift(k);
  m.sigma2 = ScalarField([k, n](double x) { return (k.r_plus(x) + k.r_minus(x) + x * (1 - x)) / n; },
                         "crn langevin sigma2");
  m.rho0 = m.rhob = 1.0 / std::sqrt(n);
  m.has_continuous_reflection = true;
  return m;
}

/// Reactions diffuse, division errors stay as +-1/n jumps.
inline ReflectedModel crn_jump_diffusion(double n, double gamma_n, const CrnRates& k = {}) {
  detail::check_scale(n);
  if (!(gamma_n >= 0)) throw InvalidInput("division rate scale must be >= 0");
  ReflectedModel m;
  m.name = "crn-jump-diffusion";
  m.b = 1.0;
  m.mu = crn_drift(k);
  m.sigma2 = ScalarField([k, n](double x) { return (k.r_plus(x) + k.r_minus(x)) / n; },
                         "crn reaction sigma2");
  ScalarField xi([gamma_n](double x) { return division_rate(gamma_n, x); }, "division rate");
  m.kernel = JumpKernel({JumpAtom{+1.0 / n, xi}, JumpAtom{-1.0 / n, xi}}, {});
  m.rho0 = m.rhob = 1.0 / std::sqrt(n);
  m.has_continuous_reflection = true;
  return m;
}

/// The density-scaled jump Markov chain on {0, 1/n, ..., 1}.
inline ReflectedModel crn_jump_markov(double n, double gamma_n, const CrnRates& k = {}) {
  detail::check_scale(n);
  if (!(gamma_n >= 0)) throw InvalidInput("division rate scale must be >= 0");
  ReflectedModel m;
  m.name = "crn-jump-markov";
  m.b = 1.0;
  m.mu = ScalarField(0.0);
  m.sigma2 = ScalarField(0.0);
  ScalarField up([k, n, gamma_n](double x) { return division_rate(gamma_n, x) + n * k.r_plus(x); },
                 "up rate");
  ScalarField down([k, n, gamma_n](double x) { return division_rate(gamma_n, x) + n * k.r_minus(x); },
                   "down rate");
  m.kernel = JumpKernel({JumpAtom{+1.0 / n, up}, JumpAtom{-1.0 / n, down}}, {});
  m.has_continuous_reflection = false;
  return m;
}

}  // namespace rjd
