#pragma once

// Reflected jump-diffusions on [0, b]:
//
//   dV = mu(V) dt + sigma(V) dB + (jumps from nu_V) + rho0 dL0 - rhob dLb
//
// The solver and the simulator consume the same ReflectedModel value.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rjd/errors.hpp"

namespace rjd {

/// A real function on the state interval, carried with a display name.
class ScalarField {
 public:
  using Function = std::function<double(double)>;

  ScalarField() : ScalarField(0.0) {}

  explicit ScalarField(double value, std::string name = {})
      : fn_([value](double) { return value; }),
        name_(name.empty() ? "constant " + std::to_string(value) : std::move(name)),
        constant_(value) {}

  ScalarField(Function fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

  double operator()(double x) const { return fn_(x); }

  const std::string& name() const noexcept { return name_; }

  /// Set only for fields built from a constant.
  std::optional<double> constant_value() const noexcept { return constant_; }

  bool is_identically_zero() const noexcept { return constant_ && *constant_ == 0.0; }

 private:
  Function fn_;
  std::string name_;
  std::optional<double> constant_;
};

/// Fixed displacement with a state-dependent rate (events per unit time).
struct JumpAtom {
  double displacement = 0.0;
  ScalarField rate;
};

/// Jump displacements spread over [lo, hi] with intensity density(x, y),
/// integrated by the composite trapezoid rule on `subdivisions` panels.
struct ContinuousJumpComponent {
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double x, double y)> density;
  int subdivisions = 1;
  std::string name;

  double step() const { return (hi - lo) / subdivisions; }
  double node(int k) const { return k == subdivisions ? hi : lo + k * step(); }
  double weight(int k) const {
    return (k == 0 || k == subdivisions) ? 0.5 * step() : step();
  }
};

/// The jump measure nu_x: a finite list of atoms plus continuous components.
class JumpKernel {
 public:
  JumpKernel() = default;

  JumpKernel(std::vector<JumpAtom> atoms, std::vector<ContinuousJumpComponent> continuous)
      : atoms_(std::move(atoms)), continuous_(std::move(continuous)) {
    for (const auto& a : atoms_) {
      if (!std::isfinite(a.displacement)) throw InvalidInput("jump atom displacement must be finite");
    }
    for (const auto& c : continuous_) {
      if (!(std::isfinite(c.lo) && std::isfinite(c.hi) && c.lo < c.hi)) {
        throw InvalidInput("continuous jump component needs a finite interval lo < hi");
      }
      if (c.subdivisions < 1) throw InvalidInput("continuous jump component needs >= 1 subdivision");
      if (!c.density) throw InvalidInput("continuous jump component has no density");
    }
  }

  bool empty() const noexcept { return atoms_.empty() && continuous_.empty(); }
  const std::vector<JumpAtom>& atoms() const noexcept { return atoms_; }
  const std::vector<ContinuousJumpComponent>& continuous() const noexcept { return continuous_; }

  /// Visits every discrete jump the discretized measure places at x:
  /// fn(displacement, rate). Continuous components contribute their
  /// trapezoid nodes with rate density * weight.
  template <class Fn>
  void for_each_jump(double x, Fn&& fn) const {
    for (const auto& a : atoms_) fn(a.displacement, a.rate(x));
    for (const auto& c : continuous_) {
      for (int k = 0; k <= c.subdivisions; ++k) {
        const double y = c.node(k);
        fn(y, c.density(x, y) * c.weight(k));
      }
    }
  }

  /// nu_x(M) under the same quadrature the solver uses.
  double total_rate(double x) const {
    double total = 0.0;
    for_each_jump(x, [&](double, double rate) { total += rate; });
    return total;
  }

  /// Smallest nonzero |displacement| among the atoms, or nullopt.
  std::optional<double> smallest_atom_displacement() const {
    std::optional<double> best;
    for (const auto& a : atoms_) {
      const double d = std::abs(a.displacement);
      if (d > 0 && (!best || d < *best)) best = d;
    }
    return best;
  }

 private:
  std::vector<JumpAtom> atoms_;
  std::vector<ContinuousJumpComponent> continuous_;
};

struct ReflectedModel {
  std::string name;
  double b = 1.0;
  ScalarField mu;
  ScalarField sigma2;
  JumpKernel kernel;
  double rho0 = 1.0;
  double rhob = 1.0;
  // False iff sigma2 == 0 identically; then the boundary carries no
  // constraint and boundary nodes are ordinary states of the generator.
  bool has_continuous_reflection = true;

  /// Checks finiteness and sign constraints on a uniform scan of [0, b].
  void validate(int scan_points = 1001) const {
    if (!(std::isfinite(b) && b > 0)) throw InvalidInput("model domain bound b must be positive");
    if (!(rho0 > 0 && rhob > 0)) throw InvalidInput("reflection magnitudes must be positive");
    if (scan_points < 2) scan_points = 2;
    for (int i = 0; i < scan_points; ++i) {
      const double x = b * i / (scan_points - 1);
      const double m = mu(x);
      const double s = sigma2(x);
      if (!std::isfinite(m) || !std::isfinite(s)) {
        throw InvalidInput(name + ": non-finite drift or diffusion at x=" + std::to_string(x));
      }
      if (s < 0) throw InvalidInput(name + ": negative diffusion coefficient at x=" + std::to_string(x));
      for (const auto& a : kernel.atoms()) {
        const double r = a.rate(x);
        if (!(std::isfinite(r) && r >= 0)) {
          throw InvalidInput(name + ": jump rate must be finite and >= 0 at x=" + std::to_string(x));
        }
      }
      for (const auto& c : kernel.continuous()) {
        for (int k = 0; k <= c.subdivisions; ++k) {
          const double d = c.density(x, c.node(k));
          if (!(std::isfinite(d) && d >= 0)) {
            throw InvalidInput(name + ": jump density must be finite and >= 0");
          }
        }
      }
    }
    if (!has_continuous_reflection) {
      if (!sigma2.is_identically_zero()) {
        for (int i = 0; i < scan_points; ++i) {
          if (sigma2(b * i / (scan_points - 1)) != 0.0) {
            throw InvalidInput(name + ": pure-jump model must have zero diffusion");
          }
        }
      }
    }
  }
};

/// Weight f of the additive functional, with its boundary values pinned.
struct WeightSpec {
  ScalarField f;
  double f0 = 0.0;
  double fb = 0.0;

  static WeightSpec from_field(ScalarField field, double b) {
    const double lo = field(0.0);
    const double hi = field(b);
    return WeightSpec{std::move(field), lo, hi};
  }

  /// f at a mesh node, using the pinned values at the endpoints.
  double at(double x, double b) const {
    if (x <= 0.0) return f0;
    if (x >= b) return fb;
    return f(x);
  }
};

}  // namespace rjd
