#pragma once

// Monte Carlo paths of a reflected jump-diffusion and the additive functional
//
//   Lambda(t) = int_0^t f(V) ds + f(0) L0c(t) + f(b) Lbc(t).
//
// Diffusion steps are Euler with a Brownian-bridge extremum: the step's
// increment is split at a sampled minimum (or maximum, near b) so that the
// local time picks up excursions that an endpoint-only clamp misses. Jumps
// come from thinning a Poisson clock at a constant rate bound and are applied
// at their own event times.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rjd/errors.hpp"
#include "rjd/model.hpp"
#include "rjd/parallel.hpp"
#include "rjd/skorokhod.hpp"
#include "rjd/solver.hpp"

namespace rjd {

struct SimConfig {
  double dt = 1e-3;
  double T = 1.0;
  int paths = 1;
  std::uint64_t seed = 1;
  std::optional<double> intensity_bound;
  std::optional<double> x0;  // defaults to default_start(model)
  bool bridge = true;
  int scan_points = 10010;
  unsigned threads = 0;

  void validate() const {
    if (!(dt > 0 && std::isfinite(dt))) throw InvalidInput("sim dt must be positive");
    if (!(T >= dt)) throw InvalidInput("sim T must be >= dt");
    if (paths < 1) throw InvalidInput("sim paths must be >= 1");
    if (intensity_bound && !(*intensity_bound >= 0)) throw InvalidInput("intensity bound must be >= 0");
    if (scan_points < 2) throw InvalidInput("scan_points must be >= 2");
  }
};

struct PathEnd {
  double V = 0, L0 = 0, Lb = 0, L0_jump = 0, Lb_jump = 0, Lambda = 0;
};

struct ReflectedPathRecord {
  std::vector<double> times, V, L0, Lb, L0_jump, Lb_jump, Lambda;

  void push(double t, const PathEnd& s) {
    times.push_back(t);
    V.push_back(s.V);
    L0.push_back(s.L0);
    Lb.push_back(s.Lb);
    L0_jump.push_back(s.L0_jump);
    Lb_jump.push_back(s.Lb_jump);
    Lambda.push_back(s.Lambda);
  }
  PathEnd back() const {
    return {V.back(), L0.back(), Lb.back(), L0_jump.back(), Lb_jump.back(), Lambda.back()};
  }
};

/// Per-path generator seeded from (seed, path index) only.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

/// b/2, moved down onto the jump lattice for pure-jump models.
inline double default_start(const ReflectedModel& model) {
  const double mid = model.b / 2;
  if (model.has_continuous_reflection) return mid;
  const auto step = model.kernel.smallest_atom_displacement();
  return step ? std::floor(mid / *step + 1e-9) * *step : mid;
}

/// sup_x nu_x(M) on a uniform scan, with a 10% margin.
inline double scan_intensity_bound(const ReflectedModel& model, int points) {
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = model.b * i / (points - 1);
    const double r = model.kernel.total_rate(x);
    if (!std::isfinite(r) || r < 0) throw SimulationError(model.name + ": invalid jump intensity at x=" + std::to_string(x));
    best = std::max(best, r);
  }
  return 1.1 * best;
}

class PathSimulator {
 public:
  PathSimulator(const ReflectedModel& model, const WeightSpec& f, const SimConfig& cfg)
      : model_(model), f_(f), cfg_(cfg) {
    cfg_.validate();
    model_.validate(101);
    bound_ = cfg_.intensity_bound ? *cfg_.intensity_bound : scan_intensity_bound(model_, cfg_.scan_points);
    x0_ = cfg_.x0 ? *cfg_.x0 : default_start(model_);
    if (x0_ < 0 || x0_ > model_.b) throw InvalidInput("initial state must lie in [0, b]");
    steps_ = static_cast<long>(std::ceil(cfg_.T / cfg_.dt - 1e-9));
  }

  double intensity_bound() const { return bound_; }
  double x0() const { return x0_; }

  /// One path; `record` receives samples at every step end, jump and
  /// boundary touch when non-null.
  PathEnd run(std::uint64_t index, ReflectedPathRecord* record = nullptr) const {
    auto rng = path_rng(cfg_.seed, index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PathEnd s;
    s.V = x0_;
    double t = 0.0;
    if (record) record->push(0.0, s);

    auto next_clock = [&](double from) {
      if (bound_ <= 0) return std::numeric_limits<double>::infinity();
      return from - std::log1p(-unif(rng)) / bound_;
    };
    double next_jump = next_clock(0.0);

    for (long k = 1; k <= steps_; ++k) {
      const double t_end = k == steps_ ? cfg_.T : std::min(cfg_.T, k * cfg_.dt);
      while (next_jump <= t_end) {
        advance_continuous(s, t, next_jump, rng, normal, unif, record);
        t = next_jump;
        attempt_jump(s, rng, unif);
        if (record) record->push(t, s);
        next_jump = next_clock(t);
      }
      advance_continuous(s, t, t_end, rng, normal, unif, record);
      t = t_end;
      if (record) record->push(t, s);
    }
    return s;
  }

 private:
  void check_finite(double v, const char* what, double x) const {
    if (!std::isfinite(v)) {
      throw SimulationError(model_.name + ": non-finite " + what + " at x=" + std::to_string(x));
    }
  }

  template <class Rng>
  void advance_continuous(PathEnd& s, double t0, double t1, Rng& rng, std::normal_distribution<double>& normal,
                          std::uniform_real_distribution<double>& unif, ReflectedPathRecord* record) const {
    const double dt = t1 - t0;
    if (dt <= 0) return;
    const double b = model_.b;
    s.Lambda += f_.at(s.V, b) * dt;

    const double m = model_.mu(s.V);
    const double s2 = model_.sigma2(s.V);
    check_finite(m, "drift", s.V);
    check_finite(s2, "diffusion", s.V);
    if (m == 0.0 && s2 == 0.0) return;
    const double var = std::max(s2, 0.0) * dt;
    const double delta = m * dt + std::sqrt(var) * normal(rng);

    ReflectionState st{s.V, s.L0, s.Lb};
    if (cfg_.bridge && var > 0) {
      const double logu = std::log(1.0 - unif(rng));
      const double root = std::sqrt(delta * delta - 2 * var * logu);
      // Split at the bridge minimum near 0, at the maximum near b.
      const double split = s.V <= b / 2 ? (delta - root) / 2 : (delta + root) / 2;
      st = incremental_reflect(st, split, b);
      if (record && (st.l0 > s.L0 || st.lb > s.Lb)) {
        PathEnd touch = s;
        touch.V = st.v;
        touch.L0 = st.l0;
        touch.Lb = st.lb;
        touch.Lambda += f_.f0 * (st.l0 - s.L0) + f_.fb * (st.lb - s.Lb);
        record->push(t0 + dt / 2, touch);
      }
      st = incremental_reflect(st, delta - split, b);
    } else {
      st = incremental_reflect(st, delta, b);
    }
    s.Lambda += f_.f0 * (st.l0 - s.L0) + f_.fb * (st.lb - s.Lb);
    s.V = st.v;
    s.L0 = st.l0;
    s.Lb = st.lb;
  }

  template <class Rng>
  void attempt_jump(PathEnd& s, Rng& rng, std::uniform_real_distribution<double>& unif) const {
    const double x = s.V;
    const double total = model_.kernel.total_rate(x);
    check_finite(total, "jump intensity", x);
    if (total > bound_ * (1 + 1e-12)) {
      throw SimulationError(model_.name + ": jump intensity " + std::to_string(total) +
                            " exceeds the thinning bound " + std::to_string(bound_));
    }
    if (total <= 0 || unif(rng) * bound_ >= total) return;

    double pick = unif(rng) * total;
    double y = 0.0;
    bool chosen = false;
    for (const auto& a : model_.kernel.atoms()) {
      const double r = a.rate(x);
      if (pick < r) {
        y = a.displacement;
        chosen = true;
        break;
      }
      pick -= r;
    }
    if (!chosen) {
      for (const auto& c : model_.kernel.continuous()) {
        double mass = 0.0;
        for (int k = 0; k <= c.subdivisions; ++k) mass += c.density(x, c.node(k)) * c.weight(k);
        if (pick >= mass && &c != &model_.kernel.continuous().back()) {
          pick -= mass;
          continue;
        }
        y = sample_component(c, x, unif(rng));
        chosen = true;
        break;
      }
    }
    if (!chosen) return;

    ReflectionState st{s.V, s.L0_jump, s.Lb_jump};
    st = incremental_reflect(st, y, model_.b);
    s.V = st.v;
    s.L0_jump = st.l0;
    s.Lb_jump = st.lb;
  }

  // Draw from the piecewise-linear interpolant of the density through the
  // trapezoid nodes, whose mass is the trapezoid sum.
  static double sample_component(const ContinuousJumpComponent& c, double x, double u) {
    const int n = c.subdivisions;
    std::vector<double> d(n + 1);
    for (int k = 0; k <= n; ++k) d[k] = c.density(x, c.node(k));
    const double h = c.step();
    double total = 0.0;
    for (int k = 0; k < n; ++k) total += 0.5 * (d[k] + d[k + 1]) * h;
    double target = u * total;
    int k = 0;
    for (; k < n - 1; ++k) {
      const double panel = 0.5 * (d[k] + d[k + 1]) * h;
      if (target < panel) break;
      target -= panel;
    }
    const double a = d[k], e = d[k + 1];
    const double q = target / h;  // solve a s + (e - a) s^2 / 2 = q on [0, 1]
    double sfrac;
    if (std::abs(e - a) < 1e-14 * std::max(a, e)) {
      sfrac = a > 0 ? q / a : 0.5;
    } else {
      const double disc = std::max(a * a + 2 * (e - a) * q, 0.0);
      sfrac = (std::sqrt(disc) - a) / (e - a);
    }
    return c.node(k) + std::clamp(sfrac, 0.0, 1.0) * h;
  }

  const ReflectedModel& model_;
  const WeightSpec& f_;
  SimConfig cfg_;
  double bound_ = 0.0;
  double x0_ = 0.0;
  long steps_ = 0;
};

inline ReflectedPathRecord simulate(const ReflectedModel& model, const WeightSpec& f, const SimConfig& cfg,
                                    std::uint64_t path_index = 0) {
  PathSimulator sim(model, f, cfg);
  ReflectedPathRecord rec;
  sim.run(path_index, &rec);
  return rec;
}

/// Terminal states of cfg.paths independent paths, in path-index order.
inline std::vector<PathEnd> run_paths(const ReflectedModel& model, const WeightSpec& f, const SimConfig& cfg) {
  PathSimulator sim(model, f, cfg);
  std::vector<PathEnd> ends(static_cast<std::size_t>(cfg.paths));
  parallel_for(ends.size(), cfg.threads, [&](std::size_t i) { ends[i] = sim.run(i); });
  return ends;
}

struct McEstimate {
  double theta = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  int paths = 0;
  double T = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {
// mean of exp(w) as (log mean, relative standard error of the mean).
inline std::pair<double, double> log_mean_exp(const std::vector<double>& w) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : w) m = std::max(m, v);
  if (!std::isfinite(m)) throw SimulationError("exponential weights are not finite");
  double sum = 0.0, sum2 = 0.0;
  for (double v : w) {
    const double e = std::exp(v - m);
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(w.size());
  const double mean = sum / n;
  const double var = n > 1 ? std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1) : 0.0;
  return {m + std::log(mean), std::sqrt(var / n) / mean};
}
}  // namespace detail

inline McEstimate mc_log_mgf(const ReflectedModel& model, const WeightSpec& f, double theta, const SimConfig& cfg) {
  if (cfg.paths < 2) throw InvalidInput("mc_log_mgf needs at least 2 paths");
  const auto ends = run_paths(model, f, cfg);
  std::vector<double> w(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) w[i] = theta * ends[i].Lambda;
  const auto [log_mean, rel_se] = detail::log_mean_exp(w);
  McEstimate e{theta, log_mean / cfg.T, rel_se / cfg.T, cfg.paths, cfg.T, cfg.dt, cfg.seed};
  if (!std::isfinite(e.estimate)) throw SimulationError("log-MGF estimate is not finite");
  return e;
}

/// Linear interpolation of a mesh function given on all N+2 nodes of [0, b].
inline double interpolate_on_mesh(const Eigen::VectorXd& u, double b, double x) {
  const int nodes = static_cast<int>(u.size());
  if (nodes < 2) throw InvalidInput("mesh function needs at least two nodes");
  const double h = b / (nodes - 1);
  const double p = std::clamp(x, 0.0, b) / h;
  const int i = std::min(static_cast<int>(p), nodes - 2);
  const double w = p - i;
  return (1 - w) * u(i) + w * u(i + 1);
}

struct MartingaleCheck {
  double residual = 0.0;  // |E[M(T)] - u(V0)| / u(V0)
  double stderr_ = 0.0;   // standard error of E[M(T)] / u(V0)
  double mean = 0.0;
  double u0 = 0.0;
};

inline MartingaleCheck martingale_residual(const ReflectedModel& model, const WeightSpec& f,
                                           const SpectralResult& spectral, const SimConfig& cfg) {
  if (cfg.paths < 2) throw InvalidInput("martingale_residual needs at least 2 paths");
  if (!(spectral.u.size() >= 2 && spectral.u.minCoeff() > 0)) {
    throw InvalidInput("eigenfunction must be strictly positive");
  }
  const double x0 = cfg.x0 ? *cfg.x0 : default_start(model);
  const auto ends = run_paths(model, f, cfg);
  std::vector<double> w(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) {
    w[i] = spectral.theta * ends[i].Lambda - spectral.psi_hat * cfg.T +
           std::log(interpolate_on_mesh(spectral.u, model.b, ends[i].V));
  }
  const auto [log_mean, rel_se] = detail::log_mean_exp(w);
  MartingaleCheck c;
  c.u0 = interpolate_on_mesh(spectral.u, model.b, x0);
  c.mean = std::exp(log_mean);
  c.residual = std::abs(c.mean - c.u0) / c.u0;
  c.stderr_ = rel_se * c.mean / c.u0;
  return c;
}

}  // namespace rjd
