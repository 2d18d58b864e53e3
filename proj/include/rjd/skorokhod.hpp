#pragma once

// Two-sided Skorokhod map on [0, b] for sampled paths, in three forms: the
// streaming clamp, the explicit inf/sup formula, and the coupled running-sup
// formulas for (L0, Lb).

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rjd/errors.hpp"

namespace rjd {

struct SampledPath {
  std::vector<double> times;
  std::vector<double> values;

  void validate() const {
    if (times.size() != values.size()) throw InvalidInput("path times and values differ in length");
    if (times.empty()) throw InvalidInput("path is empty");
    if (times.front() != 0.0) throw InvalidInput("path must start at time 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) throw InvalidInput("path times must be strictly increasing");
    }
  }
};

struct ReflectionState {
  double v = 0.0;
  double l0 = 0.0;
  double lb = 0.0;
};

inline ReflectionState incremental_reflect(ReflectionState s, double dx, double b) {
  const double y = s.v + dx;
  if (y < 0) {
    s.l0 += -y;
    s.v = 0.0;
  } else if (y > b) {
    s.lb += y - b;
    s.v = b;
  } else {
    s.v = y;
  }
  return s;
}

struct ReflectedSamples {
  std::vector<double> V, L0, Lb;
};

namespace detail {
inline void check_start(const SampledPath& X, double b) {
  X.validate();
  if (!(b > 0)) throw InvalidInput("reflection needs b > 0");
  if (X.values.front() < 0 || X.values.front() > b) throw InvalidInput("path must start inside [0, b]");
}
}  // namespace detail

inline ReflectedSamples reflect_incrementally(const SampledPath& X, double b) {
  detail::check_start(X, b);
  const std::size_t n = X.values.size();
  ReflectedSamples out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  ReflectionState s{X.values[0], 0.0, 0.0};
  out.V[0] = s.v;
  for (std::size_t k = 1; k < n; ++k) {
    s = incremental_reflect(s, X.values[k] - X.values[k - 1], b);
    out.V[k] = s.v;
    out.L0[k] = s.l0;
    out.Lb[k] = s.lb;
  }
  return out;
}

/// V from the explicit formula
///   V(t) = X(t) - max( min((X(0)-b)^+, inf_{u<=t} X(u)),
///                      sup_{s<=t} min(X(s)-b, inf_{s<=u<=t} X(u)) ),
/// evaluated directly at every sample (quadratic cost). L0 and Lb are the
/// positive and negative parts of the increments of V - X.
inline ReflectedSamples two_sided_skorokhod_map(const SampledPath& X, double b) {
  detail::check_start(X, b);
  const auto& x = X.values;
  const std::size_t n = x.size();
  ReflectedSamples out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  const double start_excess = std::max(x[0] - b, 0.0);
  double running_inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    running_inf = std::min(running_inf, x[k]);
    double sup_term = -std::numeric_limits<double>::infinity();
    double inf_tail = std::numeric_limits<double>::infinity();
    for (std::size_t s = k + 1; s-- > 0;) {
      inf_tail = std::min(inf_tail, x[s]);
      sup_term = std::max(sup_term, std::min(x[s] - b, inf_tail));
    }
    const double bracket = std::max(std::min(start_excess, running_inf), sup_term);
    out.V[k] = x[k] - bracket;
  }
  double l0 = 0.0, lb = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double d = (out.V[k] - x[k]) - (out.V[k - 1] - x[k - 1]);
    if (d > 0) l0 += d;
    if (d < 0) lb -= d;
    out.L0[k] = l0;
    out.Lb[k] = lb;
  }
  return out;
}

/// (L0, Lb) from L0(t) = sup_{s<=t} (Lb(s) - X(s))^+ and
/// Lb(t) = sup_{s<=t} (X(s) + L0(s) - b)^+, solved sample by sample.
inline ReflectedSamples skorokhod_by_sup_formulas(const SampledPath& X, double b) {
  detail::check_start(X, b);
  const auto& x = X.values;
  const std::size_t n = x.size();
  ReflectedSamples out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  double l0 = 0.0, lb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    // The coupled pair settles in at most a few sweeps; one boundary moves per sample.
    for (int sweep = 0; sweep < 4; ++sweep) {
      const double n0 = std::max(l0, std::max(lb - x[k], 0.0));
      const double nb = std::max(lb, std::max(x[k] + n0 - b, 0.0));
      if (n0 == l0 && nb == lb) break;
      l0 = n0;
      lb = nb;
    }
    out.L0[k] = l0;
    out.Lb[k] = lb;
    out.V[k] = x[k] + l0 - lb;
  }
  return out;
}

}  // namespace rjd
