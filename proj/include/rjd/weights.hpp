#pragma once

// Piecewise-linear ("continuised") versions of indicator weights whose ramps
// are one mesh cell wide, so they stay resolvable on the mesh of size N.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rjd/errors.hpp"
#include "rjd/model.hpp"

namespace rjd {

inline double mesh_cell_width(int N, double b = 1.0) {
  if (N < 1) throw InvalidInput("mesh resolution N must be >= 1");
  return b / (N + 1);
}

/// Hats of height 1 at each center, radius b/(N+1).
inline ScalarField continuised_point_indicator(std::vector<double> centers, int N, double b = 1.0) {
  const double w = mesh_cell_width(N, b);
  std::sort(centers.begin(), centers.end());
  if (centers.empty()) throw InvalidInput("point indicator needs at least one center");
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double c = centers[k];
    if (!(c - w > 0.0 && c + w < b)) {
      throw InvalidInput("hat at " + std::to_string(c) + " touches the boundary for N=" + std::to_string(N));
    }
    if (k > 0 && !(c - centers[k - 1] > 2 * w)) {
      throw InvalidInput("hats at " + std::to_string(centers[k - 1]) + " and " + std::to_string(c) +
                         " overlap for N=" + std::to_string(N));
    }
  }
  std::ostringstream name;
  name << "hats{";
  for (std::size_t k = 0; k < centers.size(); ++k) name << (k ? "," : "") << centers[k];
  name << "} N=" << N;
  return ScalarField(
      [centers, w](double x) {
        double v = 0.0;
        for (double c : centers) v = std::max(v, 1.0 - std::abs(x - c) / w);
        return v;
      },
      name.str());
}

inline WeightSpec continuised_point_weight(std::vector<double> centers, int N, double b = 1.0) {
  return WeightSpec::from_field(continuised_point_indicator(std::move(centers), N, b), b);
}

/// 1 within one cell of either endpoint, 0 beyond two cells, linear between.
inline WeightSpec continuised_boundary_indicator(int N, double b = 1.0) {
  if (N < 4) throw InvalidInput("boundary indicator needs N >= 4");
  const double w = mesh_cell_width(N, b);
  ScalarField f(
      [w, b](double x) {
        const double lo = 2.0 - x / w;
        const double hi = 2.0 + (x - b) / w;
        return std::clamp(std::max(lo, hi), 0.0, 1.0);
      },
      "boundary hats N=" + std::to_string(N));
  return WeightSpec{std::move(f), 1.0, 1.0};
}

/// Ramp from 1 at 0 down to 0 at one cell; approximates the indicator of {0}.
inline WeightSpec continuised_endpoint_indicator(int N, double b = 1.0) {
  const double w = mesh_cell_width(N, b);
  ScalarField f([w](double x) { return x < w ? 1.0 - x / w : 0.0; },
                "endpoint hat N=" + std::to_string(N));
  return WeightSpec{std::move(f), 1.0, 0.0};
}

/// 1 on [0, upper - width), falling linearly to 0 at upper.
inline WeightSpec continuised_prefix_indicator(double upper, double width, double b) {
  if (!(width > 0 && upper > width && upper <= b)) {
    throw InvalidInput("prefix indicator needs 0 < width < upper <= b");
  }
  ScalarField f(
      [upper, width](double x) {
        if (x < upper - width) return 1.0;
        if (x < upper) return (upper - x) / width;
        return 0.0;
      },
      "prefix indicator [0," + std::to_string(upper) + ")");
  return WeightSpec::from_field(std::move(f), b);
}

inline WeightSpec constant_weight(double c) {
  return WeightSpec{ScalarField(c), c, c};
}

}  // namespace rjd
