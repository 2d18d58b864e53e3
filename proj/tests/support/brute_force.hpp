#pragma once

// Slow, self-contained reference computations for the test suites. Nothing
// here calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bf {

using Matrix = std::vector<std::vector<long double>>;

inline Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) m[i].assign(rows[i].begin(), rows[i].end());
  return m;
}

/// Coefficients c[0..n] of det(lambda I - A) = sum c[k] lambda^(n-k), c[0] = 1
/// (Faddeev-LeVerrier).
inline std::vector<long double> charpoly(const Matrix& A) {
  const std::size_t n = A.size();
  std::vector<long double> c(n + 1, 0.0L);
  c[0] = 1.0L;
  Matrix M(n, std::vector<long double>(n, 0.0L));
  auto times_a = [&](const Matrix& X) {
    Matrix Y(n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < n; ++l) Y[i][j] += A[i][l] * X[l][j];
      }
    }
    return Y;
  };
  // M_k = A M_{k-1} + c_{k-1} I, c_k = -tr(A M_k) / k
  for (std::size_t k = 1; k <= n; ++k) {
    M = times_a(M);
    for (std::size_t i = 0; i < n; ++i) M[i][i] += c[k - 1];
    const Matrix AM = times_a(M);
    long double tr = 0.0L;
    for (std::size_t i = 0; i < n; ++i) tr += AM[i][i];
    c[k] = -tr / static_cast<long double>(k);
  }
  return c;
}

inline long double poly_eval(const std::vector<long double>& c, long double x) {
  long double v = 0.0L;
  for (long double a : c) v = v * x + a;
  return v;
}

/// Largest real root: scan downward from the Cauchy bound, then bisect.
inline double largest_real_root(const std::vector<long double>& c, int scan = 200000) {
  long double R = 0.0L;
  for (std::size_t k = 1; k < c.size(); ++k) R = std::max(R, std::fabs(c[k] / c[0]));
  R += 1.0L;
  long double hi = R;
  long double fhi = poly_eval(c, hi);
  const long double step = 2 * R / scan;
  for (int i = 1; i <= scan; ++i) {
    const long double lo = R - step * i;
    const long double flo = poly_eval(c, lo);
    if (flo == 0.0L) return static_cast<double>(lo);
    if ((flo < 0) != (fhi < 0)) {
      long double a = lo, b = hi, fa = flo;
      for (int it = 0; it < 200; ++it) {
        const long double m = 0.5L * (a + b);
        const long double fm = poly_eval(c, m);
        if ((fm < 0) == (fa < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      return static_cast<double>(0.5L * (a + b));
    }
    hi = lo;
    fhi = flo;
  }
  throw std::runtime_error("no real root found");
}

/// Solves A x = r by Gaussian elimination with partial pivoting.
inline std::vector<long double> solve(Matrix A, std::vector<long double> r) {
  const std::size_t n = A.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::fabs(A[i][k]) > std::fabs(A[p][k])) p = i;
    }
    std::swap(A[k], A[p]);
    std::swap(r[k], r[p]);
    if (A[k][k] == 0.0L) throw std::runtime_error("singular system");
    for (std::size_t i = k + 1; i < n; ++i) {
      const long double f = A[i][k] / A[k][k];
      for (std::size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
      r[i] -= f * r[k];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    long double s = r[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= A[k][j] * x[j];
    x[k] = s / A[k][k];
  }
  return x;
}

/// Null vector of (A - lambda I) with its largest entry set to 1: fix one
/// coordinate and solve the remaining rows.
inline std::vector<double> eigenvector(const Matrix& A, double lambda) {
  const std::size_t n = A.size();
  std::vector<double> best;
  long double best_res = std::numeric_limits<long double>::infinity();
  for (std::size_t fix = 0; fix < n; ++fix) {
    for (std::size_t drop = 0; drop < n; ++drop) {
      Matrix S;
      std::vector<long double> r;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == drop) continue;
        std::vector<long double> row;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == fix) continue;
          row.push_back(A[i][j] - (i == j ? lambda : 0.0L));
        }
        S.push_back(row);
        r.push_back(-(A[i][fix] - (i == fix ? lambda : 0.0L)));
      }
      std::vector<long double> y;
      try {
        y = solve(S, r);
      } catch (const std::runtime_error&) {
        continue;
      }
      std::vector<long double> v(n);
      for (std::size_t j = 0, k = 0; j < n; ++j) v[j] = j == fix ? 1.0L : y[k++];
      long double res = 0.0L;
      for (std::size_t i = 0; i < n; ++i) {
        long double s = -lambda * v[i];
        for (std::size_t j = 0; j < n; ++j) s += A[i][j] * v[j];
        res = std::max(res, std::fabs(s));
      }
      if (res < best_res) {
        best_res = res;
        long double top = 0.0L;
        for (auto e : v) top = std::fabs(e) > std::fabs(top) ? e : top;
        best.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) best[j] = static_cast<double>(v[j] / top);
      }
    }
  }
  return best;
}

/// pi with pi Q = 0 and sum(pi) = 1 for a generator Q.
inline std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& Q) {
  const std::size_t n = Q.size();
  Matrix At(n, std::vector<long double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) At[i][j] = Q[j][i];
  }
  std::vector<long double> r(n, 0.0L);
  At[n - 1].assign(n, 1.0L);
  r[n - 1] = 1.0L;
  const auto x = solve(At, r);
  return std::vector<double>(x.begin(), x.end());
}

/// sup over a uniform grid of theta x - psi(theta).
inline double dense_legendre(const std::function<double(double)>& psi, double x, double lo, double hi,
                             int points = 100000) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= points; ++i) {
    const double t = lo + (hi - lo) * i / points;
    best = std::max(best, t * x - psi(t));
  }
  return best;
}

/// Two-sided reflection as a one-sided reflection at 0 followed by the
/// truncation map at b, on sampled values.
inline std::vector<double> reflect_by_truncation(const std::vector<double>& x, double b) {
  const std::size_t n = x.size();
  std::vector<double> phi(n);
  double push = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    push = std::max(push, -x[k]);
    phi[k] = x[k] + push;
  }
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    double sup = -std::numeric_limits<double>::infinity();
    double tail_inf = std::numeric_limits<double>::infinity();
    for (std::size_t s = t + 1; s-- > 0;) {
      tail_inf = std::min(tail_inf, phi[s]);
      sup = std::max(sup, std::min(std::max(phi[s] - b, 0.0), tail_inf));
    }
    v[t] = phi[t] - sup;
  }
  return v;
}

}  // namespace bf
