#pragma once

// Finite-difference / quadrature discretization of the tilted generator
//
//   L~u = mu u' + (sigma2/2) u'' + theta f u + int [u(r(x,y)) - u(x)] nu_x(dy)
//
// with the Robin-type boundary rows
//
//   theta f(0) u(0) + rho0 u'(0) = 0,   theta f(b) u(b) - rhob u'(b) = 0
//
// folded into the interior unknowns, and the principal eigenpair of the
// resulting matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "rjd/errors.hpp"
#include "rjd/model.hpp"

namespace rjd {

struct Mesh {
  int N = 0;
  double b = 1.0;
  double h = 1.0;

  static Mesh uniform(double b, int N) {
    if (N < 1) throw InvalidInput("mesh needs N >= 1");
    if (!(b > 0)) throw InvalidInput("mesh needs b > 0");
    return Mesh{N, b, b / (N + 1)};
  }

  double x(int i) const { return i == N + 1 ? b : i * h; }
  int nodes() const { return N + 2; }
};

/// Mesh whose step equals the smallest atom displacement; b must be an
/// integer multiple of it.
inline Mesh lattice_mesh(const ReflectedModel& model) {
  const auto step = model.kernel.smallest_atom_displacement();
  if (!step) throw InvalidInput(model.name + ": lattice mesh needs at least one jump atom");
  const double cells = model.b / *step;
  const double rounded = std::round(cells);
  if (rounded < 2 || std::abs(cells - rounded) > 1e-9 * rounded) {
    throw InvalidInput(model.name + ": domain is not an integer number of jump steps");
  }
  return Mesh::uniform(model.b, static_cast<int>(rounded) - 1);
}

struct InteriorStencil {
  std::vector<double> a1, a2, a3;  // index i-1 holds node i
};

inline InteriorStencil assemble_interior(const ReflectedModel& model, const WeightSpec& f, double theta,
                                         const Mesh& mesh) {
  InteriorStencil s;
  s.a1.resize(mesh.N);
  s.a2.resize(mesh.N);
  s.a3.resize(mesh.N);
  const double h = mesh.h;
  for (int i = 1; i <= mesh.N; ++i) {
    const double x = mesh.x(i);
    const double m = model.mu(x);
    const double s2 = model.sigma2(x);
    s.a1[i - 1] = -m / (2 * h) + s2 / (2 * h * h);
    s.a2[i - 1] = -s2 / (h * h) + theta * f.at(x, mesh.b);
    s.a3[i - 1] = m / (2 * h) + s2 / (2 * h * h);
  }
  return s;
}

struct MatrixEntry {
  int row;
  int col;
  double value;
};

/// Where a jump from node i with displacement y lands, split over the two
/// bracketing nodes: (node, weight) pairs.
inline void jump_destination(const Mesh& mesh, double x, double y, int& lo, double& w_lo, double& w_hi) {
  const double r = std::clamp(x + y, 0.0, mesh.b);
  const double p = r / mesh.h;
  lo = static_cast<int>(std::floor(p + 1e-9));
  double frac = p - lo;
  if (frac < 1e-9) frac = 0.0;
  if (lo >= mesh.N + 1) {
    lo = mesh.N + 1;
    frac = 0.0;
  }
  if (frac > 1.0 - 1e-9) {
    ++lo;
    frac = 0.0;
  }
  w_lo = 1.0 - frac;
  w_hi = frac;
}

/// Jump part of the generator on the full node set, rows first_row..last_row.
inline std::vector<MatrixEntry> assemble_jump(const ReflectedModel& model, const Mesh& mesh, int first_row,
                                              int last_row) {
  std::vector<MatrixEntry> out;
  if (model.kernel.empty()) return out;
  for (int i = first_row; i <= last_row; ++i) {
    const double x = mesh.x(i);
    model.kernel.for_each_jump(x, [&](double y, double rate) {
      if (rate == 0.0) return;
      if (!std::isfinite(rate)) throw InvalidInput(model.name + ": non-finite jump rate");
      int lo;
      double w_lo, w_hi;
      jump_destination(mesh, x, y, lo, w_lo, w_hi);
      out.push_back({i, i, -rate});
      out.push_back({i, lo, rate * w_lo});
      if (w_hi > 0) out.push_back({i, lo + 1, rate * w_hi});
    });
  }
  return out;
}

inline std::vector<MatrixEntry> assemble_jump(const ReflectedModel& model, const Mesh& mesh) {
  return model.has_continuous_reflection ? assemble_jump(model, mesh, 1, mesh.N)
                                         : assemble_jump(model, mesh, 0, mesh.N + 1);
}

struct DiscreteOperator {
  Eigen::MatrixXd matrix;
  double theta = 0.0;
  Mesh mesh;
  bool positivity_shift_valid = false;
  // Folded (diffusive) operators act on nodes 1..N; pure-jump ones on 0..N+1.
  bool folded = true;
  double rho0 = 1.0, rhob = 1.0, d0 = 1.0, db = -1.0;
  std::vector<std::string> warnings;

  int offset() const { return folded ? 1 : 0; }
};

inline double critical_theta(double rho, double f_boundary, double h) {
  return f_boundary == 0.0 ? std::numeric_limits<double>::infinity() : 3 * rho / (2 * f_boundary * h);
}

inline DiscreteOperator fold_boundary(const InteriorStencil& stencil, const std::vector<MatrixEntry>& jumps,
                                      double theta, const WeightSpec& f, const ReflectedModel& model,
                                      const Mesh& mesh) {
  DiscreteOperator op;
  op.theta = theta;
  op.mesh = mesh;
  op.rho0 = model.rho0;
  op.rhob = model.rhob;
  const int N = mesh.N;
  const double h = mesh.h;

  for (int i = 0; i < N; ++i) {
    if (stencil.a1[i] < 0 || stencil.a3[i] < 0) {
      std::ostringstream w;
      w << "centered stencil has a negative off-diagonal at x=" << mesh.x(i + 1)
        << " (h exceeds sigma2/|mu|)";
      op.warnings.push_back(w.str());
      break;
    }
  }
  if (auto step = model.kernel.smallest_atom_displacement(); step && h < *step / 2) {
    std::ostringstream w;
    w << "mesh step " << h << " is below half the smallest jump " << *step;
    op.warnings.push_back(w.str());
  }

  if (!model.has_continuous_reflection) {
    op.folded = false;
    const int n = N + 2;
    op.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const double x = mesh.x(i);
      if (model.mu(x) != 0.0 || model.sigma2(x) != 0.0) {
        throw InvalidInput(model.name + ": pure-jump operator needs zero drift and diffusion");
      }
      op.matrix(i, i) += theta * f.at(x, mesh.b);
    }
    for (const auto& e : jumps) op.matrix(e.row, e.col) += e.value;
  } else {
    if (N < 2) throw InvalidInput("boundary folding needs N >= 2");
    op.d0 = 3 * model.rho0 - 2 * theta * f.f0 * h;
    op.db = 2 * theta * f.fb * h - 3 * model.rhob;
    if (std::abs(op.d0) <= 1e-12 * 3 * model.rho0) {
      std::ostringstream m;
      m << "boundary substitution at 0 is singular; theta=" << theta << " hits the critical value "
        << critical_theta(model.rho0, f.f0, h) << " for h=" << h;
      throw InvalidInput(m.str());
    }
    if (std::abs(op.db) <= 1e-12 * 3 * model.rhob) {
      std::ostringstream m;
      m << "boundary substitution at b is singular; theta=" << theta << " hits the critical value "
        << critical_theta(model.rhob, f.fb, h) << " for h=" << h;
      throw InvalidInput(m.str());
    }
    if (op.d0 < 0 || op.db > 0) {
      op.warnings.push_back("theta is beyond the critical value of a boundary substitution; refine the mesh");
    }

    // Full rows over columns 0..N+1, then substitute the boundary columns.
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(N, N + 2);
    for (int i = 1; i <= N; ++i) {
      full(i - 1, i - 1) += stencil.a1[i - 1];
      full(i - 1, i) += stencil.a2[i - 1];
      full(i - 1, i + 1) += stencil.a3[i - 1];
    }
    for (const auto& e : jumps) full(e.row - 1, e.col) += e.value;

    const double r0 = model.rho0, rb = model.rhob;
    for (int r = 0; r < N; ++r) {
      const double c0 = full(r, 0);
      if (c0 != 0.0) {
        full(r, 1) += c0 * 4 * r0 / op.d0;
        full(r, 2) += -c0 * r0 / op.d0;
      }
      const double cb = full(r, N + 1);
      if (cb != 0.0) {
        full(r, N - 1) += cb * rb / op.db;
        full(r, N) += -cb * 4 * rb / op.db;
      }
    }
    op.matrix = full.middleCols(1, N);
  }

  op.positivity_shift_valid = true;
  const auto& M = op.matrix;
  for (Eigen::Index j = 0; j < M.cols() && op.positivity_shift_valid; ++j) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      if (i != j && M(i, j) < 0) {
        op.positivity_shift_valid = false;
        break;
      }
    }
  }
  return op;
}

struct EigenOptions {
  double tol = 1e-10;  // residual relative to the infinity norm of the matrix
  int max_iterations = 500;
  double tol_pos = 1e-8;
};

struct EigenPair {
  double psi = 0.0;
  Eigen::VectorXd u;  // max component 1, nonnegative
  double residual = 0.0;
  int iterations = 0;
  std::string method;
};

namespace detail {

inline double inf_norm(const Eigen::MatrixXd& M) {
  return M.rows() == 0 ? 0.0 : M.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double residual_of(const Eigen::MatrixXd& M, const Eigen::VectorXd& u, double psi) {
  const double un = u.cwiseAbs().maxCoeff();
  return un == 0 ? std::numeric_limits<double>::infinity() : (M * u - psi * u).cwiseAbs().maxCoeff() / un;
}

/// Flips sign so the largest-magnitude entry is positive, scales it to 1,
/// and reports whether every entry is >= -tol_pos.
inline bool normalize_positive(Eigen::VectorXd& v, double tol_pos) {
  Eigen::Index k;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) == 0) return false;
  v /= v(k);
  if (v.minCoeff() < -tol_pos) return false;
  v = v.cwiseMax(0.0);
  return true;
}

class ShiftedSolver {
 public:
  ShiftedSolver(const Eigen::MatrixXd& M) : M_(M) {
    const Eigen::Index n = M.rows();
    Eigen::Index nnz = (M.array() != 0.0).count();
    sparse_ = n > 32 && nnz * 10 <= n * n;
    if (sparse_) S_ = M.sparseView();
  }

  void factor(double shift) {
    const Eigen::Index n = M_.rows();
    if (sparse_) {
      Eigen::SparseMatrix<double> I(n, n);
      I.setIdentity();
      Eigen::SparseMatrix<double> A = shift * I - S_;
      A.makeCompressed();
      slu_.compute(A);
      ok_ = slu_.info() == Eigen::Success;
    } else {
      dlu_.compute(shift * Eigen::MatrixXd::Identity(n, n) - M_);
      ok_ = true;
    }
  }

  bool ok() const { return ok_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& x) {
    if (sparse_) return slu_.solve(x);
    return dlu_.solve(x);
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return sparse_ ? Eigen::VectorXd(S_ * x) : Eigen::VectorXd(M_ * x); }

 private:
  const Eigen::MatrixXd& M_;
  bool sparse_ = false;
  bool ok_ = false;
  Eigen::SparseMatrix<double> S_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> slu_;
  Eigen::PartialPivLU<Eigen::MatrixXd> dlu_;
};

/// Inverse iteration on (sI - M) for a Metzler matrix. The shift starts above
/// the Gershgorin bound and is pulled down to the Collatz-Wielandt upper
/// bound of the current iterate, so the iteration accelerates as it goes.
inline bool metzler_inverse_iteration(const Eigen::MatrixXd& M, const EigenOptions& opt, EigenPair& out) {
  const Eigen::Index n = M.rows();
  const double scale = std::max(inf_norm(M), std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();
  ShiftedSolver solver(M);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double shift = M.rowwise().sum().maxCoeff() + 1.0 + 1e-3 * scale;
  double psi = std::numeric_limits<double>::quiet_NaN();
  double prev_psi = psi;
  double factored_shift = std::numeric_limits<double>::quiet_NaN();

  for (int it = 1; it <= opt.max_iterations; ++it) {
    if (!(shift == factored_shift)) {
      solver.factor(shift);
      if (!solver.ok()) return false;
      factored_shift = shift;
    }
    Eigen::VectorXd y = solver.solve(x);
    if (!y.allFinite()) return false;
    const double ymax = y.cwiseAbs().maxCoeff();
    if (ymax == 0) return false;
    x = y / ymax;
    if (x.minCoeff() < -opt.tol_pos) return false;
    x = x.cwiseMax(0.0);

    const Eigen::VectorXd Mx = solver.apply(x);
    psi = x.dot(Mx) / x.squaredNorm();
    const double res = (Mx - psi * x).cwiseAbs().maxCoeff();

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i) > 1e-300) {
        const double r = Mx(i) / x(i);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    }

    const bool stalled = std::abs(psi - prev_psi) <= 4 * eps * scale || res <= 256 * eps * scale;
    if (res <= opt.tol * scale && stalled) {
      out.psi = psi;
      out.u = x;
      out.residual = res;
      out.iterations = it;
      out.method = "metzler-inverse-iteration";
      return true;
    }
    prev_psi = psi;
    if (std::isfinite(hi) && std::isfinite(lo)) {
      const double next = hi + std::max(1e-3 * (hi - lo), 64 * eps * scale);
      if (next < shift) shift = next;
    }
  }
  return false;
}

/// Eigenvalues from a dense nonsymmetric decomposition; the eigenvector of
/// the selected one by inverse iteration at a nearby shift.
inline EigenPair dense_dominant(const Eigen::MatrixXd& M, const EigenOptions& opt) {
  const Eigen::Index n = M.rows();
  const double scale = std::max(inf_norm(M), std::numeric_limits<double>::min());
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) throw SolverError("dense eigen-decomposition failed");
  const auto& ev = es.eigenvalues();
  Eigen::Index k = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (ev(i).real() > ev(k).real()) k = i;
  }
  const double lambda = ev(k).real();
  if (std::abs(ev(k).imag()) > 1e-8 * std::max(1.0, scale)) {
    throw SolverError("eigenvalue of largest real part is not real", lambda);
  }

  const double eps = std::numeric_limits<double>::epsilon();
  const double delta = std::max(1e-10 * scale, 64 * eps * scale);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M - (lambda + delta) * Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  EigenPair out;
  out.method = "dense-eigensolver";
  for (int it = 1; it <= 8; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    if (!y.allFinite()) break;
    x = y / y.cwiseAbs().maxCoeff();
    out.iterations = it;
    if (residual_of(M, x, lambda) <= opt.tol * scale) break;
  }
  if (!normalize_positive(x, opt.tol_pos)) {
    throw SolverError("principal eigenvector is not sign-definite", lambda);
  }
  out.psi = lambda;
  out.u = x;
  out.residual = residual_of(M, x, lambda);
  return out;
}

}  // namespace detail

inline EigenPair dominant_eigenpair(const Eigen::MatrixXd& M, bool metzler, const EigenOptions& opt = {}) {
  if (M.rows() != M.cols() || M.rows() == 0) throw InvalidInput("dominant_eigenpair needs a nonempty square matrix");
  if (!M.allFinite()) throw InvalidInput("matrix has non-finite entries");
  if (M.rows() == 1) return EigenPair{M(0, 0), Eigen::VectorXd::Ones(1), 0.0, 0, "scalar"};
  EigenPair out;
  if (metzler && detail::metzler_inverse_iteration(M, opt, out)) return out;
  out = detail::dense_dominant(M, opt);
  const double scale = detail::inf_norm(M);
  if (!(out.residual <= opt.tol * std::max(scale, 1.0))) {
    throw SolverError("eigen residual " + std::to_string(out.residual) + " exceeds tolerance", out.psi);
  }
  return out;
}

inline EigenPair dominant_eigenpair(const DiscreteOperator& op, const EigenOptions& opt = {}) {
  return dominant_eigenpair(op.matrix, op.positivity_shift_valid, opt);
}

struct SpectralResult {
  double theta = 0.0;
  double psi_hat = 0.0;
  Eigen::VectorXd u;  // all N+2 nodes
  double residual = 0.0;
  int iterations = 0;
  int N = 0;
  std::string method;
  std::vector<std::string> warnings;
};

inline DiscreteOperator build_operator(const ReflectedModel& model, const WeightSpec& f, double theta,
                                       const Mesh& mesh) {
  if (!std::isfinite(theta)) throw InvalidInput("theta must be finite");
  if (std::abs(mesh.h * (mesh.N + 1) - model.b) > 1e-14 * model.b * 4) {
    throw InvalidInput("mesh does not cover [0, b] of the model");
  }
  InteriorStencil stencil;
  if (model.has_continuous_reflection) {
    stencil = assemble_interior(model, f, theta, mesh);
  } else {
    stencil.a1.assign(mesh.N, 0.0);
    stencil.a2.assign(mesh.N, 0.0);
    stencil.a3.assign(mesh.N, 0.0);
  }
  return fold_boundary(stencil, assemble_jump(model, mesh), theta, f, model, mesh);
}

inline SpectralResult solve_psi(const ReflectedModel& model, const WeightSpec& f, double theta, const Mesh& mesh,
                                const EigenOptions& opt = {}) {
  DiscreteOperator op = build_operator(model, f, theta, mesh);
  EigenPair ep = dominant_eigenpair(op, opt);

  const int N = mesh.N;
  SpectralResult r;
  r.theta = theta;
  r.psi_hat = ep.psi;
  r.residual = ep.residual;
  r.iterations = ep.iterations;
  r.N = N;
  r.method = ep.method;
  r.warnings = op.warnings;
  r.u.resize(N + 2);
  if (op.folded) {
    r.u.segment(1, N) = ep.u;
    r.u(0) = (4 * op.rho0 * r.u(1) - op.rho0 * r.u(2)) / op.d0;
    r.u(N + 1) = (op.rhob * r.u(N - 1) - 4 * op.rhob * r.u(N)) / op.db;
  } else {
    r.u = ep.u;
  }
  const double top = r.u.segment(1, N).maxCoeff();
  if (!(top > 0)) throw SolverError("eigenvector vanishes on the interior", ep.psi);
  r.u /= top;
  if (!(r.u.minCoeff() > 0)) {
    throw SolverError("reconstructed eigenfunction is not strictly positive", ep.psi);
  }
  return r;
}

struct ConvergenceTable {
  std::vector<double> thetas;
  std::vector<int> Ns;
  std::vector<std::vector<double>> psi;  // psi[theta index][N index]
};

template <class WeightForN>
ConvergenceTable convergence_study(const ReflectedModel& model, WeightForN&& weight_for_n,
                                   const std::vector<double>& thetas, const std::vector<int>& Ns,
                                   const EigenOptions& opt = {}) {
  for (std::size_t k = 1; k < Ns.size(); ++k) {
    if (Ns[k] <= Ns[k - 1]) throw InvalidInput("convergence study needs an increasing N list");
  }
  ConvergenceTable t{thetas, Ns, {}};
  t.psi.assign(thetas.size(), std::vector<double>(Ns.size()));
  for (std::size_t j = 0; j < Ns.size(); ++j) {
    const Mesh mesh = Mesh::uniform(model.b, Ns[j]);
    const WeightSpec f = weight_for_n(Ns[j]);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      t.psi[i][j] = solve_psi(model, f, thetas[i], mesh, opt).psi_hat;
    }
  }
  return t;
}

}  // namespace rjd
