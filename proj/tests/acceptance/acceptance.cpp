// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and runtime
// budgets are fixed below; nothing is read from the environment.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "brute_force.hpp"
#include "rjd/builtin_models.hpp"
#include "rjd/cli.hpp"
#include "rjd/ldp.hpp"
#include "rjd/oracles.hpp"
#include "rjd/simulate.hpp"
#include "rjd/skorokhod.hpp"
#include "rjd/solver.hpp"
#include "rjd/weights.hpp"

using namespace rjd;

namespace {

constexpr double kTableRbmRowTol = 1e-5;
constexpr double kTableRbmZeroTol = 1e-9;
constexpr double kTableRbmBudget = 300.0;
constexpr double kTableBdRowTol = 5e-6;
constexpr double kTableBdBudget = 1.0;
constexpr int kConvergenceExceptions = 1;
constexpr double kConvergenceBudget = 60.0;
constexpr double kCrnFactor = 2.0;
constexpr double kCrnBudget = 900.0;
constexpr double kCrnEqJmp = 1.2e-3, kCrnEqJda = 2.6e-3;
constexpr double kCrnBdryJmp = 2.6e-1, kCrnBdryJda = 1.8e-1;
constexpr double kMartingaleSigmas = 3.0;
constexpr double kMartingaleBias = 0.02;
constexpr double kMartingaleBudget = 120.0;
constexpr double kMcSigmas = 3.0;
constexpr double kMcBurnIn = 5.0;  // divided by T
constexpr double kSkorokhodTol = 1e-12;
constexpr double kSkorokhodBudget = 10.0;
constexpr double kZeroPsiTol = 1e-9;
constexpr double kZeroUTol = 1e-8;
constexpr double kConvexTol = 1e-8;
constexpr double kRateAtMeanTol = 1e-6;
constexpr double kRowSumTol = 1e-10;
constexpr double kBruteForceTol = 1e-10;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

unsigned g_threads = 1;

// 1 -------------------------------------------------------------------------
void table_rbm_check(Outcome& o) {
  const auto t0 = Clock::now();
  const auto rows = table_rbm(g_threads);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  for (const auto& r : rows) {
    const double e = std::abs(r.numeric - r.oracle);
    worst = std::max(worst, e);
    if (r.theta != 0.0) o.require(e <= kTableRbmRowTol, "row theta=" + sci(r.theta) + " error " + sci(e));
  }
  o.detail << "max |psi_hat - psi| = " << sci(worst) << " (tol " << sci(kTableRbmRowTol) << "), |psi_hat_0| = "
           << sci(std::abs(rows[0].numeric)) << " (tol " << sci(kTableRbmZeroTol) << "), " << sci(elapsed) << " s";
  o.require(std::abs(rows[0].numeric) <= kTableRbmZeroTol, "psi_hat at theta=0");
  o.require(elapsed <= kTableRbmBudget, "runtime");
}

// 2 -------------------------------------------------------------------------
void table_bd_check(Outcome& o) {
  const auto t0 = Clock::now();
  const auto rows = table_bd();
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  for (const auto& r : rows) {
    const double e = std::abs(r.numeric - r.oracle);
    worst = std::max(worst, e);
    o.require(e <= kTableBdRowTol, "row theta=" + sci(r.theta));
  }
  o.detail << "max |psi_hat - psi| = " << sci(worst) << " (tol " << sci(kTableBdRowTol) << "), " << sci(elapsed)
           << " s";
  o.require(elapsed <= kTableBdBudget, "runtime");
}

// 3 -------------------------------------------------------------------------
void convergence_check(Outcome& o) {
  const auto t0 = Clock::now();
  const auto rows = fig_convergence(g_threads);
  const double elapsed = seconds_since(t0);
  // rows are theta-major, N ascending
  int worst_exceptions = 0;
  double first_err = 0, last_err = 0;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    int exceptions = 0;
    while (j + 1 < rows.size() && rows[j + 1].theta == rows[i].theta) {
      const double a = std::abs(rows[j].numeric - rows[j].oracle);
      const double b = std::abs(rows[j + 1].numeric - rows[j + 1].oracle);
      if (!(b < a)) ++exceptions;
      ++j;
    }
    worst_exceptions = std::max(worst_exceptions, exceptions);
    o.require(exceptions <= kConvergenceExceptions, "theta=" + sci(rows[i].theta));
    if (rows[i].theta == 1.0) {
      first_err = std::abs(rows[i].numeric - rows[i].oracle);
      last_err = std::abs(rows[j].numeric - rows[j].oracle);
    }
    i = j + 1;
  }
  o.detail << "most non-decreasing steps at one theta = " << worst_exceptions << " (allowed "
           << kConvergenceExceptions << "), theta=1 error " << sci(first_err) << " -> " << sci(last_err) << ", "
           << sci(elapsed) << " s";
  o.require(elapsed <= kConvergenceBudget, "runtime");
}

// 4 -------------------------------------------------------------------------
bool within_factor(double v, double ref, double k) { return v > 0 && v >= ref / k && v <= ref * k; }

void crn_check(Outcome& o) {
  for (const std::string target : {"crn-eq-n", "crn-bdry-10n2"}) {
    const auto t0 = Clock::now();
    const auto c = crn_case(target, 1000, 1000);
    const auto s = crn_derivatives(c, 1000, 0.01, g_threads);
    const double elapsed = seconds_since(t0);
    const double jmp = s.jmp.psi_prime0, jda = s.jda.psi_prime0;
    const bool eq = target == "crn-eq-n";
    const double rj = eq ? kCrnEqJmp : kCrnBdryJmp;
    const double rd = eq ? kCrnEqJda : kCrnBdryJda;
    o.detail << (eq ? "(a) " : " (b) ") << "JMP " << sci(jmp) << " vs " << sci(rj) << ", JDA " << sci(jda) << " vs "
             << sci(rd) << ", " << sci(elapsed) << " s;";
    o.require(eq ? jmp < jda : jmp > jda, std::string(eq ? "(a)" : "(b)") + " ordering");
    o.require(within_factor(jmp, rj, kCrnFactor), std::string(eq ? "(a)" : "(b)") + " JMP magnitude");
    o.require(within_factor(jda, rd, kCrnFactor), std::string(eq ? "(a)" : "(b)") + " JDA magnitude");
    o.require(elapsed <= kCrnBudget, "runtime");
  }
}

// 5 -------------------------------------------------------------------------
void martingale_check(Outcome& o) {
  const auto t0 = Clock::now();
  const auto m = rbm_model(0.0, 1.0, 1.0);
  const int N = 1000;
  const auto f = continuised_endpoint_indicator(N);
  const auto s = solve_psi(m, f, 0.5, Mesh::uniform(1.0, N));
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.T = 10.0;
  cfg.paths = 10000;
  cfg.seed = 7;
  cfg.threads = g_threads;
  const auto c = martingale_residual(m, f, s, cfg);
  const double elapsed = seconds_since(t0);
  const double bound = kMartingaleSigmas * c.stderr_ + kMartingaleBias;
  o.detail << "residual " << sci(c.residual) << " <= " << sci(bound) << " (stderr " << sci(c.stderr_) << "), "
           << sci(elapsed) << " s";
  o.require(c.residual <= bound, "residual");
  o.require(elapsed <= kMartingaleBudget, "runtime");
}

// 6 -------------------------------------------------------------------------
void mc_check(Outcome& o) {
  const auto t0 = Clock::now();
  const auto m = birth_death_model(50.0, 3);
  const auto mesh = lattice_mesh(m);
  const auto f = continuised_prefix_indicator(1.0, 1.0 / (mesh.N + 1), 3.0);
  const double psi = solve_psi(m, f, 0.01, mesh).psi_hat;
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.T = 100.0;
  cfg.paths = 10000;
  cfg.seed = 3;
  cfg.threads = g_threads;
  const auto e = mc_log_mgf(m, f, 0.01, cfg);
  const double elapsed = seconds_since(t0);
  const double gap = std::abs(e.estimate - psi);
  const double bound = kMcSigmas * e.stderr_ + kMcBurnIn / cfg.T;
  o.detail << "|mc - psi_hat| = " << sci(gap) << " <= " << sci(bound) << " (mc " << sci(e.estimate) << ", psi_hat "
           << sci(psi) << ", stderr " << sci(e.stderr_) << "), " << sci(elapsed) << " s";
  o.require(gap <= bound, "cross-validation");
}

// 7 -------------------------------------------------------------------------
void skorokhod_check(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> step(0.0, 0.35);
  std::uniform_real_distribution<double> start(0.0, 1.0);
  double worst = 0.0;
  for (int p = 0; p < 1000; ++p) {
    SampledPath X;
    X.times.push_back(0.0);
    X.values.push_back(start(rng));
    for (int k = 1; k <= 100; ++k) {
      X.times.push_back(k * 0.01);
      X.values.push_back(X.values.back() + step(rng));
    }
    const auto a = reflect_incrementally(X, 1.0);
    const auto d = two_sided_skorokhod_map(X, 1.0);
    const auto s = skorokhod_by_sup_formulas(X, 1.0);
    for (std::size_t k = 0; k < X.values.size(); ++k) {
      for (const auto* other : {&d, &s}) {
        worst = std::max({worst, std::abs(a.V[k] - other->V[k]), std::abs(a.L0[k] - other->L0[k]),
                          std::abs(a.Lb[k] - other->Lb[k])});
      }
    }
  }
  const double elapsed = seconds_since(t0);
  o.detail << "max componentwise gap " << sci(worst) << " (tol " << sci(kSkorokhodTol) << "), " << sci(elapsed)
           << " s";
  o.require(worst <= kSkorokhodTol, "agreement");
  o.require(elapsed <= kSkorokhodBudget, "runtime");
}

// 8 -------------------------------------------------------------------------
void property_check(Outcome& o) {
  const auto t0 = Clock::now();
  struct Case {
    ReflectedModel m;
    WeightSpec f;
    Mesh mesh;
  };
  const int n = 1000;
  const std::vector<Case> cases{
      {rbm_model(0.0, 1.0, 1.0), continuised_endpoint_indicator(1000), Mesh::uniform(1.0, 1000)},
      {birth_death_model(50.0, 3), continuised_prefix_indicator(1.0, 1.0 / 3, 3.0), Mesh::uniform(3.0, 2)},
      {crn_langevin(n), continuised_point_weight({0.25, 0.75}, n), Mesh::uniform(1.0, n)},
      {crn_jump_diffusion(n, 10.0 * n * n), continuised_boundary_indicator(n), Mesh::uniform(1.0, n)},
      {crn_jump_markov(n, n), continuised_point_weight({0.25, 0.75}, n), Mesh::uniform(1.0, n - 1)},
  };

  double worst_psi = 0, worst_u = 0, worst_row = 0, worst_convex = 0, worst_rate_mean = 0, min_rate = 0;
  for (const auto& c : cases) {
    const auto r = solve_psi(c.m, c.f, 0.0, c.mesh);
    worst_psi = std::max(worst_psi, std::abs(r.psi_hat));
    worst_u = std::max(worst_u, (r.u.array() - 1.0).abs().maxCoeff());

    // generator rows, and the jump part alone, annihilate constants
    const auto op = build_operator(c.m, c.f, 0.0, c.mesh);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.matrix.cols());
    const Eigen::VectorXd sums = op.matrix * ones;
    for (Eigen::Index i = 0; i < sums.size(); ++i) {
      worst_row = std::max(worst_row, std::abs(sums(i)) / std::max(1.0, op.matrix.row(i).cwiseAbs().sum()));
    }
    std::vector<double> jump_sum(c.mesh.nodes(), 0.0), jump_abs(c.mesh.nodes(), 0.0);
    for (const auto& e : assemble_jump(c.m, c.mesh)) {
      jump_sum[e.row] += e.value;
      jump_abs[e.row] += std::abs(e.value);
    }
    for (int i = 0; i < c.mesh.nodes(); ++i) {
      worst_row = std::max(worst_row, std::abs(jump_sum[i]) / std::max(1.0, jump_abs[i]));
    }

    std::vector<double> th;
    for (int k = -10; k <= 10; ++k) th.push_back(k * 0.1);
    const auto curve = psi_curve(c.m, c.f, th, c.mesh, {}, g_threads);
    worst_convex = std::min(worst_convex, curve.convexity_defect());
    auto eval = [&](double t) { return solve_psi(c.m, c.f, t, c.mesh).psi_hat; };
    const auto mv = mean_variance_at_zero(c.m, c.f, c.mesh, 1e-3);
    worst_rate_mean = std::max(worst_rate_mean, legendre_transform(curve, mv.psi_prime0, eval).value);
    const double spread = std::max(std::sqrt(std::max(mv.psi_second0, 0.0)), 1e-3);
    for (int k = -6; k <= 6; ++k) {
      const double x = mv.psi_prime0 + k * 0.5 * spread;
      min_rate = std::min(min_rate, legendre_transform(curve, x).value);
    }
  }

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_bf = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd A(5, 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) A(i, j) = u(rng) < 0.4 ? 0.0 : u(rng);
    }
    for (int i = 0; i < 5; ++i) A(i, (i + 1) % 5) = 0.1 + u(rng);
    bf::Matrix B(5, std::vector<long double>(5));
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) B[i][j] = A(i, j);
    }
    const double lam = bf::largest_real_root(bf::charpoly(B));
    worst_bf = std::max(worst_bf, std::abs(dominant_eigenpair(A, true).psi - lam));
  }
  const double elapsed = seconds_since(t0);

  o.detail << "theta=0: |psi| " << sci(worst_psi) << ", |u-1| " << sci(worst_u) << "; convexity "
           << sci(worst_convex) << "; rate at mean " << sci(worst_rate_mean) << ", min rate " << sci(min_rate)
           << "; row sums " << sci(worst_row) << "; 5x5 brute force " << sci(worst_bf) << "; " << sci(elapsed)
           << " s";
  o.require(worst_psi <= kZeroPsiTol, "psi at theta=0");
  o.require(worst_u <= kZeroUTol, "constant eigenfunction");
  o.require(worst_convex >= -kConvexTol, "convexity");
  o.require(worst_rate_mean <= kRateAtMeanTol, "rate at the mean");
  o.require(min_rate >= 0.0, "rate nonnegative");
  o.require(worst_row <= kRowSumTol, "row sums");
  o.require(worst_bf <= kBruteForceTol, "brute-force eigenvalue");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "run only these criteria")->check(CLI::Range(1, 8));
  app.add_option("--threads", g_threads, "worker threads, 0 = all cores");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "table: reflected standard BM", table_rbm_check},
      {2, "table: reflected birth-death", table_bd_check},
      {3, "convergence in N", convergence_check},
      {4, "CRN derivative orderings", crn_check},
      {5, "exponential martingale", martingale_check},
      {6, "Monte Carlo vs eigenvalue", mc_check},
      {7, "Skorokhod map equivalence", skorokhod_check},
      {8, "property suites", property_check},
  };
  bool ok = true;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail.str()
              << std::endl;
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
