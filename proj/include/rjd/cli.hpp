#pragma once

// Command-line front end. Every command writes one CSV with a header row to
// --out (stdout when absent); diagnostics go to the error stream.
// Exit codes: 0 ok, 2 bad input or config, 3 solver or simulation failure.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rjd/builtin_models.hpp"
#include "rjd/config.hpp"
#include "rjd/csv.hpp"
#include "rjd/errors.hpp"
#include "rjd/ldp.hpp"
#include "rjd/oracles.hpp"
#include "rjd/parallel.hpp"
#include "rjd/simulate.hpp"
#include "rjd/solver.hpp"
#include "rjd/weights.hpp"

namespace rjd {

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitFailure = 3 };

struct GlobalOptions {
  std::string config;
  std::string out;
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

/// theta_k = k * step, so the grid hits 0 exactly.
inline std::vector<double> multiples(int first, int last, double step) {
  std::vector<double> g;
  for (int k = first; k <= last; ++k) g.push_back(k * step);
  return g;
}

inline void print_warnings(const std::vector<std::string>& warnings, double theta, std::ostream& err) {
  for (const auto& w : warnings) err << "warning (theta=" << format_number(theta) << "): " << w << '\n';
}

// ---- solve / curve / rate ------------------------------------------------

inline void cmd_solve(const RunConfig& rc, unsigned threads, std::ostream& out, std::ostream& err,
                      std::ostream* eigenfunction = nullptr) {
  if (rc.weight_kind.empty()) throw InvalidInput("config: [weight] kind is required");
  std::vector<SpectralResult> res(rc.thetas.size());
  parallel_for(rc.thetas.size(), threads,
               [&](std::size_t i) { res[i] = solve_psi(rc.model, rc.weight, rc.thetas[i], rc.mesh, rc.eigen); });
  CsvWriter csv(out, {"theta", "psi_hat", "residual", "N", "iterations"});
  for (const auto& r : res) {
    print_warnings(r.warnings, r.theta, err);
    csv.cell(r.theta).cell(r.psi_hat).cell(r.residual).cell(r.N).cell(r.iterations).end_row();
  }
  if (eigenfunction) {
    CsvWriter ef(*eigenfunction, {"theta", "x", "u"});
    for (const auto& r : res) {
      for (int i = 0; i < r.u.size(); ++i) ef.cell(r.theta).cell(rc.mesh.x(i)).cell(r.u(i)).end_row();
    }
  }
}

inline PsiCurve curve_for(const RunConfig& rc, unsigned threads) {
  if (rc.weight_kind.empty()) throw InvalidInput("config: [weight] kind is required");
  return psi_curve(rc.model, rc.weight, rc.thetas, rc.mesh, rc.eigen, threads);
}

inline void cmd_curve(const RunConfig& rc, unsigned threads, std::ostream& out) {
  const PsiCurve c = curve_for(rc, threads);
  CsvWriter csv(out, {"theta", "psi"});
  for (std::size_t i = 0; i < c.thetas.size(); ++i) csv.cell(c.thetas[i]).cell(c.psis[i]).end_row();
}

/// Reads a two-column theta,psi CSV with a header row.
inline PsiCurve read_curve_csv(std::istream& in) {
  PsiCurve c;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("curve csv is empty");
  while (std::getline(in, line)) {
    if (config_detail::trim(line).empty()) continue;
    const auto cells = config_detail::split(line, ',');
    if (cells.size() < 2) throw InvalidInput("curve csv rows need theta,psi");
    c.thetas.push_back(config_detail::parse_double(cells[0], "curve csv theta"));
    c.psis.push_back(config_detail::parse_double(cells[1], "curve csv psi"));
  }
  c.validate();
  return c;
}

inline void write_rate(const std::vector<RatePoint>& pts, std::ostream& out, std::ostream& err) {
  CsvWriter csv(out, {"x", "rate", "argmax_theta", "edge"});
  for (const auto& p : pts) {
    if (p.at_grid_edge) err << "warning: sup at x=" << format_number(p.x) << " is at the grid edge; extend the grid\n";
    csv.cell(p.x).cell(p.value).cell(p.argmax_theta).cell(p.at_grid_edge ? 1 : 0).end_row();
  }
}

// ---- simulate -------------------------------------------------------------

inline void cmd_simulate_paths(const RunConfig& rc, std::ostream& out) {
  CsvWriter csv(out, {"path", "t", "V", "L0", "Lb", "L0_jump", "Lb_jump", "Lambda"});
  const WeightSpec f = rc.weight_kind.empty() ? constant_weight(0.0) : rc.weight;
  std::vector<ReflectedPathRecord> recs(rc.sim.paths);
  parallel_for(recs.size(), rc.sim.threads,
               [&](std::size_t p) { recs[p] = simulate(rc.model, f, rc.sim, p); });
  for (std::size_t p = 0; p < recs.size(); ++p) {
    const auto& r = recs[p];
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      csv.cell(static_cast<std::uint64_t>(p)).cell(r.times[i]).cell(r.V[i]).cell(r.L0[i]).cell(r.Lb[i]);
      csv.cell(r.L0_jump[i]).cell(r.Lb_jump[i]).cell(r.Lambda[i]).end_row();
    }
  }
}

inline void cmd_simulate_estimates(const RunConfig& rc, const std::vector<double>& thetas, std::ostream& out) {
  if (rc.weight_kind.empty()) throw InvalidInput("config: [weight] kind is required");
  const auto ends = run_paths(rc.model, rc.weight, rc.sim);
  CsvWriter csv(out, {"theta", "estimate", "stderr", "paths", "T", "dt", "seed"});
  for (double th : thetas) {
    std::vector<double> w(ends.size());
    for (std::size_t i = 0; i < ends.size(); ++i) w[i] = th * ends[i].Lambda;
    const auto [lm, rse] = detail::log_mean_exp(w);
    csv.cell(th).cell(lm / rc.sim.T).cell(rse / rc.sim.T).cell(rc.sim.paths).cell(rc.sim.T).cell(rc.sim.dt);
    csv.cell(rc.sim.seed).end_row();
  }
}

inline void cmd_martingale(const RunConfig& rc, const std::vector<double>& thetas, std::ostream& out,
                           std::ostream& err) {
  if (rc.weight_kind.empty()) throw InvalidInput("config: [weight] kind is required");
  CsvWriter csv(out, {"theta", "psi_hat", "mean", "u0", "residual", "stderr"});
  for (double th : thetas) {
    const SpectralResult s = solve_psi(rc.model, rc.weight, th, rc.mesh, rc.eigen);
    print_warnings(s.warnings, th, err);
    const MartingaleCheck m = martingale_residual(rc.model, rc.weight, s, rc.sim);
    csv.cell(th).cell(s.psi_hat).cell(m.mean).cell(m.u0).cell(m.residual).cell(m.stderr_).end_row();
  }
}

// ---- oracle ---------------------------------------------------------------

inline void cmd_oracle(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto& m = rc.model;
  std::function<double(double)> psi_of;
  double pole;
  if (m.name == "rbm") {
    if (!m.mu.constant_value() || !m.sigma2.constant_value()) throw InvalidInput("oracle needs constant mu, sigma2");
    const oracle::RbmParams p{*m.mu.constant_value(), *m.sigma2.constant_value(), m.b};
    if (m.rho0 != 1.0 || m.rhob != 1.0) throw InvalidInput("the reflected BM oracle assumes rho0 = rhob = 1");
    psi_of = [p](double th) { return oracle::rbm_psi_of_theta(p, th); };
    pole = oracle::rbm_pole(p);
  } else if (m.name == "birth-death") {
    const auto& atoms = m.kernel.atoms();
    if (atoms.empty() || !atoms[0].rate.constant_value()) throw InvalidInput("birth-death model has no constant rate");
    const oracle::BdParams p{2 * *atoms[0].rate.constant_value(), static_cast<int>(std::lround(m.b))};
    psi_of = [p](double th) { return oracle::bd_psi_of_theta(p, th); };
    pole = oracle::bd_pole(p);
  } else {
    throw InvalidInput("oracle: closed forms exist only for model kinds rbm and birth-death");
  }
  err << "pole of theta(psi): psi = " << format_number(pole) << '\n';
  CsvWriter csv(out, {"theta", "psi_oracle"});
  for (double th : rc.thetas) csv.cell(th).cell(psi_of(th)).end_row();
}

// ---- reproduce ------------------------------------------------------------

struct ReproduceOptions {
  int crn_n = 1000;
  int crn_N = 1000;
  double dtheta = 0.01;
  unsigned threads = 1;
};

inline const std::vector<std::string>& reproduce_targets() {
  static const std::vector<std::string> t{"table-rbm",  "table-bd",    "fig-convergence",
                                          "crn-eq-n",   "crn-eq-10n2", "crn-bdry-10n2"};
  return t;
}

struct OracleRow {
  double theta, numeric, oracle;
};

inline std::vector<OracleRow> table_rbm(unsigned threads) {
  const ReflectedModel m = rbm_model(0.0, 1.0, 1.0);
  const Mesh mesh = Mesh::uniform(1.0, 1000);
  const WeightSpec f = continuised_endpoint_indicator(mesh.N, 1.0);
  const auto th = multiples(0, 10, 0.001);
  std::vector<OracleRow> rows(th.size());
  parallel_for(th.size(), threads, [&](std::size_t i) {
    rows[i] = {th[i], solve_psi(m, f, th[i], mesh).psi_hat, oracle::rbm_psi_of_theta({0.0, 1.0, 1.0}, th[i])};
  });
  return rows;
}

inline std::vector<OracleRow> table_bd() {
  const ReflectedModel m = birth_death_model(50.0, 3);
  const Mesh mesh = lattice_mesh(m);
  const WeightSpec f = continuised_prefix_indicator(1.0, 1.0 / (mesh.N + 1), 3.0);
  std::vector<OracleRow> rows;
  for (double th : multiples(0, 10, 0.001)) {
    rows.push_back({th, solve_psi(m, f, th, mesh).psi_hat, oracle::bd_psi_of_theta({50.0, 3}, th)});
  }
  return rows;
}

struct ConvergenceRow {
  double theta;
  int N;
  double numeric, oracle;
};

inline std::vector<ConvergenceRow> fig_convergence(unsigned threads) {
  const ReflectedModel m = rbm_model(0.0, 1.0, 1.0);
  const auto th = multiples(1, 10, 0.1);
  std::vector<int> Ns;
  for (int N = 10; N <= 110; N += 10) Ns.push_back(N);
  std::vector<ConvergenceRow> rows(th.size() * Ns.size());
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const double t = th[k / Ns.size()];
    const int N = Ns[k % Ns.size()];
    const double psi = solve_psi(m, continuised_endpoint_indicator(N, 1.0), t, Mesh::uniform(1.0, N)).psi_hat;
    rows[k] = {t, N, psi, oracle::rbm_psi_of_theta({0.0, 1.0, 1.0}, t)};
  });
  return rows;
}

struct CrnCase {
  ReflectedModel jmp, jda;
  WeightSpec f;
  std::string label;
};

inline CrnCase crn_case(const std::string& target, int n, int N) {
  const double nn = n;
  if (target == "crn-eq-n") {
    return {crn_jump_markov(nn, nn), crn_langevin(nn), continuised_point_weight({0.25, 0.75}, N), "gamma_n = n, f = hats at {0.25, 0.75}"};
  }
  if (target == "crn-eq-10n2") {
    return {crn_jump_markov(nn, 10 * nn * nn), crn_jump_diffusion(nn, 10 * nn * nn),
            continuised_point_weight({0.25, 0.75}, N), "gamma_n = 10 n^2, f = hats at {0.25, 0.75}"};
  }
  if (target == "crn-bdry-10n2") {
    return {crn_jump_markov(nn, 10 * nn * nn), crn_jump_diffusion(nn, 10 * nn * nn),
            continuised_boundary_indicator(N), "gamma_n = 10 n^2, f = hats at {0, 1}"};
  }
  throw InvalidInput("unknown crn target '" + target + "'");
}

struct CrnSummary {
  MeanVariance jmp, jda;
};

inline CrnSummary crn_derivatives(const CrnCase& c, int N, double dtheta, unsigned threads) {
  const Mesh lat = lattice_mesh(c.jmp);
  const Mesh uni = Mesh::uniform(1.0, N);
  const double th[3] = {-dtheta, 0.0, dtheta};
  double v[6];
  parallel_for(6, threads, [&](std::size_t k) {
    v[k] = k < 3 ? solve_psi(c.jmp, c.f, th[k], lat).psi_hat : solve_psi(c.jda, c.f, th[k - 3], uni).psi_hat;
  });
  return {mean_variance_from(v[0], v[1], v[2], dtheta), mean_variance_from(v[3], v[4], v[5], dtheta)};
}

inline std::vector<double> crn_theta_grid(double dtheta) {
  std::vector<double> g{-dtheta, 0.0, dtheta};
  for (double t : multiples(1, 9, 0.1)) {
    if (t > dtheta) g.push_back(t);
  }
  for (double t : multiples(1, 100, 1.0)) g.push_back(t);
  return g;
}

inline void cmd_reproduce(const std::string& target, const ReproduceOptions& o, std::ostream& out, std::ostream& err) {
  if (target == "table-rbm" || target == "table-bd") {
    const auto rows = target == "table-rbm" ? table_rbm(o.threads) : table_bd();
    CsvWriter csv(out, {"theta", "psi_numeric", "psi_oracle", "abs_error"});
    double worst = 0.0;
    for (const auto& r : rows) {
      const double e = std::abs(r.numeric - r.oracle);
      worst = std::max(worst, e);
      csv.cell(r.theta).cell(r.numeric).cell(r.oracle).cell(e).end_row();
    }
    err << target << ": max abs error " << format_number(worst) << '\n';
    return;
  }
  if (target == "fig-convergence") {
    CsvWriter csv(out, {"theta", "N", "psi_numeric", "psi_oracle", "abs_error"});
    for (const auto& r : fig_convergence(o.threads)) {
      csv.cell(r.theta).cell(r.N).cell(r.numeric).cell(r.oracle).cell(std::abs(r.numeric - r.oracle)).end_row();
    }
    return;
  }
  if (target.rfind("crn-", 0) == 0) {
    const CrnCase c = crn_case(target, o.crn_n, o.crn_N);
    const CrnSummary s = crn_derivatives(c, o.crn_N, o.dtheta, o.threads);
    err << target << " (" << c.label << ", n=" << o.crn_n << ", N=" << o.crn_N << ", dtheta=" << format_number(o.dtheta)
        << ")\n"
        << "  psi'(0)  JMP " << format_number(s.jmp.psi_prime0) << "  JDA " << format_number(s.jda.psi_prime0) << '\n'
        << "  psi''(0) JMP " << format_number(s.jmp.psi_second0) << "  JDA " << format_number(s.jda.psi_second0)
        << '\n';
    const auto grid = crn_theta_grid(o.dtheta);
    const Mesh lat = lattice_mesh(c.jmp);
    const Mesh uni = Mesh::uniform(1.0, o.crn_N);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> pj(grid.size(), nan), pd(grid.size(), nan);
    std::vector<std::string> failed(2 * grid.size());
    parallel_for(2 * grid.size(), o.threads, [&](std::size_t k) {
      try {
        if (k < grid.size()) {
          pj[k] = solve_psi(c.jmp, c.f, grid[k], lat).psi_hat;
        } else {
          pd[k - grid.size()] = solve_psi(c.jda, c.f, grid[k - grid.size()], uni).psi_hat;
        }
      } catch (const SolverError& e) {
        failed[k] = e.what();
      }
    });
    for (std::size_t k = 0; k < failed.size(); ++k) {
      if (failed[k].empty()) continue;
      const bool jmp = k < grid.size();
      const double t = grid[jmp ? k : k - grid.size()];
      err << "warning: " << (jmp ? "JMP" : "JDA") << " solve failed at theta=" << format_number(t) << ": " << failed[k];
      if (!jmp) {
        const double crit = std::min(critical_theta(c.jda.rho0, c.f.f0, uni.h), critical_theta(c.jda.rhob, c.f.fb, uni.h));
        if (t >= crit) err << " (critical theta " << format_number(crit) << ", refine --N)";
      }
      err << '\n';
    }
    CsvWriter csv(out, {"theta", "psi_jmp", "psi_jda"});
    for (std::size_t i = 0; i < grid.size(); ++i) csv.cell(grid[i]).cell(pj[i]).cell(pd[i]).end_row();
    return;
  }
  throw InvalidInput("unknown reproduce target '" + target + "'");
}

// ---- entry point ----------------------------------------------------------

class OutputSink {
 public:
  explicit OutputSink(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {}
  std::ostream& stream() { return buffer_; }
  void commit() {
    if (path_.empty()) {
      fallback_ << buffer_.str();
      fallback_.flush();
      return;
    }
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw InvalidInput("cannot open output file " + path_);
    f << buffer_.str();
    if (!f) throw InvalidInput("failed writing " + path_);
  }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ostringstream buffer_;
};

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Limiting log-MGF and rate function of additive functionals of reflected jump-diffusions", "rjd"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "INI run configuration");
  app.add_option("--out", g.out, "output CSV path (stdout when absent)");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", g.seed, "overrides sim.seed");

  auto* solve = app.add_subcommand("solve", "principal eigenvalue psi_hat for each theta of the config");
  std::string eigen_out;
  solve->add_option("--eigenfunction", eigen_out, "also write theta,x,u to this path");

  auto* curve = app.add_subcommand("curve", "validated psi curve over the theta grid");

  auto* rate = app.add_subcommand("rate", "Legendre transform of the psi curve");
  std::vector<double> rate_x;
  std::string curve_csv;
  bool exact = false;
  rate->add_option("--x", rate_x, "evaluation points (default: [rate] x)")->delimiter(',');
  rate->add_option("--curve-csv", curve_csv, "read theta,psi from this CSV instead of solving");
  rate->add_flag("--exact-refine", exact, "refine the supremum with fresh eigen-solves");

  auto* sim = app.add_subcommand("simulate", "simulate reflected paths");
  std::vector<double> sim_theta;
  bool martingale = false;
  sim->add_option("--theta", sim_theta, "emit log-MGF estimators at these theta")->delimiter(',');
  sim->add_flag("--martingale", martingale, "check the exponential martingale at --theta");

  auto* orc = app.add_subcommand("oracle", "closed-form psi for the rbm and birth-death configs");

  auto* rep = app.add_subcommand("reproduce", "rerun a reference experiment");
  std::string target;
  ReproduceOptions ro;
  rep->add_option("target", target, "experiment")->required()->check(CLI::IsMember(reproduce_targets()));
  rep->add_option("--n", ro.crn_n, "crn scale n")->check(CLI::Range(10, 100000));
  rep->add_option("--N", ro.crn_N, "crn mesh resolution N")->check(CLI::Range(10, 20000));
  rep->add_option("--dtheta", ro.dtheta, "finite-difference step")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    OutputSink sink(g.out, out);
    if (rep->parsed()) {
      ro.threads = g.threads;
      cmd_reproduce(target, ro, sink.stream(), err);
      sink.commit();
      return kExitOk;
    }
    if (g.config.empty() && !(rate->parsed() && !curve_csv.empty())) {
      throw InvalidInput("--config is required for this command");
    }
    RunConfig rc;
    if (!g.config.empty()) rc = load_config(g.config);
    if (seed_opt->count() > 0) rc.sim.seed = g.seed;
    rc.sim.threads = g.threads;

    if (solve->parsed()) {
      if (eigen_out.empty()) {
        cmd_solve(rc, g.threads, sink.stream(), err);
      } else {
        OutputSink ef(eigen_out, out);
        cmd_solve(rc, g.threads, sink.stream(), err, &ef.stream());
        ef.commit();
      }
    } else if (curve->parsed()) {
      cmd_curve(rc, g.threads, sink.stream());
    } else if (rate->parsed()) {
      if (rate_x.empty()) rate_x = rc.rate_xs;
      if (rate_x.empty()) throw InvalidInput("rate needs --x or [rate] x");
      PsiCurve c;
      PsiEvaluator eval;
      if (!curve_csv.empty()) {
        std::ifstream in(curve_csv);
        if (!in) throw InvalidInput("cannot read " + curve_csv);
        c = read_curve_csv(in);
        if (exact) throw InvalidInput("--exact-refine needs a model, not --curve-csv");
      } else {
        c = curve_for(rc, g.threads);
        if (exact) eval = [&rc](double t) { return solve_psi(rc.model, rc.weight, t, rc.mesh, rc.eigen).psi_hat; };
      }
      write_rate(rate_function(c, rate_x, eval), sink.stream(), err);
    } else if (sim->parsed()) {
      if (martingale) {
        if (sim_theta.empty()) throw InvalidInput("--martingale needs --theta");
        cmd_martingale(rc, sim_theta, sink.stream(), err);
      } else if (!sim_theta.empty()) {
        cmd_simulate_estimates(rc, sim_theta, sink.stream());
      } else {
        cmd_simulate_paths(rc, sink.stream());
      }
    } else if (orc->parsed()) {
      cmd_oracle(rc, sink.stream(), err);
    }
    sink.commit();
    return kExitOk;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const PoleError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const boost::property_tree::ptree_error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitFailure;
  } catch (const SimulationError& e) {
    err << "simulation failure: " << e.what() << '\n';
    return kExitFailure;
  } catch (const InvariantViolation& e) {
    err << "invariant violated: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace rjd
