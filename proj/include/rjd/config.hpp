#pragma once

// INI run configuration. Sections: [model], [weight], [solver], [sim], [rate].
// Custom models name their coefficients with built-in expressions such as
// linear(0.5,-1) or gaussian(4,0.1); there is no general expression parser.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rjd/builtin_models.hpp"
#include "rjd/errors.hpp"
#include "rjd/model.hpp"
#include "rjd/simulate.hpp"
#include "rjd/solver.hpp"
#include "rjd/weights.hpp"

namespace rjd {

namespace config_detail {

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double parse_double(const std::string& text, const std::string& what) {
  std::istringstream is(trim(text));
  is.imbue(std::locale::classic());
  double v;
  if (!(is >> v) || !(is >> std::ws).eof()) throw InvalidInput(what + ": not a number: '" + text + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    if (!part.empty()) out.push_back(parse_double(part, what));
  }
  if (out.empty()) throw InvalidInput(what + ": empty list");
  return out;
}

struct Call {
  std::string name;
  std::vector<double> args;
};

inline Call parse_call(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos) {
    std::istringstream is(t);
    is.imbue(std::locale::classic());
    double v;
    if (is >> v && (is >> std::ws).eof()) return {"constant", {v}};
    return {t, {}};
  }
  if (t.back() != ')') throw InvalidInput(what + ": malformed expression '" + text + "'");
  Call c{trim(t.substr(0, open)), {}};
  const std::string inner = t.substr(open + 1, t.size() - open - 2);
  if (!trim(inner).empty()) c.args = parse_list(inner, what);
  return c;
}

inline void arity(const Call& c, std::size_t n, const std::string& what) {
  if (c.args.size() != n) {
    throw InvalidInput(what + ": " + c.name + " takes " + std::to_string(n) + " argument(s)");
  }
}

}  // namespace config_detail

/// Built-in scalar expressions of x on [0, b].
inline ScalarField builtin_scalar(const std::string& text, double b, const CrnRates& k, double n,
                                  const std::string& what) {
  using namespace config_detail;
  const Call c = parse_call(text, what);
  const auto& a = c.args;
  if (c.name == "constant") {
    arity(c, 1, what);
    return ScalarField(a[0]);
  }
  if (c.name == "linear") {
    arity(c, 2, what);
    return ScalarField([=](double x) { return a[0] + a[1] * x; }, trim(text));
  }
  if (c.name == "quadratic") {
    arity(c, 3, what);
    return ScalarField([=](double x) { return a[0] + a[1] * x + a[2] * x * x; }, trim(text));
  }
  if (c.name == "logistic") {
    arity(c, 1, what);
    return ScalarField([=](double x) { return a[0] * x * (b - x); }, trim(text));
  }
  if (c.name == "ou") {
    arity(c, 2, what);
    return ScalarField([=](double x) { return a[0] * (a[1] - x); }, trim(text));
  }
  if (c.name == "crn-drift") {
    arity(c, 0, what);
    return crn_drift(k);
  }
  if (c.name == "crn-reaction-variance") {
    arity(c, 0, what);
    return ScalarField([=](double x) { return (k.r_plus(x) + k.r_minus(x)) / n; }, "crn reaction variance");
  }
  throw InvalidInput(what + ": unknown built-in expression '" + c.name + "'");
}

/// Built-in jump densities in (x, y).
inline std::function<double(double, double)> builtin_density(const std::string& text, double b,
                                                             const std::string& what) {
  using namespace config_detail;
  const Call c = parse_call(text, what);
  const auto& a = c.args;
  if (c.name == "constant" || c.name == "uniform") {
    arity(c, 1, what);
    return [=](double, double) { return a[0]; };
  }
  if (c.name == "exponential") {
    arity(c, 2, what);
    return [=](double, double y) { return a[0] * std::exp(-std::abs(y) / a[1]); };
  }
  if (c.name == "gaussian") {
    arity(c, 2, what);
    return [=](double, double y) { return a[0] * std::exp(-y * y / (2 * a[1] * a[1])); };
  }
  if (c.name == "logistic-uniform") {
    arity(c, 1, what);
    return [=](double x, double) { return a[0] * x * (b - x); };
  }
  throw InvalidInput(what + ": unknown built-in density '" + c.name + "'");
}

struct RunConfig {
  ReflectedModel model;
  WeightSpec weight;
  Mesh mesh;
  EigenOptions eigen;
  std::vector<double> thetas{0.0};
  double dtheta = 0.01;
  SimConfig sim;
  std::vector<double> rate_xs;
  std::string weight_kind;
};

class ConfigReader {
 public:
  explicit ConfigReader(boost::property_tree::ptree tree) : tree_(std::move(tree)) {}

  static ConfigReader from_file(const std::string& path) {
    boost::property_tree::ptree t;
    try {
      boost::property_tree::read_ini(path, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw InvalidInput(std::string("config: ") + e.what());
    }
    return ConfigReader(std::move(t));
  }

  static ConfigReader from_string(const std::string& text) {
    boost::property_tree::ptree t;
    std::istringstream is(text);
    try {
      boost::property_tree::read_ini(is, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw InvalidInput(std::string("config: ") + e.what());
    }
    return ConfigReader(std::move(t));
  }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string text(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) throw InvalidInput("config: missing key " + key);
    return config_detail::trim(*v);
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }
  double number(const std::string& key) const { return config_detail::parse_double(text(key), key); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  std::optional<double> maybe_number(const std::string& key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }
  long integer(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw InvalidInput("config: " + key + " must be an integer");
    return static_cast<long>(v);
  }
  std::vector<double> list(const std::string& key) const { return config_detail::parse_list(text(key), key); }

  void check_known(const std::string& section, const std::vector<std::string>& keys) const {
    auto child = tree_.get_child_optional(section);
    if (!child) return;
    for (const auto& kv : *child) {
      if (std::find(keys.begin(), keys.end(), kv.first) == keys.end()) {
        throw InvalidInput("config: unknown key " + section + "." + kv.first);
      }
    }
  }

  CrnRates kappas() const {
    CrnRates k;
    k.k10m = number("model.k10m", k.k10m);
    k.k01p = number("model.k01p", k.k01p);
    k.k11m = number("model.k11m", k.k11m);
    k.k21p = number("model.k21p", k.k21p);
    return k;
  }

  ReflectedModel model() const {
    check_known("model", {"kind", "mu", "sigma2", "b", "rho0", "rhob", "lambda", "n", "gamma", "k10m", "k01p",
                          "k11m", "k21p", "drift", "diffusion", "atoms", "continuous", "name"});
    const std::string kind = text("model.kind");
    ReflectedModel m;
    if (kind == "rbm") {
      m = rbm_model(number("model.mu", 0.0), number("model.sigma2", 1.0), number("model.b", 1.0),
                    number("model.rho0", 1.0), number("model.rhob", 1.0));
    } else if (kind == "birth-death") {
      m = birth_death_model(number("model.lambda", 50.0), static_cast<int>(integer("model.b", 3)));
    } else if (kind == "crn-langevin") {
      m = crn_langevin(number("model.n", 100.0), kappas());
    } else if (kind == "crn-jump-diffusion") {
      const double n = number("model.n", 100.0);
      m = crn_jump_diffusion(n, number("model.gamma", 10 * n * n), kappas());
    } else if (kind == "crn-jump-markov") {
      const double n = number("model.n", 100.0);
      m = crn_jump_markov(n, number("model.gamma", n), kappas());
    } else if (kind == "custom") {
      m = custom_model();
    } else {
      throw InvalidInput("config: unknown model kind '" + kind + "'");
    }
    if (kind != "rbm" && kind != "custom") {
      if (has("model.rho0")) m.rho0 = number("model.rho0");
      if (has("model.rhob")) m.rhob = number("model.rhob");
    }
    m.validate();
    return m;
  }

  Mesh mesh(const ReflectedModel& m) const {
    check_known("solver", {"N", "mesh", "tol", "thetas", "theta_grid", "dtheta", "max_iterations"});
    const std::string kind = text("solver.mesh", m.has_continuous_reflection ? "uniform" : "lattice");
    if (kind == "lattice") return lattice_mesh(m);
    if (kind != "uniform") throw InvalidInput("config: solver.mesh must be uniform or lattice");
    const long N = integer("solver.N", 1000);
    if (N < 2 || N > 20000) throw InvalidInput("config: solver.N must be in [2, 20000]");
    return Mesh::uniform(m.b, static_cast<int>(N));
  }

  WeightSpec weight(const ReflectedModel& m, const Mesh& mesh, std::string* kind_out = nullptr) const {
    check_known("weight", {"kind", "centers", "N", "upper", "width", "value", "expr"});
    const std::string kind = text("weight.kind");
    if (kind_out) *kind_out = kind;
    const int N = static_cast<int>(integer("weight.N", mesh.N));
    if (kind == "point-hats") return continuised_point_weight(list("weight.centers"), N, m.b);
    if (kind == "boundary-hats") return continuised_boundary_indicator(N, m.b);
    if (kind == "endpoint-hat") return continuised_endpoint_indicator(N, m.b);
    if (kind == "prefix") {
      return continuised_prefix_indicator(number("weight.upper"), number("weight.width", 1.0 / (N + 1)), m.b);
    }
    if (kind == "constant") return constant_weight(number("weight.value"));
    if (kind == "custom-builtin") {
      return WeightSpec::from_field(builtin_scalar(text("weight.expr"), m.b, kappas(), number("model.n", 1.0), "weight.expr"),
                                    m.b);
    }
    throw InvalidInput("config: unknown weight kind '" + kind + "'");
  }

  std::vector<double> thetas() const {
    if (has("solver.thetas") && has("solver.theta_grid")) {
      throw InvalidInput("config: give solver.thetas or solver.theta_grid, not both");
    }
    std::vector<double> t;
    if (has("solver.theta_grid")) {
      const auto g = list("solver.theta_grid");
      if (g.size() != 3 || g[2] < 2 || g[2] != std::floor(g[2])) {
        throw InvalidInput("config: solver.theta_grid is start, stop, count (count >= 2)");
      }
      const int n = static_cast<int>(g[2]);
      for (int i = 0; i < n; ++i) {
        const double v = (g[0] * (n - 1 - i) + g[1] * i) / (n - 1);
        t.push_back(std::abs(v) < 1e-15 * std::max(std::abs(g[0]), std::abs(g[1])) ? 0.0 : v);
      }
    } else if (has("solver.thetas")) {
      t = list("solver.thetas");
    } else {
      t = {0.0};
    }
    for (double v : t) {
      if (!std::isfinite(v)) throw InvalidInput("config: theta values must be finite");
    }
    return t;
  }

  SimConfig sim() const {
    check_known("sim", {"dt", "T", "paths", "seed", "x0", "intensity_bound", "bridge", "scan_points"});
    SimConfig s;
    s.dt = number("sim.dt", s.dt);
    s.T = number("sim.T", s.T);
    s.paths = static_cast<int>(integer("sim.paths", s.paths));
    const long seed = integer("sim.seed", 1);
    if (seed < 0) throw InvalidInput("config: sim.seed must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
    s.x0 = maybe_number("sim.x0");
    s.intensity_bound = maybe_number("sim.intensity_bound");
    const std::string bridge = text("sim.bridge", "true");
    if (bridge != "true" && bridge != "false") throw InvalidInput("config: sim.bridge must be true or false");
    s.bridge = bridge == "true";
    s.scan_points = static_cast<int>(integer("sim.scan_points", s.scan_points));
    s.validate();
    return s;
  }

  RunConfig run() const {
    for (const auto& kv : tree_) {
      const auto& s = kv.first;
      if (s != "model" && s != "weight" && s != "solver" && s != "sim" && s != "rate") {
        throw InvalidInput("config: unknown section [" + s + "]");
      }
    }
    check_known("rate", {"x"});
    RunConfig rc;
    rc.model = model();
    rc.mesh = mesh(rc.model);
    if (has("weight.kind")) rc.weight = weight(rc.model, rc.mesh, &rc.weight_kind);
    rc.eigen.tol = number("solver.tol", rc.eigen.tol);
    rc.eigen.max_iterations = static_cast<int>(integer("solver.max_iterations", rc.eigen.max_iterations));
    if (!(rc.eigen.tol > 0 && rc.eigen.tol < 1)) throw InvalidInput("config: solver.tol must be in (0, 1)");
    rc.thetas = thetas();
    rc.dtheta = number("solver.dtheta", rc.dtheta);
    if (!(rc.dtheta > 0)) throw InvalidInput("config: solver.dtheta must be positive");
    rc.sim = sim();
    if (has("rate.x")) rc.rate_xs = list("rate.x");
    return rc;
  }

 private:
  ReflectedModel custom_model() const {
    ReflectedModel m;
    m.name = text("model.name", "custom");
    m.b = number("model.b", 1.0);
    const CrnRates k = kappas();
    const double n = number("model.n", 1.0);
    m.mu = builtin_scalar(text("model.drift", "constant(0)"), m.b, k, n, "model.drift");
    m.sigma2 = builtin_scalar(text("model.diffusion", "constant(0)"), m.b, k, n, "model.diffusion");
    m.rho0 = number("model.rho0", 1.0);
    m.rhob = number("model.rhob", 1.0);
    m.has_continuous_reflection = !m.sigma2.is_identically_zero();

    std::vector<JumpAtom> atoms;
    if (has("model.atoms")) {
      // displacement @ rate-expression, entries separated by '|'
      for (const auto& entry : config_detail::split(text("model.atoms"), '|')) {
        const auto at = entry.find('@');
        if (at == std::string::npos) throw InvalidInput("config: model.atoms entries are 'displacement @ rate'");
        atoms.push_back({config_detail::parse_double(entry.substr(0, at), "model.atoms"),
                         builtin_scalar(entry.substr(at + 1), m.b, k, n, "model.atoms")});
      }
    }
    std::vector<ContinuousJumpComponent> comps;
    if (has("model.continuous")) {
      // lo, hi, subdivisions @ density-expression, entries separated by '|'
      for (const auto& entry : config_detail::split(text("model.continuous"), '|')) {
        const auto at = entry.find('@');
        if (at == std::string::npos) {
          throw InvalidInput("config: model.continuous entries are 'lo, hi, subdivisions @ density'");
        }
        const auto head = config_detail::parse_list(entry.substr(0, at), "model.continuous");
        if (head.size() != 3 || head[2] < 1 || head[2] != std::floor(head[2])) {
          throw InvalidInput("config: model.continuous needs lo, hi and an integer subdivision count");
        }
        comps.push_back({head[0], head[1], builtin_density(entry.substr(at + 1), m.b, "model.continuous"),
                         static_cast<int>(head[2]), config_detail::trim(entry.substr(at + 1))});
      }
    }
    m.kernel = JumpKernel(std::move(atoms), std::move(comps));
    return m;
  }

  boost::property_tree::ptree tree_;
};

inline RunConfig load_config(const std::string& path) { return ConfigReader::from_file(path).run(); }

}  // namespace rjd
