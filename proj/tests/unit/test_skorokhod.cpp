#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "brute_force.hpp"
#include "rjd/skorokhod.hpp"

using namespace rjd;
using Catch::Matchers::WithinAbs;

namespace {

SampledPath random_path(std::mt19937_64& rng, int steps, double b, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  std::uniform_real_distribution<double> u(0.0, b);
  SampledPath p;
  p.times.push_back(0.0);
  p.values.push_back(u(rng));
  for (int k = 1; k <= steps; ++k) {
    p.times.push_back(k * 0.01);
    p.values.push_back(p.values.back() + n(rng));
  }
  return p;
}

}  // namespace

TEST_CASE("single reflection steps", "[skorokhod]") {
  auto s = incremental_reflect({0.2, 0.0, 0.0}, -0.5, 1.0);
  CHECK(s.v == 0.0);
  CHECK_THAT(s.l0, WithinAbs(0.3, 1e-15));
  s = incremental_reflect(s, 1.4, 1.0);
  CHECK(s.v == 1.0);
  CHECK_THAT(s.lb, WithinAbs(0.4, 1e-15));
  s = incremental_reflect(s, -0.25, 1.0);
  CHECK(s.v == 0.75);
  CHECK_THAT(s.l0, WithinAbs(0.3, 1e-15));
}

TEST_CASE("three Skorokhod forms and the truncation map agree", "[skorokhod][property]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const double b = trial % 3 == 0 ? 0.5 : 2.0;
    const auto X = random_path(rng, 80, b, trial % 2 ? 0.3 : 1.0);
    const auto a = reflect_incrementally(X, b);
    const auto d = two_sided_skorokhod_map(X, b);
    const auto s = skorokhod_by_sup_formulas(X, b);
    const auto t = bf::reflect_by_truncation(X.values, b);
    for (std::size_t k = 0; k < X.values.size(); ++k) {
      CHECK_THAT(a.V[k], WithinAbs(d.V[k], 1e-12));
      CHECK_THAT(a.V[k], WithinAbs(s.V[k], 1e-12));
      CHECK_THAT(a.V[k], WithinAbs(t[k], 1e-12));
      CHECK_THAT(a.L0[k], WithinAbs(d.L0[k], 1e-12));
      CHECK_THAT(a.Lb[k], WithinAbs(s.Lb[k], 1e-12));
      CHECK_THAT(a.L0[k], WithinAbs(s.L0[k], 1e-12));
      CHECK_THAT(a.Lb[k], WithinAbs(d.Lb[k], 1e-12));
    }
  }
}

TEST_CASE("reflection invariants on sampled paths", "[skorokhod][property]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const double b = 1.0;
    const auto X = random_path(rng, 100, b, 0.4);
    const auto r = reflect_incrementally(X, b);
    for (std::size_t k = 0; k < X.values.size(); ++k) {
      CHECK(r.V[k] >= 0.0);
      CHECK(r.V[k] <= b);
      CHECK_THAT(r.V[k], WithinAbs(X.values[k] + r.L0[k] - r.Lb[k], 1e-12));
      if (k > 0) {
        CHECK(r.L0[k] >= r.L0[k - 1]);
        CHECK(r.Lb[k] >= r.Lb[k - 1]);
        if (r.L0[k] > r.L0[k - 1]) CHECK(r.V[k] == 0.0);
        if (r.Lb[k] > r.Lb[k - 1]) CHECK(r.V[k] == b);
      }
    }
  }
}

TEST_CASE("paths inside the box are untouched", "[skorokhod]") {
  SampledPath X{{0.0, 1.0, 2.0}, {0.5, 0.7, 0.2}};
  const auto r = two_sided_skorokhod_map(X, 1.0);
  CHECK(r.V == X.values);
  CHECK(r.L0.back() == 0.0);
  CHECK(r.Lb.back() == 0.0);
}

TEST_CASE("path validation", "[skorokhod]") {
  CHECK_THROWS_AS(reflect_incrementally({{0.0, 0.0}, {0.1, 0.2}}, 1.0), InvalidInput);
  CHECK_THROWS_AS(reflect_incrementally({{0.5}, {0.1}}, 1.0), InvalidInput);
  CHECK_THROWS_AS(reflect_incrementally({{0.0}, {1.5}}, 1.0), InvalidInput);
  CHECK_THROWS_AS(reflect_incrementally({{0.0, 1.0}, {0.1}}, 1.0), InvalidInput);
  CHECK_THROWS_AS(two_sided_skorokhod_map({{0.0}, {0.1}}, 0.0), InvalidInput);
  CHECK_THROWS_AS(skorokhod_by_sup_formulas({{}, {}}, 1.0), InvalidInput);
}
