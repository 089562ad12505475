#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mfgsc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace mfgsc;

namespace {

double brute_force_w(const std::vector<State>& a, const std::vector<State>& b, double p) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < a[i].size(); ++k) {
        double d = a[i][k] - b[perm[i]][k];
        s += d * d;
      }
      acc += std::pow(std::sqrt(s), p);
    }
    best = std::min(best, acc);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / a.size(), 1.0 / p);
}

}  // namespace

TEST_CASE("wasserstein basics") {
  auto m = EmpiricalMeasure::scalar({0.0, 1.0});
  CHECK(wasserstein_p(m, m, 1.0) == 0.0);
  auto da = EmpiricalMeasure::scalar({0.3});
  auto db = EmpiricalMeasure::scalar({0.9});
  CHECK(wasserstein_p(da, db, 1.0) == doctest::Approx(0.6));
  auto a = EmpiricalMeasure::scalar({0.0, 2.0});
  auto b = EmpiricalMeasure::scalar({1.0, 3.0});
  CHECK(wasserstein_p(a, b, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("assignment matches brute force") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ud(-2.0, 2.0);
  std::uniform_int_distribution<int> un(1, 7), udim(1, 3);
  for (int it = 0; it < 100; ++it) {
    int n = un(rng), d = udim(rng);
    std::vector<State> a, b;
    for (int i = 0; i < n; ++i) {
      State x(d), y(d);
      for (int k = 0; k < d; ++k) {
        x[k] = ud(rng);
        y[k] = ud(rng);
      }
      a.push_back(x);
      b.push_back(y);
    }
    double p = it % 2 ? 1.0 : 2.0;
    double got = wasserstein_p(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b), p);
    double want = brute_force_w(a, b, p);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("wasserstein metric axioms and p-monotonicity") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int it = 0; it < 20; ++it) {
    std::vector<double> xs, ys, zs;
    for (int i = 0; i < 6; ++i) {
      xs.push_back(ud(rng));
      ys.push_back(ud(rng));
      zs.push_back(ud(rng));
    }
    auto mx = EmpiricalMeasure::scalar(xs);
    auto my = EmpiricalMeasure::scalar(ys);
    auto mz = EmpiricalMeasure::scalar(zs);
    double dxy = wasserstein_p(mx, my, 2.0);
    CHECK(dxy >= 0.0);
    CHECK(dxy == wasserstein_p(my, mx, 2.0));
    CHECK(dxy <= wasserstein_p(mx, mz, 2.0) + wasserstein_p(mz, my, 2.0) + 1e-9);
    CHECK(wasserstein_p(mx, my, 1.0) <= wasserstein_p(mx, my, 2.0) + 1e-12);
  }
}

TEST_CASE("non-uniform weights by replication") {
  EmpiricalMeasure a{{{0.0}, {1.0}}, {0.25, 0.75}};
  EmpiricalMeasure b{{{0.0}, {1.0}}, {0.75, 0.25}};
  // transport 1/2 mass across distance 1
  CHECK(wasserstein_p(a, b, 1.0) == doctest::Approx(0.5));
  EmpiricalMeasure irr{{{0.0}, {1.0}}, {1.0 / 3.0 + 1e-4, 2.0 / 3.0 - 1e-4}};
  CHECK_THROWS(wasserstein_p(irr, a, 1.0, 64));
}

TEST_CASE("path wasserstein") {
  auto mk = [](double level) { return CadlagPath::constant(1.0, level); };
  auto mu = EmpiricalPathMeasure::uniform({mk(0.0), mk(1.0)});
  CHECK(path_wasserstein(mu, mu, 1.0, 64) == 0.0);
  auto nu = EmpiricalPathMeasure::uniform({mk(1.0), mk(0.0)});
  CHECK(path_wasserstein(mu, nu, 1.0, 64) == doctest::Approx(0.0).epsilon(1e-9));
  for (int k : {4, 16, 64}) {
    auto a = EmpiricalPathMeasure::uniform({CadlagPath::step(1.0, 0.5, 1.0)});
    auto b = EmpiricalPathMeasure::uniform({CadlagPath::ramp(1.0, 0.5, 0.5 + 1.0 / k, 1.0)});
    double d = path_wasserstein(a, b, 1.0, 256);
    double single = m1_distance(a.ensemble[0], b.ensemble[0], 256);
    CHECK(d == doctest::Approx(single).epsilon(1e-12));
  }
}

TEST_CASE("marginal") {
  auto mu = EmpiricalPathMeasure::uniform(
      {CadlagPath::constant(1.0, 0.0), CadlagPath::constant(1.0, 1.0)});
  auto m0 = marginal(mu, -0.5);
  for (const auto& a : m0.atoms) CHECK(a[0] == 0.0);
  auto mt = marginal(mu, 0.7);
  REQUIRE(mt.atoms.size() == 2);
  CHECK(mt.atoms[0][0] == 0.0);
  CHECK(mt.atoms[1][0] == 1.0);
  auto mlate = marginal(mu, 5.0);
  CHECK(mlate.atoms == marginal(mu, 1.0).atoms);
}

TEST_CASE("marginal commutes with pooling") {
  auto mu = EmpiricalPathMeasure::uniform(
      {CadlagPath::step(1.0, 0.3, 1.0), CadlagPath::step(1.0, 0.6, 2.0)});
  auto nu = EmpiricalPathMeasure::uniform(
      {CadlagPath::constant(1.0, -1.0), CadlagPath::ramp(1.0, 0.0, 1.0, 1.0)});
  std::vector<CadlagPath> pooled = mu.ensemble;
  pooled.insert(pooled.end(), nu.ensemble.begin(), nu.ensemble.end());
  auto mp = marginal(EmpiricalPathMeasure::uniform(pooled), 0.5);
  auto ma = marginal(mu, 0.5);
  auto mb = marginal(nu, 0.5);
  std::vector<State> expect = ma.atoms;
  expect.insert(expect.end(), mb.atoms.begin(), mb.atoms.end());
  CHECK(mp.atoms == expect);
}

TEST_CASE("relaxed metric") {
  std::vector<double> t_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  auto q1 = RelaxedControlGrid::dirac_constant(t_grid, 0.2);
  auto q2 = RelaxedControlGrid::dirac_constant(t_grid, 0.7);
  CHECK(relaxed_metric(q1, q1, 1.0) == 0.0);
  // Dirac controls with matching tails: main term |du| plus two Dirac
  // tails per series term
  double du = 0.5;
  double tail = 0.0;
  for (int n = 0; n < 50; ++n) tail += std::ldexp(2.0 * du, -(n + 1));
  CHECK(relaxed_metric(q1, q2, 1.0) == doctest::Approx(du + tail).epsilon(1e-12));
  CHECK(relaxed_metric(q1, q2, 1.0) == doctest::Approx(3.0 * du).epsilon(1e-9));
}

TEST_CASE("relaxed metric one-cell perturbation") {
  std::vector<double> t_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> u_grid{0.0, 1.0};
  RelaxedControlGrid q1, q2;
  q1.t_grid = q2.t_grid = t_grid;
  q1.u_grid = q2.u_grid = u_grid;
  q1.weights = {{1, 0}, {1, 0}, {1, 0}, {1, 0}};
  q2.weights = {{1, 0}, {0, 1}, {1, 0}, {1, 0}};
  q1.u_tail0 = q2.u_tail0 = 0.0;
  q1.u_tailT = q2.u_tailT = 0.0;
  double p = 1.0;
  double v = relaxed_metric(q1, q2, p);
  double diam = 1.0, dt = 0.25, T = 1.0;
  CHECK(v <= diam * std::pow(dt / T, 1.0 / p) + 1e-9);
  // exhaustive transport oracle on the 4-atom flattening: only one cell
  // differs, and moving its mass anywhere costs at least dt/T * min gap
  CHECK(v == doctest::Approx(0.25 * 1.0).epsilon(1e-9));
}
