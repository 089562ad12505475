#include "mfgsc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfgsc {

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<State> atoms) {
  EmpiricalMeasure m;
  m.atoms = std::move(atoms);
  m.validate();
  return m;
}

EmpiricalMeasure EmpiricalMeasure::scalar(const std::vector<double>& points) {
  EmpiricalMeasure m;
  for (double x : points) m.atoms.push_back({x});
  m.validate();
  return m;
}

void EmpiricalMeasure::validate() const {
  if (atoms.empty()) throw std::invalid_argument("EmpiricalMeasure: no atoms");
  for (const auto& a : atoms)
    if (a.size() != atoms.front().size())
      throw std::invalid_argument("EmpiricalMeasure: mixed atom dimensions");
  if (!weights.empty()) {
    if (weights.size() != atoms.size())
      throw std::invalid_argument("EmpiricalMeasure: weight count mismatch");
    double s = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("EmpiricalMeasure: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("EmpiricalMeasure: weights do not sum to 1");
  }
}

EmpiricalPathMeasure EmpiricalPathMeasure::uniform(std::vector<CadlagPath> paths) {
  if (paths.empty()) throw std::invalid_argument("EmpiricalPathMeasure: empty ensemble");
  for (const auto& p : paths)
    if (p.dim() != paths.front().dim() ||
        std::abs(p.horizon() - paths.front().horizon()) > 1e-12)
      throw std::invalid_argument("EmpiricalPathMeasure: mixed horizons or dimensions");
  return {std::move(paths), {}};
}

double assignment_cost(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return 0.0;
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("assignment_cost: square matrix required");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double res = 0.0;
  for (int j = 1; j <= n; ++j) res += cost[p[j] - 1][j - 1];
  return res;
}

namespace {

// Replicate atoms so both measures become uniform with the same count R.
// R is the smallest integer <= cap making every weight an integer multiple
// of 1/R within tolerance.
std::vector<State> replicate(const EmpiricalMeasure& m, int R) {
  std::vector<State> out;
  out.reserve(R);
  for (std::size_t i = 0; i < m.atoms.size(); ++i) {
    double w = m.weights.empty() ? 1.0 / m.atoms.size() : m.weights[i];
    int c = static_cast<int>(std::lround(w * R));
    for (int k = 0; k < c; ++k) out.push_back(m.atoms[i]);
  }
  if (static_cast<int>(out.size()) != R)
    throw std::invalid_argument("wasserstein_p: weight replication failed");
  return out;
}

bool replicable(const EmpiricalMeasure& m, int R) {
  long total = 0;
  for (std::size_t i = 0; i < m.atoms.size(); ++i) {
    double w = m.weights.empty() ? 1.0 / m.atoms.size() : m.weights[i];
    double c = w * R;
    if (std::abs(c - std::lround(c)) > 1e-6) return false;
    total += std::lround(c);
  }
  return total == R;
}

int common_replication(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int cap) {
  int lo = static_cast<int>(std::max(mu.atoms.size(), nu.atoms.size()));
  for (int R = lo; R <= cap; ++R)
    if (replicable(mu, R) && replicable(nu, R)) return R;
  throw std::invalid_argument(
      "wasserstein_p: weights are not rational with denominator within the replication cap");
}

double euclid(const State& a, const State& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double matched_cost(const std::vector<State>& a, const std::vector<State>& b,
                    const GroundMetric& ground, double p) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i][j] = std::pow(ground(a[i], b[j]), p);
  return std::pow(assignment_cost(cost) / n, 1.0 / p);
}

}  // namespace

double wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     const GroundMetric& ground, double p, int replication_cap) {
  mu.validate();
  nu.validate();
  if (p < 1.0) throw std::invalid_argument("wasserstein_p: p >= 1 required");
  if (mu.atoms.front().size() != nu.atoms.front().size())
    throw std::invalid_argument("wasserstein_p: mismatched spaces");
  if (mu.is_uniform() && nu.is_uniform() && mu.atoms.size() == nu.atoms.size())
    return matched_cost(mu.atoms, nu.atoms, ground, p);
  int R = common_replication(mu, nu, replication_cap);
  return matched_cost(replicate(mu, R), replicate(nu, R), ground, p);
}

double wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                     int replication_cap) {
  mu.validate();
  nu.validate();
  if (p < 1.0) throw std::invalid_argument("wasserstein_p: p >= 1 required");
  if (mu.atoms.front().size() != nu.atoms.front().size())
    throw std::invalid_argument("wasserstein_p: mismatched spaces");
  const bool scalar = mu.atoms.front().size() == 1;
  auto solve = [&](std::vector<State> a, std::vector<State> b) {
    if (scalar) {
      // sorted matching is optimal for convex scalar costs
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::pow(std::abs(a[i][0] - b[i][0]), p);
      return std::pow(acc / a.size(), 1.0 / p);
    }
    return matched_cost(a, b, euclid, p);
  };
  if (mu.is_uniform() && nu.is_uniform() && mu.atoms.size() == nu.atoms.size())
    return solve(mu.atoms, nu.atoms);
  int R = common_replication(mu, nu, replication_cap);
  return solve(replicate(mu, R), replicate(nu, R));
}

double path_wasserstein(const EmpiricalPathMeasure& mu, const EmpiricalPathMeasure& nu,
                        double p, int grid) {
  if (mu.ensemble.size() != nu.ensemble.size())
    throw std::invalid_argument("path_wasserstein: equal ensemble sizes required");
  if (!mu.weights.empty() || !nu.weights.empty())
    throw std::invalid_argument("path_wasserstein: uniform ensembles required");
  const std::size_t n = mu.ensemble.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i][j] = std::pow(m1_distance(mu.ensemble[i], nu.ensemble[j], grid), p);
  return std::pow(assignment_cost(cost) / n, 1.0 / p);
}

EmpiricalMeasure marginal(const EmpiricalPathMeasure& mu, double t) {
  EmpiricalMeasure m;
  for (const auto& x : mu.ensemble) m.atoms.push_back(x.eval(t));
  m.weights = mu.weights;
  m.validate();
  return m;
}

double relaxed_metric(const RelaxedControlGrid& q1, const RelaxedControlGrid& q2, double p,
                      int replication_cap) {
  q1.validate();
  q2.validate();
  if (q1.t_grid != q2.t_grid)
    throw std::invalid_argument("relaxed_metric: time grids must agree");
  const double T = q1.horizon();
  auto to_measure = [&](const RelaxedControlGrid& q) {
    EmpiricalMeasure m;
    for (const auto& a : flatten(q)) {
      m.atoms.push_back({a.t, a.u});
      m.weights.push_back(a.w);
    }
    double s = 0.0;
    for (double w : m.weights) s += w;
    for (double& w : m.weights) w /= s;
    return m;
  };
  GroundMetric ground = [T](const State& a, const State& b) {
    return std::max(std::abs(a[0] - b[0]) / T, std::abs(a[1] - b[1]));
  };
  double value = wasserstein_p(to_measure(q1), to_measure(q2), ground, p, replication_cap);
  // tail series: restrictions outside [0,T] are Dirac products, so each
  // tail Wasserstein term reduces to the control gap
  double tail0 = std::abs(q1.u_tail0 - q2.u_tail0);
  double tailT = std::abs(q1.u_tailT - q2.u_tailT);
  for (int n = 0; n < 50; ++n) value += std::ldexp(tail0 + tailT, -(n + 1));
  return value;
}

}  // namespace mfgsc
