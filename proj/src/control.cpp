#include "mfgsc/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfgsc {

SingularControl SingularControl::zero(double horizon) {
  return {CadlagPath::zero(horizon), std::nullopt};
}

SingularControl SingularControl::from_path(CadlagPath p, std::optional<double> m) {
  if (p.dim() != 1) throw std::invalid_argument("SingularControl: d == 1 required");
  return {std::move(p), m};
}

std::vector<ControlViolation> validate_singular(const SingularControl& z) {
  std::vector<ControlViolation> out;
  const auto& bp = z.path.breakpoints();
  const auto& vals = z.path.values();
  double prev = 0.0;
  for (std::size_t i = 0; i < bp.size(); ++i) {
    double v = vals[i][0];
    if (v < prev - 1e-12) out.push_back({bp[i], "monotonicity violated"});
    if (v < -1e-12 && i == 0) out.push_back({bp[i], "negative control mass"});
    prev = std::max(prev, v);
  }
  if (z.fuel && z.total_mass() > *z.fuel + 1e-12)
    out.push_back({z.path.horizon(), "fuel bound exceeded"});
  return out;
}

SingularControl truncate_fuel(const SingularControl& z, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("truncate_fuel: m must be positive");
  const CadlagPath& p = z.path;
  std::vector<double> bp;
  std::vector<State> vals;
  double prev_t = 0.0, prev_v = 0.0;
  bool capped = false;
  for (std::size_t i = 0; i < p.breakpoints().size() && !capped; ++i) {
    double t = p.breakpoints()[i], v = p.values()[i][0];
    if (v <= m) {
      bp.push_back(t);
      vals.push_back({v});
      prev_t = t;
      prev_v = v;
      continue;
    }
    capped = true;
    if (p.kind() == PathKind::PiecewiseLinear && v > prev_v) {
      // continuous crossing of level m inside the segment
      double tc = prev_t + (t - prev_t) * (m - prev_v) / (v - prev_v);
      if (i == 0) tc = t;  // initial jump at the first breakpoint
      if (bp.empty() || tc > bp.back()) {
        bp.push_back(tc);
        vals.push_back({m});
      } else {
        vals.back() = {m};
      }
    } else {
      // jump overshoots the bound: clamp at the jump time
      bp.push_back(t);
      vals.push_back({m});
    }
  }
  return {CadlagPath(p.horizon(), 1, p.kind(), std::move(bp), std::move(vals)), m};
}

namespace {

// Exact cumulative integral I(t) = int_0^t Z_s ds on the extended line
// (Z = 0 before 0, frozen after T).
double cumulative(const CadlagPath& z, double t) {
  const double T = z.horizon();
  if (t <= 0.0) return 0.0;
  double acc = 0.0;
  double a = 0.0;
  double tt = std::min(t, T);
  const auto& bp = z.breakpoints();
  // integrate piece by piece up to tt
  std::vector<double> knots{0.0};
  for (double b : bp)
    if (b > 0.0 && b < tt) knots.push_back(b);
  knots.push_back(tt);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double lo = knots[i], hi = knots[i + 1];
    double va = z.eval1(lo);
    double vb = z.left_limit1(hi);
    acc += 0.5 * (va + vb) * (hi - lo);  // exact: Z linear or constant on (lo,hi)
  }
  (void)a;
  if (t > T) acc += z.eval1(T) * (t - T);
  return acc;
}

}  // namespace

SingularControl mollify(const SingularControl& z, int n, double eps) {
  if (n < 1) throw std::invalid_argument("mollify: n must be positive");
  if (1.0 / n > eps + 1e-12)
    throw std::invalid_argument("mollify: requires 1/n <= eps");
  const CadlagPath& p = z.path;
  const double T = p.horizon();
  const double Text = T + eps;
  const double w = 1.0 / n;
  auto value = [&](double t) { return n * (cumulative(p, t) - cumulative(p, t - w)); };
  // knots where either t or t - 1/n crosses a breakpoint of Z
  std::vector<double> knots{0.0, Text};
  for (double b : p.breakpoints()) {
    if (b > 0.0 && b < Text) knots.push_back(b);
    if (b + w > 0.0 && b + w < Text) knots.push_back(b + w);
  }
  if (T < Text) {
    knots.push_back(T);
    if (T + w < Text) knots.push_back(T + w);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-15; }),
              knots.end());
  // refine until linear interpolation matches the exact moving average
  // within 1e-9 (piecewise-linear Z makes the average piecewise quadratic)
  if (p.kind() == PathKind::PiecewiseLinear) {
    for (int pass = 0; pass < 40; ++pass) {
      std::vector<double> extra;
      for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double mid = 0.5 * (knots[i] + knots[i + 1]);
        double lin = 0.5 * (value(knots[i]) + value(knots[i + 1]));
        if (std::abs(value(mid) - lin) > 5e-10) extra.push_back(mid);
      }
      if (extra.empty()) break;
      knots.insert(knots.end(), extra.begin(), extra.end());
      std::sort(knots.begin(), knots.end());
    }
  }
  std::vector<State> vals;
  vals.reserve(knots.size());
  for (double t : knots) vals.push_back({value(t)});
  return {CadlagPath(Text, 1, PathKind::PiecewiseLinear, std::move(knots), std::move(vals)),
          z.fuel};
}

void RelaxedControlGrid::validate() const {
  if (t_grid.size() < 2) throw std::invalid_argument("RelaxedControlGrid: need >= 2 grid times");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("RelaxedControlGrid: time grid not increasing");
  if (t_grid.front() != 0.0)
    throw std::invalid_argument("RelaxedControlGrid: time grid must start at 0");
  if (u_grid.empty()) throw std::invalid_argument("RelaxedControlGrid: empty control grid");
  if (weights.size() != t_grid.size() - 1)
    throw std::invalid_argument("RelaxedControlGrid: one weight row per time cell required");
  for (const auto& row : weights) {
    if (row.size() != u_grid.size())
      throw std::invalid_argument("RelaxedControlGrid: row width mismatch");
    double s = 0.0;
    for (double v : row) {
      if (v < -1e-12) throw std::invalid_argument("RelaxedControlGrid: negative weight");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("RelaxedControlGrid: row not stochastic");
  }
}

int RelaxedControlGrid::cell_index(double t) const {
  auto it = std::upper_bound(t_grid.begin(), t_grid.end(), t);
  int k = static_cast<int>(it - t_grid.begin()) - 1;
  return std::clamp(k, 0, cells() - 1);
}

bool RelaxedControlGrid::dirac() const {
  for (const auto& row : weights) {
    int ones = 0;
    for (double v : row) {
      if (std::abs(v - 1.0) < 1e-12) ++ones;
      else if (std::abs(v) > 1e-12) return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

RelaxedControlGrid RelaxedControlGrid::dirac_constant(std::vector<double> t_grid, double u) {
  return dirac_piecewise(std::move(t_grid), [u](double) { return u; });
}

RelaxedControlGrid RelaxedControlGrid::dirac_piecewise(
    std::vector<double> t_grid, const std::function<double(double)>& u_of_t) {
  RelaxedControlGrid q;
  q.t_grid = std::move(t_grid);
  std::vector<double> us;
  for (std::size_t k = 0; k + 1 < q.t_grid.size(); ++k)
    us.push_back(u_of_t(0.5 * (q.t_grid[k] + q.t_grid[k + 1])));
  q.u_grid = us;
  std::sort(q.u_grid.begin(), q.u_grid.end());
  q.u_grid.erase(std::unique(q.u_grid.begin(), q.u_grid.end()), q.u_grid.end());
  for (double u : us) {
    std::vector<double> row(q.u_grid.size(), 0.0);
    auto it = std::lower_bound(q.u_grid.begin(), q.u_grid.end(), u);
    row[static_cast<std::size_t>(it - q.u_grid.begin())] = 1.0;
    q.weights.push_back(std::move(row));
  }
  q.u_tail0 = us.front();
  q.u_tailT = us.back();
  q.validate();
  return q;
}

double RelaxedControlGrid::aggregate(int k, const std::function<double(double)>& phi) const {
  double s = 0.0;
  for (std::size_t j = 0; j < u_grid.size(); ++j) s += weights[k][j] * phi(u_grid[j]);
  return s;
}

RelaxedControlGrid disintegrate(const std::vector<WeightedAtom>& atoms,
                                std::vector<double> t_grid, std::vector<double> u_grid,
                                double u_tail0, double u_tailT) {
  RelaxedControlGrid q;
  q.t_grid = std::move(t_grid);
  q.u_grid = std::move(u_grid);
  q.u_tail0 = u_tail0;
  q.u_tailT = u_tailT;
  const int K = q.cells();
  if (K < 1) throw std::invalid_argument("disintegrate: need at least one time cell");
  const double T = q.horizon();
  q.weights.assign(K, std::vector<double>(q.u_grid.size(), 0.0));
  std::vector<double> cell_mass(K, 0.0);
  double total = 0.0;
  for (const auto& a : atoms) {
    if (a.w < 0.0) throw std::invalid_argument("disintegrate: negative weight");
    int k = q.cell_index(a.t);
    std::size_t j = 0;
    double best = 1e300;
    for (std::size_t jj = 0; jj < q.u_grid.size(); ++jj) {
      double d = std::abs(q.u_grid[jj] - a.u);
      if (d < best) { best = d; j = jj; }
    }
    if (best > 1e-9) throw std::invalid_argument("disintegrate: atom control off the grid");
    q.weights[k][j] += a.w;
    cell_mass[k] += a.w;
    total += a.w;
  }
  if (total <= 0.0) throw std::invalid_argument("disintegrate: zero total mass");
  // Lebesgue time marginal: cell mass proportional to cell width
  for (int k = 0; k < K; ++k) {
    double want = (q.t_grid[k + 1] - q.t_grid[k]) / T;
    if (std::abs(cell_mass[k] / total - want) > 1e-9)
      throw std::invalid_argument("disintegrate: time marginal is not Lebesgue");
    for (double& v : q.weights[k]) v /= cell_mass[k];
  }
  q.validate();
  return q;
}

std::vector<WeightedAtom> flatten(const RelaxedControlGrid& q) {
  q.validate();
  std::vector<WeightedAtom> out;
  const double T = q.horizon();
  for (int k = 0; k < q.cells(); ++k) {
    double mid = 0.5 * (q.t_grid[k] + q.t_grid[k + 1]);
    double width = q.t_grid[k + 1] - q.t_grid[k];
    for (std::size_t j = 0; j < q.u_grid.size(); ++j)
      if (q.weights[k][j] > 0.0)
        out.push_back({mid, q.u_grid[j], q.weights[k][j] * width / T});
  }
  return out;
}

}  // namespace mfgsc
