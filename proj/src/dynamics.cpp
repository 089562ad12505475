#include "mfgsc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace mfgsc {

Moments compute_moments(const EmpiricalMeasure& nu, double p, double cap) {
  Moments m;
  double wsum = 0.0;
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
    double w = nu.weights.empty() ? 1.0 : nu.weights[i];
    m.mean += w * nu.atoms[i][0];
    m.p_moment += w * std::pow(std::abs(nu.atoms[i][0]), p);
    wsum += w;
  }
  m.mean /= wsum;
  m.p_moment = std::min(m.p_moment / wsum, cap);
  return m;
}

double Coeff::operator()(double t, double x, const Moments& nu, double u) const {
  const auto& p = params;
  auto need = [&](std::size_t n) {
    if (p.size() < n) throw std::invalid_argument("Coeff: missing parameters for " + kind);
  };
  if (kind == "zero") return 0.0;
  if (kind == "constant") {
    need(1);
    return p[0];
  }
  if (kind == "affine") {
    need(2);
    return p[0] + p[1] * t;
  }
  if (kind == "linear_clamped") {
    need(6);
    return std::clamp(p[0] + p[1] * x + p[2] * u + p[3] * nu.mean + p[4] * t, -p[5], p[5]);
  }
  if (kind == "quadratic_clamped") {
    need(4);
    return std::clamp(p[0] + p[1] * x + p[2] * x * x, -p[3], p[3]);
  }
  if (kind == "quad_u") {
    need(3);
    double d = u - p[0] - p[1] * nu.mean;
    return p[2] * d * d;
  }
  if (kind == "quad_x") {
    need(3);
    double d = x - p[0] - p[1] * nu.mean;
    return p[2] * d * d;
  }
  if (kind == "power_x") {
    need(2);
    return p[1] * std::pow(std::abs(x), p[0]);
  }
  throw std::invalid_argument("Coeff: unknown kind '" + kind + "'");
}

std::pair<double, double> Coeff::affine_in_t() const {
  if (kind == "zero") return {0.0, 0.0};
  if (kind == "constant") return {params.at(0), 0.0};
  if (kind == "affine") return {params.at(0), params.at(1)};
  throw std::invalid_argument("Coeff: '" + kind + "' is not affine in t");
}

std::vector<double> uniform_grid(double horizon, int steps) {
  if (steps < 1) throw std::invalid_argument("uniform_grid: steps must be positive");
  std::vector<double> g(steps + 1);
  for (int i = 0; i <= steps; ++i) g[i] = horizon * i / steps;
  return g;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Platform-stable standard normal stream: mt19937_64 + Box-Muller.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = to_unit(gen_());
    } while (u1 <= 1e-300);
    u2 = to_unit(gen_());
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  static double to_unit(std::uint64_t v) { return (v >> 11) * 0x1.0p-53; }
  std::mt19937_64 gen_;
  bool have_ = false;
  double spare_ = 0.0;
};

double jump_of(const CadlagPath& z, double t) {
  return z.eval1(t) - z.left_limit1(t);
}

std::vector<Moments> grid_moments(const EmpiricalPathMeasure* mu,
                                  const std::vector<double>& grid, const MfgModel& model) {
  std::vector<Moments> out(grid.size());
  if (!mu) return out;
  for (std::size_t k = 0; k < grid.size(); ++k)
    out[k] = compute_moments(marginal(*mu, grid[k]), model.p, model.moment_cap);
  return out;
}

}  // namespace

double stieltjes(const Coeff& c, const SingularControl& z, double t) {
  auto [c0, c1] = c.affine_in_t();
  const CadlagPath& p = z.path;
  if (t < 0.0) return 0.0;
  double acc = 0.0;
  double tt = std::min(t, p.horizon());
  // jump part
  for (double tj : p.jump_times()) {
    if (tj > tt) break;
    acc += (c0 + c1 * tj) * jump_of(p, tj);
  }
  // absolutely continuous part (piecewise-linear Z segments)
  if (p.kind() == PathKind::PiecewiseLinear) {
    const auto& bp = p.breakpoints();
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
      double a = bp[i], b = std::min(bp[i + 1], tt);
      if (b <= a) break;
      double slope = (p.values()[i + 1][0] - p.values()[i][0]) / (bp[i + 1] - bp[i]);
      // int_a^b (c0 + c1 s) slope ds
      acc += slope * (c0 * (b - a) + 0.5 * c1 * (b * b - a * a));
    }
  }
  return acc;
}

PathEnsemble simulate(const MfgModel& model, const EmpiricalPathMeasure* mu,
                      const RelaxedControlGrid& Q, const SingularControl& Z,
                      const std::vector<double>& grid, int n_paths, std::uint64_t seed,
                      int threads) {
  Q.validate();
  if (grid.size() < 2 || grid.front() != 0.0)
    throw std::invalid_argument("simulate: grid must start at 0 with >= 2 points");
  if (n_paths < 1) throw std::invalid_argument("simulate: n_paths must be positive");
  const double horizon = grid.back();

  PathEnsemble ens;
  ens.seed = seed;
  ens.grid = grid;
  for (double tj : Z.path.jump_times())
    if (tj <= horizon) ens.grid.push_back(tj);
  std::sort(ens.grid.begin(), ens.grid.end());
  ens.grid.erase(std::unique(ens.grid.begin(), ens.grid.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-13; }),
                 ens.grid.end());
  for (double tj : Z.path.jump_times())
    if (tj <= horizon) ens.jump_times.push_back(tj);

  const std::size_t K = ens.grid.size();
  auto moments = grid_moments(mu, ens.grid, model);

  // exact cumulative int c dZ at grid points, and jump increments
  std::vector<double> S(K), jumpinc(K, 0.0);
  std::vector<char> isjump(K, 0);
  for (std::size_t k = 0; k < K; ++k) S[k] = stieltjes(model.c, Z, ens.grid[k]);
  {
    std::size_t j = 0;
    for (std::size_t k = 0; k < K && j < ens.jump_times.size(); ++k) {
      if (std::abs(ens.grid[k] - ens.jump_times[j]) < 1e-13) {
        isjump[k] = 1;
        auto [c0, c1] = model.c.affine_in_t();
        jumpinc[k] = (c0 + c1 * ens.grid[k]) * jump_of(Z.path, ens.grid[k]);
        ++j;
      }
    }
  }

  const std::size_t J = Q.u_grid.size();
  ens.paths.reserve(n_paths);
  ens.pre_jump.assign(n_paths, {});
  std::vector<std::vector<State>> values(n_paths);

  auto run_path = [&](int i) {
    NormalStream rng(splitmix64(seed ^ (0x632BE59BD9B4E019ull * (i + 1))));
    std::vector<State> vals;
    vals.reserve(K);
    std::vector<double>& pre = ens.pre_jump[i];
    double x = 0.0;
    if (isjump[0]) {  // initial jump at t = 0
      pre.push_back(x);
      x += jumpinc[0];
    }
    vals.push_back({x});
    for (std::size_t k = 1; k < K; ++k) {
      double t0 = ens.grid[k - 1], t1 = ens.grid[k], dt = t1 - t0;
      int cell = Q.cell_index(t0);
      double bbar = 0.0, abar = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        double w = Q.weights[cell][j];
        if (w == 0.0) continue;
        double u = Q.u_grid[j];
        bbar += w * model.b(t0, x, moments[k - 1], u);
        double s = model.sigma(t0, x, moments[k - 1], u);
        abar += w * s * s;
      }
      double xi = rng.next();  // drawn unconditionally: stable stream layout
      x += bbar * dt + std::sqrt(abar * dt) * xi;
      // continuous singular part over (t0, t1]
      x += (S[k] - jumpinc[k]) - S[k - 1];
      if (isjump[k]) {
        pre.push_back(x);
        x += jumpinc[k];
      }
      vals.push_back({x});
    }
    values[i] = std::move(vals);
  };

  if (threads <= 1) {
    for (int i = 0; i < n_paths; ++i) run_path(i);
  } else {
    std::vector<std::thread> pool;
    int nt = std::min(threads, n_paths);
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < n_paths; i += nt) run_path(i);
      });
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < n_paths; ++i)
    ens.paths.emplace_back(horizon, 1, PathKind::PiecewiseConstant, ens.grid,
                           std::move(values[i]));
  return ens;
}

DecompResult decompose(const CadlagPath& x, const SingularControl& z, const Coeff& c,
                       const std::vector<double>* pre_jump) {
  std::vector<double> grid = x.breakpoints();
  if (grid.empty() || grid.front() != 0.0) grid.insert(grid.begin(), 0.0);
  std::vector<double> yvals;
  for (double t : grid) yvals.push_back(x.eval1(t) - stieltjes(c, z, t));
  auto [c0, c1] = c.affine_in_t();
  double max_res = 0.0;
  auto zjumps = z.path.jump_times();
  for (std::size_t j = 0; j < zjumps.size(); ++j) {
    double tj = zjumps[j];
    if (tj > x.horizon()) break;
    double xpre = (pre_jump && j < pre_jump->size()) ? (*pre_jump)[j] : x.left_limit1(tj);
    double dx = x.eval1(tj) - xpre;
    double dz = jump_of(z.path, tj);
    max_res = std::max(max_res, std::abs(dx - (c0 + c1 * tj) * dz));
  }
  std::vector<State> states;
  for (double v : yvals) states.push_back({v});
  CadlagPath y(x.horizon(), 1, PathKind::PiecewiseLinear, std::move(grid), std::move(states));
  return {std::move(y), max_res};
}

CadlagPath recompose(const CadlagPath& y, const SingularControl& z, const Coeff& c) {
  std::vector<double> grid = y.breakpoints();
  std::vector<State> vals;
  for (double t : grid) vals.push_back({y.eval1(t) + stieltjes(c, z, t)});
  return CadlagPath(y.horizon(), 1, PathKind::PiecewiseConstant, std::move(grid),
                    std::move(vals));
}

std::vector<TestFunction> phi_dictionary() {
  std::vector<TestFunction> out;
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    TestFunction f;
    f.name = "tanh_" + std::to_string(s).substr(0, 3);
    f.phi = [s](double x) { return std::tanh(x / s); };
    f.dphi = [s](double x) {
      double c = std::cosh(x / s);
      return 1.0 / (s * c * c);
    };
    f.d2phi = [s](double x) {
      double c = std::cosh(x / s);
      return -2.0 * std::tanh(x / s) / (s * s * c * c);
    };
    out.push_back(std::move(f));
  }
  for (double ctr : {-1.0, 0.0, 1.0}) {
    TestFunction f;
    f.name = "bump_" + std::to_string(ctr).substr(0, 4);
    f.phi = [ctr](double x) { return std::exp(-0.5 * (x - ctr) * (x - ctr)); };
    f.dphi = [ctr](double x) {
      return -(x - ctr) * std::exp(-0.5 * (x - ctr) * (x - ctr));
    };
    f.d2phi = [ctr](double x) {
      double d = x - ctr;
      return (d * d - 1.0) * std::exp(-0.5 * d * d);
    };
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<PathFunctional> functional_dictionary() {
  std::vector<PathFunctional> out;
  out.push_back({"one", [](const CadlagPath&, double) { return 1.0; }});
  out.push_back({"clip_xs", [](const CadlagPath& x, double s) {
                   return std::clamp(x.eval1(s), -1.0, 1.0);
                 }});
  out.push_back({"clip_runmax", [](const CadlagPath& x, double s) {
                   double m = x.eval1(0.0);
                   for (double t : x.breakpoints()) {
                     if (t > s) break;
                     m = std::max(m, x.eval1(t));
                   }
                   m = std::max(m, x.eval1(s));
                   return std::clamp(m, -1.0, 1.0);
                 }});
  return out;
}

MartingaleResidual martingale_residual(const PathEnsemble& ens, const TestFunction& phi,
                                       const MfgModel& model, const EmpiricalPathMeasure* mu,
                                       const RelaxedControlGrid& Q, const SingularControl& Z,
                                       double s, double t, const PathFunctional& F) {
  const auto& grid = ens.grid;
  auto snap = [&](double v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < grid.size(); ++k)
      if (std::abs(grid[k] - v) < std::abs(grid[best] - v)) best = k;
    return best;
  };
  std::size_t ks = snap(s), kt = snap(t);
  if (ks >= kt) throw std::invalid_argument("martingale_residual: need s < t on the grid");
  auto moments = grid_moments(mu, grid, model);

  // cumulative int c dZ and jump increments along the grid
  auto [c0, c1] = model.c.affine_in_t();
  std::vector<double> Svals(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) Svals[k] = stieltjes(model.c, Z, grid[k]);
  std::vector<int> jump_at(grid.size(), -1);
  for (std::size_t j = 0; j < ens.jump_times.size(); ++j)
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (std::abs(grid[k] - ens.jump_times[j]) < 1e-13) jump_at[k] = static_cast<int>(j);

  const std::size_t J = Q.u_grid.size();
  double sum = 0.0, sum2 = 0.0;
  const int n = static_cast<int>(ens.paths.size());
  for (int i = 0; i < n; ++i) {
    const auto& vals = ens.paths[i].values();
    double Fv = F.eval(ens.paths[i], grid[ks]);
    double inc = phi.phi(vals[kt][0]) - phi.phi(vals[ks][0]);
    for (std::size_t k = ks; k < kt; ++k) {
      double x = vals[k][0];
      double dt = grid[k + 1] - grid[k];
      int cell = Q.cell_index(grid[k]);
      double gen = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        double w = Q.weights[cell][j];
        if (w == 0.0) continue;
        double u = Q.u_grid[j];
        double sg = model.sigma(grid[k], x, moments[k], u);
        gen += w * (model.b(grid[k], x, moments[k], u) * phi.dphi(x) +
                    0.5 * sg * sg * phi.d2phi(x));
      }
      inc -= gen * dt;
      // continuous part of int phi'(X) c dZ over (t_k, t_{k+1}]
      double jmp = jump_at[k + 1] >= 0
                       ? (c0 + c1 * grid[k + 1]) * jump_of(Z.path, grid[k + 1])
                       : 0.0;
      inc -= phi.dphi(x) * ((Svals[k + 1] - jmp) - Svals[k]);
    }
    for (std::size_t k = ks + 1; k <= kt; ++k) {
      int j = jump_at[k];
      if (j < 0) continue;
      double xpre = ens.pre_jump[i][static_cast<std::size_t>(j)];
      double xpost = vals[k][0];
      double dx = xpost - xpre;
      // phi'(X_{s-}) c dZ (realized as the observed jump) plus the jump
      // compensation term: together they cancel against phi(X_s)-phi(X_{s-})
      inc -= phi.dphi(xpre) * dx;
      inc -= phi.phi(xpost) - phi.phi(xpre) - phi.dphi(xpre) * dx;
    }
    double sample = inc * Fv;
    sum += sample;
    sum2 += sample * sample;
  }
  MartingaleResidual r;
  r.estimate = sum / n;
  double var = std::max(0.0, sum2 / n - r.estimate * r.estimate);
  r.std_error = std::sqrt(var / n);
  return r;
}

double cost(const EmpiricalPathMeasure* mu, const PathEnsemble& ens,
            const RelaxedControlGrid& Q, const SingularControl& Z, const MfgModel& model) {
  const auto& grid = ens.grid;
  auto moments = grid_moments(mu, grid, model);
  const std::size_t J = Q.u_grid.size();
  double singular = stieltjes(model.h, Z, grid.back());
  double acc = 0.0;
  for (const auto& path : ens.paths) {
    const auto& vals = path.values();
    double run = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      int cell = Q.cell_index(std::min(grid[k], Q.horizon() - 1e-12));
      double fbar = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        double w = Q.weights[cell][j];
        if (w == 0.0) continue;
        fbar += w * model.f(grid[k], vals[k][0], moments[k], Q.u_grid[j]);
      }
      if (k > 0) run += 0.5 * (prev + fbar) * (grid[k] - grid[k - 1]);
      prev = fbar;
    }
    double terminal = model.g(grid.back(), vals.back()[0], moments.back(), 0.0);
    double total = run + terminal + singular;
    if (!std::isfinite(total)) throw std::runtime_error("cost: non-finite evaluation");
    acc += total;
  }
  return acc / ens.paths.size();
}

bool AssumptionReport::all_ok() const {
  for (const auto& c : checks)
    if (!c.ok) return false;
  return true;
}

AssumptionReport validate_assumptions(const MfgModel& model, int samples, double x_range,
                                      std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ut(0.0, model.T), ux(-x_range, x_range),
      uu(model.u_min, model.u_max), um(-x_range, x_range),
      up(0.0, std::min(model.moment_cap, std::pow(x_range, model.p)));
  AssumptionReport rep;
  double max_b = 0.0, max_a = 0.0, max_lip = 0.0, worst_f = 1e300, worst_g = 1e300;
  double max_mq = 0.0;
  const double dx = 1e-4;
  for (int i = 0; i < samples; ++i) {
    double t = ut(gen), x = ux(gen), u = uu(gen);
    Moments nu{um(gen), up(gen)};
    double bv = model.b(t, x, nu, u);
    double sv = model.sigma(t, x, nu, u);
    max_b = std::max(max_b, std::abs(bv));
    max_a = std::max(max_a, sv * sv);
    max_lip = std::max(
        max_lip, std::abs(model.b(t, x + dx, nu, u) - bv) / dx);
    max_lip = std::max(
        max_lip, std::abs(model.sigma(t, x + dx, nu, u) - sv) / dx);
    double fb = model.C4 * (1.0 + std::pow(std::abs(x), model.p) +
                            std::pow(std::abs(u), model.p) + nu.p_moment);
    worst_f = std::min(worst_f, fb - std::abs(model.f(t, x, nu, u)));
    double gv = model.g(model.T, x, nu, 0.0);
    double gup = model.C3 * (1.0 + std::pow(std::abs(x), model.pbar) + nu.p_moment);
    double glo = -model.C2 * (1.0 + std::pow(std::abs(x), model.pbar) + nu.p_moment);
    worst_g = std::min(worst_g, std::min(gup - gv, gv - glo));
    // measure-Lipschitz quotient via a mean shift
    Moments nu2{nu.mean + 0.1, nu.p_moment};
    for (const Coeff* phi : {&model.b, &model.sigma, &model.f}) {
      double q = std::abs((*phi)(t, x, nu2, u) - (*phi)(t, x, nu, u)) / 0.1;
      max_mq = std::max(max_mq, q);
    }
  }
  double min_c = 1e300, max_hstep = 0.0;
  double hprev = model.h(0.0, 0.0, {}, 0.0);
  for (int i = 0; i <= 200; ++i) {
    double t = model.T * i / 200.0;
    min_c = std::min(min_c, model.c(t, 0.0, {}, 0.0));
    double hv = model.h(t, 0.0, {}, 0.0);
    max_hstep = std::max(max_hstep, std::abs(hv - hprev));
    hprev = hv;
  }
  rep.checks.push_back({"A1 bounds", max_b <= model.C1 && max_a <= model.C1,
                        model.C1 - std::max(max_b, max_a), "sup|b|, sup|a| vs C1"});
  rep.checks.push_back({"A1 x-Lipschitz", max_lip <= model.C1, model.C1 - max_lip,
                        "max difference quotient in x"});
  rep.checks.push_back({"A3 f growth", worst_f >= 0.0, worst_f, "C4 envelope margin"});
  rep.checks.push_back({"A3 g growth", worst_g >= 0.0, worst_g, "C2/C3 envelope margin"});
  rep.checks.push_back({"A4 c positive", min_c > 0.0, min_c, "min c(t) on [0,T]"});
  rep.checks.push_back({"A4 h continuous", max_hstep <= 0.5, 0.5 - max_hstep,
                        "max step of h on the sampling grid"});
  double mbound = model.C5 * (1.0 + model.Lmod);
  rep.checks.push_back({"A5 measure Lipschitz", max_mq <= mbound, mbound - max_mq,
                        "mean-shift quotient vs C5(1+L)"});
  rep.checks.push_back({"A6 compact U", model.u_max >= model.u_min,
                        model.u_max - model.u_min, "control interval"});
  return rep;
}

}  // namespace mfgsc
