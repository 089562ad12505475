#pragma once

#include "mfgsc/cadlag.hpp"
#include "mfgsc/control.hpp"
#include "mfgsc/measure.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mfgsc {

// Moment functionals of a state marginal through which coefficients may
// depend on the mean field measure.
struct Moments {
  double mean = 0.0;
  double p_moment = 0.0;  // capped p-th absolute moment
};

Moments compute_moments(const EmpiricalMeasure& nu, double p, double cap);

// Named coefficient template with numeric parameters; no code evaluation.
// Catalog:
//   zero             -> 0
//   constant         -> a
//   affine           -> a + b*t
//   linear_clamped   -> clamp(a + b*x + c*u + d*mean + e*t, -B, B), params {a,b,c,d,e,B}
//   quadratic_clamped-> clamp(a + b*x + c*x^2, -B, B), params {a,b,c,B}
//   quad_u           -> w*(u - a - b*mean)^2, params {a,b,w}
//   quad_x           -> w*(x - a - b*mean)^2, params {a,b,w}
//   power_x          -> w*|x|^a, params {a,w}
struct Coeff {
  std::string kind = "zero";
  std::vector<double> params;

  double operator()(double t, double x, const Moments& nu, double u) const;
  static Coeff zero() { return {"zero", {}}; }
  static Coeff constant(double v) { return {"constant", {v}}; }
  // affine-in-t representation (c0, c1) for kinds constant/affine; throws
  // for other kinds (needed for exact Stieltjes integration)
  std::pair<double, double> affine_in_t() const;
};

struct MfgModel {
  Coeff b = Coeff::zero();
  Coeff sigma = Coeff::zero();
  Coeff c = Coeff::constant(1.0);
  Coeff f = Coeff::zero();
  Coeff g = Coeff::zero();
  Coeff h = Coeff::zero();
  double u_min = -1.0, u_max = 1.0;
  double T = 1.0, eps = 0.25;
  double p = 1.0, pbar = 2.0;
  double C1 = 10.0, C2 = 10.0, C3 = 10.0, C4 = 10.0, C5 = 10.0, Lmod = 1.0;
  double moment_cap = 100.0;
};

struct PathEnsemble {
  std::vector<CadlagPath> paths;       // piecewise-constant on the grid
  std::vector<double> grid;            // includes all Z jump times
  std::vector<double> jump_times;      // Z jump times
  std::vector<std::vector<double>> pre_jump;  // per path: state just before each jump
  std::uint64_t seed = 0;

  EmpiricalPathMeasure measure() const { return EmpiricalPathMeasure::uniform(paths); }
};

std::vector<double> uniform_grid(double horizon, int steps);

// Euler-Maruyama with aggregated relaxed-control coefficients
// (bbar = sum_j w b(.,u_j), abar = sum_j w sigma^2) and exact singular
// increments c(t) dZ applied at Z's jump times (injected into the grid,
// diffusion first, then the jump at the same timestamp). mu == nullptr
// means the coefficients see zero moments. Deterministic given seed.
PathEnsemble simulate(const MfgModel& model, const EmpiricalPathMeasure* mu,
                      const RelaxedControlGrid& Q, const SingularControl& Z,
                      const std::vector<double>& grid, int n_paths, std::uint64_t seed,
                      int threads = 1);

// Cumulative Stieltjes integral int_0^t c(s) dZ_s, exact for affine c and
// piecewise Z.
double stieltjes(const Coeff& c, const SingularControl& z, double t);

struct DecompResult {
  CadlagPath y;               // continuous (piecewise-linear) part
  double max_jump_residual;   // max over Z jump times of |dX - c dZ|
};

// Y_t = X_t - int_0^t c dZ. The jump residual compares X's jumps with
// c(t) dZ_t; pre_jump (from a simulated ensemble) supplies exact left
// limits when diffusion is present, otherwise X's own left limits are used.
DecompResult decompose(const CadlagPath& x, const SingularControl& z, const Coeff& c,
                       const std::vector<double>* pre_jump = nullptr);
CadlagPath recompose(const CadlagPath& y, const SingularControl& z, const Coeff& c);

// Fixed versioned dictionaries of smooth bounded test functions and
// bounded path functionals.
struct TestFunction {
  std::string name;
  std::function<double(double)> phi, dphi, d2phi;
};
std::vector<TestFunction> phi_dictionary();

struct PathFunctional {
  std::string name;
  std::function<double(const CadlagPath&, double)> eval;  // bounded functional of X up to s
};
std::vector<PathFunctional> functional_dictionary();

struct MartingaleResidual {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of E[(M_t - M_s) F(X up to s)] for the controlled
// martingale problem, with exact jump compensation at Z's jump times.
MartingaleResidual martingale_residual(const PathEnsemble& ens, const TestFunction& phi,
                                       const MfgModel& model, const EmpiricalPathMeasure* mu,
                                       const RelaxedControlGrid& Q, const SingularControl& Z,
                                       double s, double t, const PathFunctional& F);

// Monte Carlo cost: mean over paths of the relaxed running cost, terminal
// cost and singular cost (trapezoid in time, exact Stieltjes in Z).
double cost(const EmpiricalPathMeasure* mu, const PathEnsemble& ens,
            const RelaxedControlGrid& Q, const SingularControl& Z, const MfgModel& model);

struct AssumptionCheck {
  std::string name;
  bool ok = true;
  double margin = 0.0;  // positive = satisfied with room
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_ok() const;
};

// Samples (t, x, nu-moments, u) over configured ranges and checks the
// standing boundedness/growth/positivity/Lipschitz conditions.
AssumptionReport validate_assumptions(const MfgModel& model, int samples = 2000,
                                      double x_range = 3.0, std::uint64_t seed = 1);

}  // namespace mfgsc
