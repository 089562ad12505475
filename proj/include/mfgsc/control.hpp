#pragma once

#include "mfgsc/cadlag.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mfgsc {

// Nondecreasing scalar cadlag path Z with Z_t = 0 for t < 0 and Z_t = Z_T
// for t > T, optionally carrying a fuel bound m (Z_T <= m).
struct SingularControl {
  CadlagPath path;
  std::optional<double> fuel;

  static SingularControl zero(double horizon);
  static SingularControl from_path(CadlagPath p, std::optional<double> m = std::nullopt);

  double total_mass() const { return path.eval1(path.horizon()); }
};

struct ControlViolation {
  double time;
  std::string what;
};

// Diagnostic: monotonicity, convention and fuel violations with locations.
std::vector<ControlViolation> validate_singular(const SingularControl& z);

// Finite-fuel truncation: Z^m_t = Z_t for t < tau, = m for t >= tau, with
// tau = inf{t : Z_t > m}. Equals the pointwise minimum with m for
// nondecreasing Z; an exact hit Z_t = m is a no-op.
SingularControl truncate_fuel(const SingularControl& z, double m);

// Moving-average mollification Z^[n]_t = n * int_{t-1/n}^t Z_s ds on the
// extended horizon [0, T+eps]; exact for piecewise-constant Z, refit to
// piecewise-linear within 1e-9 sup error for piecewise-linear Z. Requires
// 1/n <= eps.
SingularControl mollify(const SingularControl& z, int n, double eps);

// Time-grid x control-grid discretization of a relaxed control Q_t(du)dt:
// t_grid has K+1 cell boundaries spanning [0,T]; weights has K
// row-stochastic rows over u_grid. Tail controls give the Dirac
// restrictions outside [0,T].
struct RelaxedControlGrid {
  std::vector<double> t_grid;
  std::vector<double> u_grid;
  std::vector<std::vector<double>> weights;
  double u_tail0 = 0.0;
  double u_tailT = 0.0;

  void validate() const;  // throws std::invalid_argument on violation
  double horizon() const { return t_grid.back(); }
  int cells() const { return static_cast<int>(t_grid.size()) - 1; }
  int cell_index(double t) const;
  bool dirac() const;  // every row one-hot

  static RelaxedControlGrid dirac_constant(std::vector<double> t_grid, double u);
  // Dirac at a piecewise-constant open-loop control: u_of_t evaluated at
  // cell midpoints.
  static RelaxedControlGrid dirac_piecewise(std::vector<double> t_grid,
                                            const std::function<double(double)>& u_of_t);
  // Average of phi(u) under row k.
  double aggregate(int k, const std::function<double(double)>& phi) const;
};

struct WeightedAtom {
  double t;
  double u;
  double w;
};

// Bins (t,u,w) atoms into a RelaxedControlGrid; the time marginal must be
// uniform (Lebesgue-compatible) across cells within 1e-9.
RelaxedControlGrid disintegrate(const std::vector<WeightedAtom>& atoms,
                                std::vector<double> t_grid, std::vector<double> u_grid,
                                double u_tail0, double u_tailT);

// Inverse of disintegrate: cell-midpoint atoms with weights
// w[k][j] * dt_k / T, summing to 1.
std::vector<WeightedAtom> flatten(const RelaxedControlGrid& q);

}  // namespace mfgsc
