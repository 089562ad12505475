#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mfgsc {

// State in R^d. Most of the solver works with d == 1.
using State = std::vector<double>;

enum class PathKind {
  PiecewiseConstant,  // right-continuous step function
  PiecewiseLinear,    // continuous on [0,T], linear between breakpoints
};

// A cadlag path on the extended line: x_t = 0 for t < 0, x_t = x_T for
// t > T. Finitely many breakpoints, strictly increasing, all in [0,T].
//
// Piecewise-constant paths take value values[i] on [breakpoints[i],
// breakpoints[i+1]) and 0 before the first breakpoint. Piecewise-linear
// paths interpolate between breakpoints and extend constantly to 0 and T;
// a nonzero value at t = 0 is an initial jump (x_{0-} = 0).
class CadlagPath {
 public:
  CadlagPath();  // zero path on [0,1], d = 1
  CadlagPath(double horizon, int dim, PathKind kind,
             std::vector<double> breakpoints, std::vector<State> values);

  static CadlagPath zero(double horizon, int dim = 1);
  static CadlagPath constant(double horizon, double value);
  // Scalar step of the given height at jump_time.
  static CadlagPath step(double horizon, double jump_time, double height);
  // Scalar staircase: cumulative jumps (time_i, height_i).
  static CadlagPath staircase(double horizon,
                              const std::vector<std::pair<double, double>>& jumps);
  // Scalar continuous ramp from 0 to height over [t0, t1].
  static CadlagPath ramp(double horizon, double t0, double t1, double height);

  double horizon() const { return horizon_; }
  int dim() const { return dim_; }
  PathKind kind() const { return kind_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<State>& values() const { return values_; }

  State eval(double t) const;
  State left_limit(double t) const;
  // Scalar accessors, valid when dim() == 1.
  double eval1(double t) const;
  double left_limit1(double t) const;

  // Jump times on [0,T], including t = 0 when x_0 != 0.
  std::vector<double> jump_times() const;
  bool nondecreasing() const;  // componentwise
  double sup_norm() const;     // sup_{t in [0,T]} |x_t| (Euclidean)

  // Same-kind pointwise addition on a shared horizon.
  CadlagPath operator+(const CadlagPath& other) const;

  std::string describe() const;

 private:
  double horizon_;
  int dim_;
  PathKind kind_;
  std::vector<double> breakpoints_;
  std::vector<State> values_;
};

// The completed (thin) graph of a path: an ordered polyline in R^d x [0,T]
// containing, for each jump time t, the segment [x_{t-}, x_t] x {t}.
struct GraphVertex {
  State z;
  double t;
};

struct CompletedGraph {
  std::vector<GraphVertex> vertices;
};

CompletedGraph completed_graph(const CadlagPath& x);

// Euclidean distance from p to the segment [a, b].
double segment_distance(const State& p, const State& a, const State& b);
double segment_distance(double p, double a, double b);

struct M1Result {
  double value;
  double mesh;  // max Chebyshev gap between consecutive lattice samples
};

// M1 metric approximated by dynamic programming over the two completed
// graphs discretized to about N vertices each (d == 1 only). The value is
// within O(mesh) above the true infimum and never below it by more than
// the mesh.
M1Result m1_distance_full(const CadlagPath& x, const CadlagPath& y, int grid);
double m1_distance(const CadlagPath& x, const CadlagPath& y, int grid);

// Oscillation around t on the window [0 v (t-delta), (t+delta) ^ T].
double oscillation(const CadlagPath& x, double t, double delta);

// Strong M1 oscillation sup_t sup_{t1<t2<t3} |x_{t2} - [x_{t1}, x_{t3}]|
// over delta-windows on the extended line (so the initial jump and the
// frozen tail participate). Vanishes on monotone scalar paths.
double strong_m1_oscillation(const CadlagPath& x, double delta);

// strong_m1_oscillation plus sup_{0 <= s < t <= delta} |x_s - [0, x_t]|.
double modified_oscillation(const CadlagPath& x, double delta);

struct CompactnessReport {
  double sup_norm = 0.0;
  std::vector<std::pair<double, double>> oscillation_row;  // (delta, sup w~_s)
  bool consistent = false;
  double monotone_tol = 1e-9;
  double absolute_tol = 1e-6;
  double decay_factor = 0.25;
};

// Relative-compactness diagnostic for a finite family: uniform sup-norm
// bound plus a decreasing modified-oscillation row along the delta
// schedule. Verdict "consistent" when the row is nonincreasing and its
// final entry is small in absolute terms or relative to the first.
CompactnessReport compactness_diagnostic(const std::vector<CadlagPath>& paths,
                                         const std::vector<double>& delta_schedule);

double uniform_distance(const CadlagPath& x, const CadlagPath& y);
double lp_distance(const CadlagPath& x, const CadlagPath& y, double alpha);

}  // namespace mfgsc
