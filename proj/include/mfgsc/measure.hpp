#pragma once

#include "mfgsc/cadlag.hpp"
#include "mfgsc/control.hpp"

#include <functional>
#include <vector>

namespace mfgsc {

// Finite-support probability measure on R^d (or on (t,u) pairs encoded as
// d = 2 atoms). Empty weights mean uniform.
struct EmpiricalMeasure {
  std::vector<State> atoms;
  std::vector<double> weights;

  static EmpiricalMeasure uniform(std::vector<State> atoms);
  static EmpiricalMeasure scalar(const std::vector<double>& points);
  void validate() const;  // throws std::invalid_argument
  bool is_uniform() const { return weights.empty(); }
};

struct EmpiricalPathMeasure {
  std::vector<CadlagPath> ensemble;
  std::vector<double> weights;  // empty => uniform

  static EmpiricalPathMeasure uniform(std::vector<CadlagPath> paths);
};

using GroundMetric = std::function<double(const State&, const State&)>;

// Minimal total cost over assignments for a square cost matrix (exact
// Hungarian / Jonker-Volgenant, O(n^3)).
double assignment_cost(const std::vector<std::vector<double>>& cost);

// Exact p-Wasserstein between finite measures. Equal-size uniform measures
// are solved as an assignment problem; rational non-uniform weights are
// reduced to the uniform case by atom replication up to replication_cap.
double wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     const GroundMetric& ground, double p, int replication_cap = 512);
// Euclidean ground metric; d == 1 uniform equal-size inputs use the exact
// sorted-matching fast path.
double wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                     int replication_cap = 512);

// Wasserstein on path space with d_M1 ground metric at lattice size grid.
double path_wasserstein(const EmpiricalPathMeasure& mu, const EmpiricalPathMeasure& nu,
                        double p, int grid);

EmpiricalMeasure marginal(const EmpiricalPathMeasure& mu, double t);

// Metric d_U on relaxed controls: the [0,T] Wasserstein term on normalized
// (t,u) atoms with ground metric max(|t1-t2|/T, |u1-u2|), plus the tail
// series (Dirac tails; truncated at 50 terms, weight < 1e-15 beyond).
double relaxed_metric(const RelaxedControlGrid& q1, const RelaxedControlGrid& q2, double p,
                      int replication_cap = 512);

}  // namespace mfgsc
