#pragma once

#include "mfgsc/dynamics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfgsc {

struct Candidate {
  RelaxedControlGrid Q;
  SingularControl Z;
  std::string label;
};

struct CandidateFamily {
  std::vector<Candidate> candidates;
  void validate() const;  // throws on invalid candidates / empty family
};

// Finite parameterized search space: Dirac relaxed controls piecewise
// constant on `knots` uniform intervals over the u_levels grid (plus
// optional two-point mixtures), crossed with singular candidates (zero,
// equal-height staircases at jump_times scaled to each total mass in
// masses, optional ramps), fuel-capped when fuel is set. The zero singular
// control comes first so candidate 0 is always the uncontrolled-Z option.
struct FamilySpec {
  int knots = 1;
  std::vector<double> u_levels{0.0};
  bool mixtures = false;
  std::vector<double> jump_times;
  std::vector<double> masses;
  bool ramps = false;
  std::optional<double> fuel;
};
CandidateFamily build_family(const MfgModel& model, const FamilySpec& spec);

struct BestResponse {
  int index = -1;
  double cost = 0.0;
  std::vector<std::pair<std::string, double>> table;
};

// Evaluates every candidate with common random numbers (identical seeds
// across candidates); ties broken toward the earliest candidate index.
BestResponse best_response(const MfgModel& model, const EmpiricalPathMeasure* mu,
                           const CandidateFamily& family, const std::vector<double>& grid,
                           int n_paths, std::uint64_t seed, int threads = 1);

struct IterationRecord {
  int iter;
  double gap;
  double cost;
};

struct SolveConfig {
  double tol = 1e-3;
  int max_iter = 20;
  double damping = 0.5;  // lambda in (0,1]
  int n_paths = 500;
  int grid_steps = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  double p = 1.0;          // Wasserstein order for gaps and certificates
  int cert_paths = 128;    // subsample size for the path-space certificate
  int cert_grid = 64;      // M1 lattice for the certificate
  int gap_time_points = 21;
};

struct MfgSolution {
  EmpiricalPathMeasure mu;   // mean field measure at acceptance
  Candidate control;
  double J = 0.0;
  std::vector<IterationRecord> trace;
  bool converged = false;
  double certificate = 0.0;  // path-space W_p between mu* and Law(X | BR(mu*))
  std::vector<std::pair<std::string, double>> final_table;
};

// Damped fixed-point iteration mu_{k+1} = pool((1-lambda) mu_k,
// lambda Law(X under best response)); gap = max over grid times of the
// marginal W_p. Non-convergence is flagged, never silent.
MfgSolution solve_fixed_point(const MfgModel& model, const CandidateFamily& family,
                              const SolveConfig& cfg);

struct GeneralSolveResult {
  std::vector<double> fuel_schedule;
  std::vector<MfgSolution> solutions;
  std::vector<double> fuel_used;    // Z*_T per m
  std::vector<double> fuel_moment;  // |Z*_T|^pbar per m
  std::vector<double> successive_gaps;  // path-space W_p between consecutive mu*
  bool fuel_saturated = false;
};

// Fuel-truncation outer loop: solves per m with every singular candidate
// truncated at m.
GeneralSolveResult solve_general(const MfgModel& model, const CandidateFamily& family,
                                 const std::vector<double>& fuel_schedule,
                                 const SolveConfig& cfg);

struct MvCandidateRecord {
  std::string label;
  double cost;
  bool inner_converged;
  int inner_iters;
};

struct MvSolution {
  MfgSolution solution;
  std::vector<MvCandidateRecord> table;
};

// McKean-Vlasov variant: per candidate, an inner loop makes Law(X)
// consistent with that candidate before costing; outer argmin over the
// family.
MvSolution solve_mckean_vlasov(const MfgModel& model, const CandidateFamily& family,
                               const SolveConfig& cfg, int inner_max = 25,
                               double inner_tol = 1e-9);

struct ApproxRow {
  int n;
  double w_gap;     // W_p(mu^[n], mu*), subsampled path-space
  double dJ;        // |J^[n] - J*|
  double mean_dm1;  // sample mean of d_M1(X^[n], X)
  double se_dm1;
};

struct ApproxStudy {
  std::vector<ApproxRow> rows;
  MfgSolution base;
};

// Mollified-control approximation study on [0, T+eps]: per n, direction 1
// re-solves the MFG with every singular candidate mollified; direction 2
// simulates under mollify(Z*, n) against mu* with common random numbers.
// Requires g = h = 0 and 1/min(n) <= eps.
ApproxStudy approx_study(const MfgModel& model, const CandidateFamily& family,
                         const std::vector<int>& ns, const SolveConfig& cfg,
                         int m1_grid = 256);

}  // namespace mfgsc
