#include "mfgsc/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfgsc {

void CandidateFamily::validate() const {
  if (candidates.empty()) throw std::invalid_argument("CandidateFamily: empty family");
  for (const auto& c : candidates) {
    c.Q.validate();
    auto v = validate_singular(c.Z);
    if (!v.empty())
      throw std::invalid_argument("CandidateFamily: invalid singular candidate '" + c.label +
                                  "': " + v.front().what);
  }
}

CandidateFamily build_family(const MfgModel& model, const FamilySpec& spec) {
  if (spec.knots < 1) throw std::invalid_argument("build_family: knots must be positive");
  if (spec.u_levels.empty()) throw std::invalid_argument("build_family: no control levels");
  const double T = model.T;
  std::vector<double> knot_grid = uniform_grid(T, spec.knots);

  // regular candidates: Dirac at piecewise-constant controls, full product
  // over knots; then optional constant two-point mixtures
  struct Reg {
    RelaxedControlGrid Q;
    std::string label;
  };
  std::vector<Reg> regs;
  const std::size_t L = spec.u_levels.size();
  std::size_t total = 1;
  for (int k = 0; k < spec.knots; ++k) {
    total *= L;
    if (total > 4096) throw std::invalid_argument("build_family: regular family too large");
  }
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    std::vector<double> us(spec.knots);
    std::string lab = "u(";
    for (int k = 0; k < spec.knots; ++k) {
      us[k] = spec.u_levels[c % L];
      c /= L;
      lab += (k ? "," : "") + std::to_string(us[k]).substr(0, 5);
    }
    lab += ")";
    auto q = RelaxedControlGrid::dirac_piecewise(
        knot_grid, [&](double t) {
          int k = std::clamp(static_cast<int>(t / (T / spec.knots)), 0, spec.knots - 1);
          return us[k];
        });
    regs.push_back({std::move(q), std::move(lab)});
  }
  if (spec.mixtures) {
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = a + 1; b < L; ++b) {
        RelaxedControlGrid q;
        q.t_grid = knot_grid;
        q.u_grid = {spec.u_levels[a], spec.u_levels[b]};
        std::sort(q.u_grid.begin(), q.u_grid.end());
        q.weights.assign(spec.knots, {0.5, 0.5});
        q.u_tail0 = q.u_grid.front();
        q.u_tailT = q.u_grid.front();
        q.validate();
        regs.push_back({std::move(q), "mix(" + std::to_string(spec.u_levels[a]).substr(0, 5) +
                                          "," + std::to_string(spec.u_levels[b]).substr(0, 5) +
                                          ")"});
      }
  }

  // singular candidates: zero first, then staircases and ramps per mass
  std::vector<std::pair<SingularControl, std::string>> sings;
  sings.emplace_back(SingularControl::zero(T), "Z=0");
  for (double mass : spec.masses) {
    if (mass <= 0.0) continue;
    if (!spec.jump_times.empty()) {
      std::vector<std::pair<double, double>> jumps;
      for (double tj : spec.jump_times)
        jumps.emplace_back(tj, mass / spec.jump_times.size());
      sings.emplace_back(SingularControl::from_path(CadlagPath::staircase(T, jumps)),
                         "stair(" + std::to_string(mass).substr(0, 5) + ")");
    }
    if (spec.ramps) {
      double t0 = spec.jump_times.empty() ? 0.0 : spec.jump_times.front();
      if (t0 >= T) t0 = 0.0;
      sings.emplace_back(SingularControl::from_path(CadlagPath::ramp(T, t0, T, mass)),
                         "ramp(" + std::to_string(mass).substr(0, 5) + ")");
    }
  }
  if (spec.fuel)
    for (auto& [z, lab] : sings) z = truncate_fuel(z, *spec.fuel);

  CandidateFamily fam;
  for (const auto& [z, zl] : sings)
    for (const auto& r : regs) fam.candidates.push_back({r.Q, z, r.label + " " + zl});
  fam.validate();
  return fam;
}

namespace {

// max over sample times of the scalar sorted-matching W_p between marginals
double marginal_gap(const EmpiricalPathMeasure& a, const EmpiricalPathMeasure& b,
                    double horizon, int time_points, double p) {
  double gap = 0.0;
  std::vector<double> xs(a.ensemble.size()), ys(b.ensemble.size());
  if (xs.size() != ys.size())
    throw std::invalid_argument("marginal_gap: ensemble sizes differ");
  for (int i = 0; i < time_points; ++i) {
    double t = horizon * i / (time_points - 1);
    for (std::size_t k = 0; k < xs.size(); ++k) xs[k] = a.ensemble[k].eval1(t);
    for (std::size_t k = 0; k < ys.size(); ++k) ys[k] = b.ensemble[k].eval1(t);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k)
      acc += std::pow(std::abs(xs[k] - ys[k]), p);
    gap = std::max(gap, std::pow(acc / xs.size(), 1.0 / p));
  }
  return gap;
}

EmpiricalPathMeasure subsample(const EmpiricalPathMeasure& mu, int count) {
  if (static_cast<int>(mu.ensemble.size()) <= count) return mu;
  std::vector<CadlagPath> out;
  // deterministic stride subsample
  double step = static_cast<double>(mu.ensemble.size()) / count;
  for (int i = 0; i < count; ++i)
    out.push_back(mu.ensemble[static_cast<std::size_t>(i * step)]);
  return EmpiricalPathMeasure::uniform(std::move(out));
}

MfgSolution solve_on_grid(const MfgModel& model, const CandidateFamily& family,
                          const SolveConfig& cfg, const std::vector<double>& grid) {
  family.validate();
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw std::invalid_argument("solve_fixed_point: damping must lie in (0,1]");
  const double horizon = grid.back();

  // mu_0: law of the uncontrolled state (Z = 0, first candidate's regular part)
  auto ens0 = simulate(model, nullptr, family.candidates[0].Q, SingularControl::zero(horizon),
                       grid, cfg.n_paths, cfg.seed, cfg.threads);
  EmpiricalPathMeasure mu = ens0.measure();

  MfgSolution sol;
  int n_new = std::max(1, static_cast<int>(std::lround(cfg.damping * cfg.n_paths)));
  double best_gap = 1e300;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    auto br = best_response(model, &mu, family, grid, cfg.n_paths, cfg.seed, cfg.threads);
    const Candidate& star = family.candidates[br.index];
    auto ens = simulate(model, &mu, star.Q, star.Z, grid, cfg.n_paths, cfg.seed, cfg.threads);
    EmpiricalPathMeasure next;
    if (n_new >= cfg.n_paths) {
      next = ens.measure();
    } else {
      std::vector<CadlagPath> pooled;
      for (int i = 0; i < cfg.n_paths - n_new; ++i) pooled.push_back(mu.ensemble[i]);
      for (int i = 0; i < n_new; ++i) pooled.push_back(ens.paths[i]);
      next = EmpiricalPathMeasure::uniform(std::move(pooled));
    }
    double gap = marginal_gap(mu, next, horizon, cfg.gap_time_points, cfg.p);
    sol.trace.push_back({it, gap, br.cost});
    mu = std::move(next);
    if (gap < best_gap) {
      best_gap = gap;
      sol.control = star;
      sol.J = br.cost;
      sol.final_table = br.table;
    }
    if (gap <= cfg.tol) {
      sol.converged = true;
      sol.control = star;
      sol.J = br.cost;
      sol.final_table = br.table;
      break;
    }
  }
  sol.mu = mu;
  // path-space certificate against the best response at acceptance
  auto brf = best_response(model, &mu, family, grid, cfg.n_paths, cfg.seed, cfg.threads);
  const Candidate& fin = family.candidates[brf.index];
  auto ensf = simulate(model, &mu, fin.Q, fin.Z, grid, cfg.n_paths, cfg.seed, cfg.threads);
  sol.certificate = path_wasserstein(subsample(mu, cfg.cert_paths),
                                     subsample(ensf.measure(), cfg.cert_paths), cfg.p,
                                     cfg.cert_grid);
  return sol;
}

}  // namespace

BestResponse best_response(const MfgModel& model, const EmpiricalPathMeasure* mu,
                           const CandidateFamily& family, const std::vector<double>& grid,
                           int n_paths, std::uint64_t seed, int threads) {
  family.validate();
  BestResponse br;
  bool any_finite = false;
  for (std::size_t i = 0; i < family.candidates.size(); ++i) {
    const Candidate& cand = family.candidates[i];
    double J;
    try {
      auto ens = simulate(model, mu, cand.Q, cand.Z, grid, n_paths, seed, threads);
      J = cost(mu, ens, cand.Q, cand.Z, model);
    } catch (const std::runtime_error&) {
      J = std::numeric_limits<double>::infinity();
    }
    br.table.emplace_back(cand.label, J);
    if (std::isfinite(J)) any_finite = true;
    if (br.index < 0 || J < br.cost) {  // strict: ties keep the earlier index
      br.index = static_cast<int>(i);
      br.cost = J;
    }
  }
  if (!any_finite) throw std::runtime_error("best_response: every candidate cost non-finite");
  return br;
}

MfgSolution solve_fixed_point(const MfgModel& model, const CandidateFamily& family,
                              const SolveConfig& cfg) {
  return solve_on_grid(model, family, cfg, uniform_grid(model.T, cfg.grid_steps));
}

GeneralSolveResult solve_general(const MfgModel& model, const CandidateFamily& family,
                                 const std::vector<double>& fuel_schedule,
                                 const SolveConfig& cfg) {
  for (std::size_t i = 1; i < fuel_schedule.size(); ++i)
    if (!(fuel_schedule[i] > fuel_schedule[i - 1]))
      throw std::invalid_argument("solve_general: fuel schedule must increase");
  GeneralSolveResult res;
  res.fuel_schedule = fuel_schedule;
  for (double m : fuel_schedule) {
    CandidateFamily fam;
    for (const auto& c : family.candidates)
      fam.candidates.push_back({c.Q, truncate_fuel(c.Z, m), c.label});
    auto sol = solve_fixed_point(model, fam, cfg);
    res.fuel_used.push_back(sol.control.Z.total_mass());
    res.fuel_moment.push_back(std::pow(std::abs(sol.control.Z.total_mass()), model.pbar));
    res.solutions.push_back(std::move(sol));
  }
  for (std::size_t i = 1; i < res.solutions.size(); ++i)
    res.successive_gaps.push_back(
        path_wasserstein(subsample(res.solutions[i - 1].mu, cfg.cert_paths),
                         subsample(res.solutions[i].mu, cfg.cert_paths), cfg.p,
                         cfg.cert_grid));
  if (res.solutions.size() >= 2) {
    std::size_t last = res.solutions.size() - 1;
    res.fuel_saturated = res.successive_gaps.back() <= cfg.tol &&
                         res.fuel_used[last] <= res.fuel_used[last - 1] + 1e-12;
  }
  return res;
}

MvSolution solve_mckean_vlasov(const MfgModel& model, const CandidateFamily& family,
                               const SolveConfig& cfg, int inner_max, double inner_tol) {
  family.validate();
  auto grid = uniform_grid(model.T, cfg.grid_steps);
  MvSolution out;
  int best = -1;
  double best_cost = 0.0;
  EmpiricalPathMeasure best_mu;
  bool best_inner_ok = false;
  for (std::size_t i = 0; i < family.candidates.size(); ++i) {
    const Candidate& cand = family.candidates[i];
    auto ens = simulate(model, nullptr, cand.Q, cand.Z, grid, cfg.n_paths, cfg.seed,
                        cfg.threads);
    EmpiricalPathMeasure mu = ens.measure();
    bool converged = false;
    int iters = 0;
    for (int it = 1; it <= inner_max; ++it) {
      iters = it;
      auto next = simulate(model, &mu, cand.Q, cand.Z, grid, cfg.n_paths, cfg.seed,
                           cfg.threads);
      double gap = marginal_gap(mu, next.measure(), grid.back(), cfg.gap_time_points, cfg.p);
      mu = next.measure();
      ens = std::move(next);
      if (gap <= inner_tol) {
        converged = true;
        break;
      }
    }
    double J = cost(&mu, ens, cand.Q, cand.Z, model);
    out.table.push_back({cand.label, J, converged, iters});
    if (best < 0 || J < best_cost) {
      best = static_cast<int>(i);
      best_cost = J;
      best_mu = mu;
      best_inner_ok = converged;
    }
  }
  out.solution.control = family.candidates[best];
  out.solution.J = best_cost;
  out.solution.mu = best_mu;
  out.solution.converged = best_inner_ok;
  for (const auto& rec : out.table)
    out.solution.final_table.emplace_back(rec.label, rec.cost);
  return out;
}

ApproxStudy approx_study(const MfgModel& model, const CandidateFamily& family,
                         const std::vector<int>& ns, const SolveConfig& cfg, int m1_grid) {
  if (model.g.kind != "zero" || model.h.kind != "zero")
    throw std::invalid_argument(
        "approx_study: requires g = 0 and h = 0 (no terminal or singular cost)");
  if (ns.empty()) throw std::invalid_argument("approx_study: empty n list");
  int n_min = *std::min_element(ns.begin(), ns.end());
  if (1.0 / n_min > model.eps + 1e-12)
    throw std::invalid_argument("approx_study: requires 1/min(n) <= eps");

  auto grid = uniform_grid(model.T + model.eps, cfg.grid_steps);
  ApproxStudy study;
  study.base = solve_on_grid(model, family, cfg, grid);
  const Candidate& star = study.base.control;
  auto base_ens = simulate(model, &study.base.mu, star.Q, star.Z, grid, cfg.n_paths,
                           cfg.seed, cfg.threads);

  for (int n : ns) {
    ApproxRow row;
    row.n = n;
    // direction 1: re-solve with mollified singular candidates
    CandidateFamily fam_n;
    for (const auto& c : family.candidates)
      fam_n.candidates.push_back({c.Q, mollify(c.Z, n, model.eps), c.label + "[n]"});
    auto sol_n = solve_on_grid(model, fam_n, cfg, grid);
    row.w_gap = path_wasserstein(subsample(sol_n.mu, cfg.cert_paths),
                                 subsample(study.base.mu, cfg.cert_paths), cfg.p,
                                 cfg.cert_grid);
    row.dJ = std::abs(sol_n.J - study.base.J);
    // direction 2: simulate the solved control's mollification against mu*
    auto Zn = mollify(star.Z, n, model.eps);
    auto ens_n = simulate(model, &study.base.mu, star.Q, Zn, grid, cfg.n_paths, cfg.seed,
                          cfg.threads);
    double sum = 0.0, sum2 = 0.0;
    const std::size_t P = base_ens.paths.size();
    for (std::size_t i = 0; i < P; ++i) {
      double d = m1_distance(ens_n.paths[i], base_ens.paths[i], m1_grid);
      sum += d;
      sum2 += d * d;
    }
    row.mean_dm1 = sum / P;
    double var = std::max(0.0, sum2 / P - row.mean_dm1 * row.mean_dm1);
    row.se_dm1 = std::sqrt(var / P);
    study.rows.push_back(row);
  }
  return study;
}

}  // namespace mfgsc
