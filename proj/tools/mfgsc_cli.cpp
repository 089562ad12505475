#include "mfgsc/json_io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mfgsc;

namespace {

struct Context {
  std::string command;
  json config;
  std::string config_dir;
  fs::path out_dir;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> outputs;  // file names relative to out_dir

  json ref(const std::string& key) const { return resolve_ref(config.at(key), config_dir); }

  void emit(const std::string& name, const std::string& content) {
    write_text((out_dir / name).string(), content);
    outputs.push_back(name);
  }
};

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(Context& ctx, double wall_seconds, int exit_code) {
  json m{{"command", ctx.command},
         {"config", ctx.config},
         {"seed", ctx.seed},
         {"threads", ctx.threads},
         {"versions",
          {{"mfgsc", "1.0.0"},
           {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                 std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                 std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
           {"cli11", CLI11_VERSION}}},
         {"wall_time_seconds", wall_seconds},
         {"timestamp", iso_now()},
         {"exit_code", exit_code},
         {"outputs", ctx.outputs}};
  write_text((ctx.out_dir / "manifest.json").string(), m.dump(2) + "\n");
}

std::vector<CadlagPath> load_paths(Context& ctx, const std::string& key) {
  if (!ctx.config.contains(key) || !ctx.config.at(key).is_array())
    throw std::invalid_argument(ctx.command + ": '" + key + "' must be an array");
  std::vector<CadlagPath> out;
  for (const auto& v : ctx.config.at(key))
    out.push_back(path_from_json(resolve_ref(v, ctx.config_dir)));
  if (out.empty()) throw std::invalid_argument(ctx.command + ": '" + key + "' is empty");
  return out;
}

std::vector<double> deltas_param(const Context& ctx) {
  if (ctx.config.contains("deltas")) {
    std::vector<double> d = ctx.config.at("deltas").get<std::vector<double>>();
    if (d.empty()) throw std::invalid_argument("deltas: must be nonempty");
    return d;
  }
  return {0.5, 0.25, 0.125, 0.0625};
}

int cmd_m1_dist(Context& ctx) {
  check_keys(ctx.config, {"command", "paths", "grid", "seed", "threads"}, {"paths"},
             ctx.command);
  auto paths = load_paths(ctx, "paths");
  int grid = ctx.config.value("grid", 128);
  if (grid < 16) throw std::invalid_argument("m1-dist: grid must be >= 16");
  const std::size_t n = paths.size();
  std::vector<std::string> header{"id"};
  for (std::size_t i = 0; i < n; ++i) header.push_back("p" + std::to_string(i));
  std::vector<std::vector<std::string>> rows(n);
  std::vector<std::vector<double>> D(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      D[i][j] = D[j][i] = m1_distance(paths[i], paths[j], grid);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].push_back("p" + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) rows[i].push_back(csv_num(D[i][j]));
  }
  ctx.emit("m1_matrix.csv", csv_table(header, rows));
  if (n == 2) std::cout << csv_num(D[0][1]) << "\n";
  return 0;
}

int cmd_oscillation(Context& ctx) {
  check_keys(ctx.config, {"command", "path", "deltas", "seed", "threads"}, {"path"},
             ctx.command);
  CadlagPath x = path_from_json(ctx.ref("path"));
  std::vector<std::vector<std::string>> rows;
  for (double d : deltas_param(ctx))
    rows.push_back({csv_num(d), csv_num(strong_m1_oscillation(x, d)),
                    csv_num(modified_oscillation(x, d))});
  ctx.emit("oscillation.csv", csv_table({"delta", "w_s", "w_tilde"}, rows));
  return 0;
}

int cmd_compactness(Context& ctx) {
  check_keys(ctx.config, {"command", "paths", "deltas", "seed", "threads"}, {"paths"},
             ctx.command);
  auto paths = load_paths(ctx, "paths");
  auto report = compactness_diagnostic(paths, deltas_param(ctx));
  std::vector<std::vector<std::string>> rows;
  for (const auto& [d, w] : report.oscillation_row)
    rows.push_back({csv_num(d), csv_num(w)});
  ctx.emit("compactness.csv", csv_table({"delta", "sup_w_tilde"}, rows));
  json rep{{"sup_norm", report.sup_norm}, {"consistent", report.consistent}};
  ctx.emit("compactness.json", rep.dump(2) + "\n");
  std::cout << (report.consistent ? "consistent" : "inconsistent") << "\n";
  return 0;
}

int cmd_wasserstein(Context& ctx) {
  check_keys(ctx.config, {"command", "mu", "nu", "p", "seed", "threads"}, {"mu", "nu"},
             ctx.command);
  auto mu = measure_from_json(ctx.ref("mu"));
  auto nu = measure_from_json(ctx.ref("nu"));
  double p = ctx.config.value("p", 1.0);
  double v = wasserstein_p(mu, nu, p);
  ctx.emit("wasserstein.csv",
           csv_table({"id1", "id2", "p", "value", "ground", "grid"},
                     {{"mu", "nu", csv_num(p), csv_num(v), "euclidean", ""}}));
  std::cout << csv_num(v) << "\n";
  return 0;
}

int cmd_simulate(Context& ctx) {
  check_keys(ctx.config,
             {"command", "model", "Q", "Z", "n_paths", "grid_steps", "seed", "threads"},
             {"model"}, ctx.command);
  MfgModel model = model_from_json(ctx.ref("model"));
  RelaxedControlGrid Q =
      ctx.config.contains("Q")
          ? grid_from_json(ctx.ref("Q"))
          : RelaxedControlGrid::dirac_constant(
                {0.0, model.T}, std::min(std::max(0.0, model.u_min), model.u_max));
  SingularControl Z = ctx.config.contains("Z")
                          ? SingularControl::from_path(path_from_json(ctx.ref("Z")))
                          : SingularControl::zero(model.T);
  int n_paths = ctx.config.value("n_paths", 100);
  int steps = ctx.config.value("grid_steps", 100);
  if (n_paths < 1 || steps < 1)
    throw std::invalid_argument("simulate: n_paths and grid_steps must be positive");
  auto ens = simulate(model, nullptr, Q, Z, uniform_grid(model.T, steps), n_paths, ctx.seed,
                      ctx.threads);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < ens.paths.size(); ++i)
    for (std::size_t k = 0; k < ens.grid.size(); ++k)
      rows.push_back({std::to_string(i), csv_num(ens.grid[k]),
                      csv_num(ens.paths[i].eval1(ens.grid[k]))});
  ctx.emit("ensemble.csv", csv_table({"path", "t", "x"}, rows));
  return 0;
}

json solution_json(const MfgSolution& sol) {
  json table = json::array();
  for (const auto& [label, J] : sol.final_table) table.push_back({{"label", label}, {"J", J}});
  return json{{"label", sol.control.label},
              {"J", sol.J},
              {"converged", sol.converged},
              {"certificate", sol.certificate},
              {"gap", sol.trace.empty() ? 0.0 : sol.trace.back().gap},
              {"iterations", sol.trace.size()},
              {"control", {{"Q", to_json(sol.control.Q)}, {"Z", to_json(sol.control.Z.path)}}},
              {"table", table}};
}

std::string trace_csv(const MfgSolution& sol) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : sol.trace)
    rows.push_back({std::to_string(r.iter), csv_num(r.gap), csv_num(r.cost)});
  return csv_table({"iter", "gap", "J"}, rows);
}

struct SolveInputs {
  MfgModel model;
  CandidateFamily family;
  SolveConfig cfg;
};

SolveInputs solve_inputs(Context& ctx) {
  SolveInputs in;
  in.model = model_from_json(ctx.ref("model"));
  in.family = build_family(in.model, family_from_json(
                                         ctx.config.contains("family")
                                             ? ctx.ref("family")
                                             : json::object()));
  in.cfg = solve_config_from_json(
      ctx.config.contains("solver") ? ctx.ref("solver") : json::object());
  in.cfg.seed = ctx.seed;
  in.cfg.threads = ctx.threads;
  return in;
}

int cmd_solve_mfg(Context& ctx) {
  check_keys(ctx.config, {"command", "model", "family", "solver", "seed", "threads"},
             {"model"}, ctx.command);
  auto in = solve_inputs(ctx);
  auto sol = solve_fixed_point(in.model, in.family, in.cfg);
  ctx.emit("trace.csv", trace_csv(sol));
  ctx.emit("solution.json", solution_json(sol).dump(2) + "\n");
  std::cout << "J=" << csv_num(sol.J) << " gap="
            << csv_num(sol.trace.empty() ? 0.0 : sol.trace.back().gap)
            << " converged=" << (sol.converged ? "true" : "false") << "\n";
  return sol.converged ? 0 : 3;
}

int cmd_solve_general(Context& ctx) {
  check_keys(ctx.config,
             {"command", "model", "family", "solver", "fuel_schedule", "seed", "threads"},
             {"model", "fuel_schedule"}, ctx.command);
  auto in = solve_inputs(ctx);
  std::vector<double> schedule = ctx.config.at("fuel_schedule").get<std::vector<double>>();
  auto res = solve_general(in.model, in.family, schedule, in.cfg);
  std::vector<std::vector<std::string>> rows;
  bool all_ok = true;
  for (std::size_t i = 0; i < res.solutions.size(); ++i) {
    const auto& s = res.solutions[i];
    all_ok = all_ok && s.converged;
    rows.push_back({csv_num(res.fuel_schedule[i]), csv_num(s.J), csv_num(res.fuel_used[i]),
                    csv_num(res.fuel_moment[i]),
                    csv_num(i ? res.successive_gaps[i - 1] : 0.0),
                    s.converged ? "true" : "false"});
  }
  ctx.emit("general.csv",
           csv_table({"m", "J", "fuel_used", "fuel_moment", "gap_to_prev", "converged"},
                     rows));
  json out = solution_json(res.solutions.back());
  out["fuel_saturated"] = res.fuel_saturated;
  ctx.emit("solution.json", out.dump(2) + "\n");
  return all_ok ? 0 : 3;
}

int cmd_solve_mv(Context& ctx) {
  check_keys(ctx.config,
             {"command", "model", "family", "solver", "inner_max", "inner_tol", "seed",
              "threads"},
             {"model"}, ctx.command);
  auto in = solve_inputs(ctx);
  int inner_max = ctx.config.value("inner_max", 25);
  double inner_tol = ctx.config.value("inner_tol", 1e-9);
  auto mv = solve_mckean_vlasov(in.model, in.family, in.cfg, inner_max, inner_tol);
  std::vector<std::vector<std::string>> rows;
  bool inner_ok = true;
  for (const auto& rec : mv.table) {
    inner_ok = inner_ok && rec.inner_converged;
    rows.push_back({rec.label, csv_num(rec.cost), rec.inner_converged ? "true" : "false",
                    std::to_string(rec.inner_iters)});
  }
  ctx.emit("mv_table.csv",
           csv_table({"label", "cost", "inner_converged", "inner_iters"}, rows));
  ctx.emit("solution.json", solution_json(mv.solution).dump(2) + "\n");
  std::cout << "J=" << csv_num(mv.solution.J) << " label=" << mv.solution.control.label
            << "\n";
  return inner_ok ? 0 : 3;
}

int cmd_approx_study(Context& ctx) {
  check_keys(ctx.config,
             {"command", "model", "family", "solver", "ns", "m1_grid", "seed", "threads"},
             {"model", "ns"}, ctx.command);
  auto in = solve_inputs(ctx);
  std::vector<int> ns = ctx.config.at("ns").get<std::vector<int>>();
  int m1_grid = ctx.config.value("m1_grid", 256);
  auto study = approx_study(in.model, in.family, ns, in.cfg, m1_grid);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : study.rows)
    rows.push_back({std::to_string(r.n), csv_num(r.w_gap), csv_num(r.dJ),
                    csv_num(r.mean_dm1), csv_num(r.se_dm1)});
  ctx.emit("approx.csv", csv_table({"n", "w_gap", "dJ", "mean_dm1", "se_dm1"}, rows));
  ctx.emit("solution.json", solution_json(study.base).dump(2) + "\n");
  return study.base.converged ? 0 : 3;
}

int cmd_validate_model(Context& ctx) {
  check_keys(ctx.config, {"command", "model", "samples", "x_range", "seed", "threads"},
             {"model"}, ctx.command);
  MfgModel model = model_from_json(ctx.ref("model"));
  int samples = ctx.config.value("samples", 2000);
  double x_range = ctx.config.value("x_range", 3.0);
  auto report = validate_assumptions(model, samples, x_range, ctx.seed);
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back(
        {{"name", c.name}, {"ok", c.ok}, {"margin", c.margin}, {"detail", c.detail}});
    std::cout << (c.ok ? "[ok]   " : "[FAIL] ") << c.name
              << (c.detail.empty() ? "" : " - " + c.detail) << "\n";
  }
  json rep{{"checks", checks}, {"all_ok", report.all_ok()}};
  ctx.emit("validation.json", rep.dump(2) + "\n");
  return report.all_ok() ? 0 : 2;
}

int dispatch(Context& ctx) {
  if (ctx.command == "m1-dist") return cmd_m1_dist(ctx);
  if (ctx.command == "oscillation") return cmd_oscillation(ctx);
  if (ctx.command == "compactness") return cmd_compactness(ctx);
  if (ctx.command == "wasserstein") return cmd_wasserstein(ctx);
  if (ctx.command == "simulate") return cmd_simulate(ctx);
  if (ctx.command == "solve-mfg") return cmd_solve_mfg(ctx);
  if (ctx.command == "solve-general") return cmd_solve_general(ctx);
  if (ctx.command == "solve-mv") return cmd_solve_mv(ctx);
  if (ctx.command == "approx-study") return cmd_approx_study(ctx);
  if (ctx.command == "validate-model") return cmd_validate_model(ctx);
  throw std::invalid_argument("unknown command: " + ctx.command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular-control mean field games: metrics, simulation, solvers"};
  std::string command, config_path, out_dir = ".";
  std::optional<std::int64_t> seed_flag;
  std::optional<int> threads_flag;
  app.add_option("command", command,
                 "m1-dist | oscillation | compactness | wasserstein | simulate | solve-mfg "
                 "| solve-general | solve-mv | approx-study | validate-model");
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed_flag, "RNG seed (overrides config)");
  app.add_option("--threads", threads_flag, "worker cap (overrides config)");
  app.add_option("--out", out_dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    ctx.config = load_json_file(config_path);
    ctx.config_dir = fs::path(config_path).parent_path().string();
    ctx.out_dir = out_dir;
    fs::create_directories(ctx.out_dir);
    std::string cfg_command = ctx.config.value("command", "");
    if (command.empty()) command = cfg_command;
    if (command.empty())
      throw std::invalid_argument("no command given (argument or config \"command\")");
    if (!cfg_command.empty() && cfg_command != command)
      throw std::invalid_argument("config command '" + cfg_command +
                                  "' does not match requested '" + command + "'");
    ctx.command = command;
    ctx.seed = seed_flag ? static_cast<std::uint64_t>(*seed_flag)
                         : ctx.config.value("seed", std::uint64_t{1});
    ctx.threads = threads_flag ? *threads_flag : ctx.config.value("threads", 1);
    if (ctx.threads < 1) throw std::invalid_argument("threads must be >= 1");
    code = dispatch(ctx);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = 2;
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!ctx.command.empty()) {
    try {
      write_manifest(ctx, wall, code);
    } catch (const std::exception& e) {
      std::cerr << "error writing manifest: " << e.what() << "\n";
      if (code == 0) code = 2;
    }
  }
  return code;
}
