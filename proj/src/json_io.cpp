#include "mfgsc/json_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfgsc {

namespace {

constexpr const char* kPcName = "piecewise-constant-cadlag";
constexpr const char* kPlName = "piecewise-linear-continuous";

double as_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw std::invalid_argument(ctx + ": expected a number");
  return j.get<double>();
}

std::vector<double> as_vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw std::invalid_argument(ctx + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(as_number(v, ctx));
  return out;
}

}  // namespace

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::vector<std::string>& required, const std::string& ctx) {
  if (!j.is_object()) throw std::invalid_argument(ctx + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument(ctx + ": unknown key '" + key + "'");
  }
  for (const auto& key : required)
    if (!j.contains(key)) throw std::invalid_argument(ctx + ": missing key '" + key + "'");
}

json to_json(const CadlagPath& x) {
  json values = json::array();
  for (const auto& v : x.values()) values.push_back(v);
  return json{{"T", x.horizon()},
              {"d", x.dim()},
              {"kind", x.kind() == PathKind::PiecewiseConstant ? kPcName : kPlName},
              {"breakpoints", x.breakpoints()},
              {"values", values}};
}

CadlagPath path_from_json(const json& j) {
  check_keys(j, {"T", "d", "kind", "breakpoints", "values"},
             {"T", "d", "kind", "breakpoints", "values"}, "path");
  const std::string kind = j.at("kind").get<std::string>();
  PathKind k;
  if (kind == kPcName)
    k = PathKind::PiecewiseConstant;
  else if (kind == kPlName)
    k = PathKind::PiecewiseLinear;
  else
    throw std::invalid_argument("path: unknown kind '" + kind + "'");
  std::vector<State> values;
  if (!j.at("values").is_array())
    throw std::invalid_argument("path.values: expected an array");
  for (const auto& row : j.at("values")) values.push_back(as_vector(row, "path.values"));
  return CadlagPath(as_number(j.at("T"), "path.T"), j.at("d").get<int>(), k,
                    as_vector(j.at("breakpoints"), "path.breakpoints"), std::move(values));
}

json to_json(const RelaxedControlGrid& q) {
  return json{{"t_grid", q.t_grid},
              {"u_grid", q.u_grid},
              {"weights", q.weights},
              {"u_tail0", q.u_tail0},
              {"u_tailT", q.u_tailT}};
}

RelaxedControlGrid grid_from_json(const json& j) {
  check_keys(j, {"t_grid", "u_grid", "weights", "u_tail0", "u_tailT"},
             {"t_grid", "u_grid", "weights"}, "relaxed control");
  RelaxedControlGrid q;
  q.t_grid = as_vector(j.at("t_grid"), "relaxed control.t_grid");
  q.u_grid = as_vector(j.at("u_grid"), "relaxed control.u_grid");
  if (!j.at("weights").is_array())
    throw std::invalid_argument("relaxed control.weights: expected an array");
  for (const auto& row : j.at("weights"))
    q.weights.push_back(as_vector(row, "relaxed control.weights"));
  q.u_tail0 = j.value("u_tail0", 0.0);
  q.u_tailT = j.value("u_tailT", 0.0);
  q.validate();
  return q;
}

json to_json(const EmpiricalMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms) atoms.push_back(a);
  return json{{"atoms", atoms}, {"weights", m.weights}};
}

EmpiricalMeasure measure_from_json(const json& j) {
  check_keys(j, {"atoms", "weights"}, {"atoms"}, "measure");
  EmpiricalMeasure m;
  if (!j.at("atoms").is_array())
    throw std::invalid_argument("measure.atoms: expected an array");
  for (const auto& a : j.at("atoms")) m.atoms.push_back(as_vector(a, "measure.atoms"));
  if (j.contains("weights")) m.weights = as_vector(j.at("weights"), "measure.weights");
  m.validate();
  return m;
}

json to_json(const Coeff& c) { return json{{"kind", c.kind}, {"params", c.params}}; }

Coeff coeff_from_json(const json& j) {
  check_keys(j, {"kind", "params"}, {"kind"}, "coefficient");
  Coeff c;
  c.kind = j.at("kind").get<std::string>();
  if (j.contains("params")) c.params = as_vector(j.at("params"), "coefficient.params");
  Moments probe;
  c(0.0, 0.0, probe, 0.0);  // rejects unknown kinds / bad arity up front
  return c;
}

json to_json(const MfgModel& m) {
  return json{{"b", to_json(m.b)},       {"sigma", to_json(m.sigma)},
              {"c", to_json(m.c)},       {"f", to_json(m.f)},
              {"g", to_json(m.g)},       {"h", to_json(m.h)},
              {"u_min", m.u_min},        {"u_max", m.u_max},
              {"T", m.T},                {"eps", m.eps},
              {"p", m.p},                {"pbar", m.pbar},
              {"C1", m.C1},              {"C2", m.C2},
              {"C3", m.C3},              {"C4", m.C4},
              {"C5", m.C5},              {"Lmod", m.Lmod},
              {"moment_cap", m.moment_cap}};
}

MfgModel model_from_json(const json& j) {
  check_keys(j,
             {"b", "sigma", "c", "f", "g", "h", "u_min", "u_max", "T", "eps", "p", "pbar",
              "C1", "C2", "C3", "C4", "C5", "Lmod", "moment_cap"},
             {}, "model");
  MfgModel m;
  if (j.contains("b")) m.b = coeff_from_json(j.at("b"));
  if (j.contains("sigma")) m.sigma = coeff_from_json(j.at("sigma"));
  if (j.contains("c")) m.c = coeff_from_json(j.at("c"));
  if (j.contains("f")) m.f = coeff_from_json(j.at("f"));
  if (j.contains("g")) m.g = coeff_from_json(j.at("g"));
  if (j.contains("h")) m.h = coeff_from_json(j.at("h"));
  m.u_min = j.value("u_min", m.u_min);
  m.u_max = j.value("u_max", m.u_max);
  m.T = j.value("T", m.T);
  m.eps = j.value("eps", m.eps);
  m.p = j.value("p", m.p);
  m.pbar = j.value("pbar", m.pbar);
  m.C1 = j.value("C1", m.C1);
  m.C2 = j.value("C2", m.C2);
  m.C3 = j.value("C3", m.C3);
  m.C4 = j.value("C4", m.C4);
  m.C5 = j.value("C5", m.C5);
  m.Lmod = j.value("Lmod", m.Lmod);
  m.moment_cap = j.value("moment_cap", m.moment_cap);
  if (m.T <= 0.0) throw std::invalid_argument("model: T must be positive");
  if (m.eps <= 0.0) throw std::invalid_argument("model: eps must be positive");
  if (m.u_min > m.u_max) throw std::invalid_argument("model: u_min > u_max");
  return m;
}

FamilySpec family_from_json(const json& j) {
  check_keys(j, {"knots", "u_levels", "mixtures", "jump_times", "masses", "ramps", "fuel"},
             {}, "family");
  FamilySpec s;
  s.knots = j.value("knots", s.knots);
  if (j.contains("u_levels")) s.u_levels = as_vector(j.at("u_levels"), "family.u_levels");
  s.mixtures = j.value("mixtures", s.mixtures);
  if (j.contains("jump_times"))
    s.jump_times = as_vector(j.at("jump_times"), "family.jump_times");
  if (j.contains("masses")) s.masses = as_vector(j.at("masses"), "family.masses");
  s.ramps = j.value("ramps", s.ramps);
  if (j.contains("fuel")) s.fuel = as_number(j.at("fuel"), "family.fuel");
  if (s.knots < 1) throw std::invalid_argument("family: knots must be >= 1");
  if (s.u_levels.empty()) throw std::invalid_argument("family: u_levels must be nonempty");
  return s;
}

SolveConfig solve_config_from_json(const json& j, const SolveConfig& base) {
  check_keys(j,
             {"tol", "max_iter", "damping", "n_paths", "grid_steps", "seed", "threads", "p",
              "cert_paths", "cert_grid", "gap_time_points"},
             {}, "solver");
  SolveConfig c = base;
  c.tol = j.value("tol", c.tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.damping = j.value("damping", c.damping);
  c.n_paths = j.value("n_paths", c.n_paths);
  c.grid_steps = j.value("grid_steps", c.grid_steps);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.p = j.value("p", c.p);
  c.cert_paths = j.value("cert_paths", c.cert_paths);
  c.cert_grid = j.value("cert_grid", c.cert_grid);
  c.gap_time_points = j.value("gap_time_points", c.gap_time_points);
  if (c.tol <= 0.0 || c.max_iter < 1 || c.damping <= 0.0 || c.damping > 1.0 ||
      c.n_paths < 1 || c.grid_steps < 1)
    throw std::invalid_argument("solver: parameter out of range");
  return c;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("invalid JSON in file: " + path);
  return j;
}

json resolve_ref(const json& v, const std::string& base_dir) {
  if (!v.is_string()) return v;
  std::filesystem::path p(v.get<std::string>());
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return load_json_file(p.string());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    out += ch;
    if (ch == '"') out += '"';
  }
  out += '"';
  return out;
}

std::string csv_num(double v) { return json(v).dump(); }

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << csv_field(header[i]);
  out << "\r\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << "\r\n";
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace mfgsc
