#include "mfgsc/cadlag.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mfgsc {
namespace {

double norm(const State& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

State diff(const State& a, const State& b) {
  State r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

bool close(const State& a, const State& b, double tol = 0.0) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace

CadlagPath::CadlagPath() : horizon_(1.0), dim_(1), kind_(PathKind::PiecewiseConstant) {}

CadlagPath::CadlagPath(double horizon, int dim, PathKind kind,
                       std::vector<double> breakpoints, std::vector<State> values)
    : horizon_(horizon),
      dim_(dim),
      kind_(kind),
      breakpoints_(std::move(breakpoints)),
      values_(std::move(values)) {
  if (!(horizon_ > 0.0)) throw std::invalid_argument("CadlagPath: horizon must be positive");
  if (dim_ < 1) throw std::invalid_argument("CadlagPath: dimension must be positive");
  if (breakpoints_.size() != values_.size())
    throw std::invalid_argument("CadlagPath: breakpoints/values size mismatch");
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    double b = breakpoints_[i];
    if (!std::isfinite(b) || b < 0.0 || b > horizon_)
      throw std::invalid_argument("CadlagPath: breakpoint outside [0,T]");
    if (i > 0 && !(b > breakpoints_[i - 1]))
      throw std::invalid_argument("CadlagPath: breakpoints must be strictly increasing");
    if (static_cast<int>(values_[i].size()) != dim_)
      throw std::invalid_argument("CadlagPath: value dimension mismatch");
    for (double c : values_[i])
      if (!std::isfinite(c)) throw std::invalid_argument("CadlagPath: non-finite value");
  }
}

CadlagPath CadlagPath::zero(double horizon, int dim) {
  return CadlagPath(horizon, dim, PathKind::PiecewiseConstant, {}, {});
}

CadlagPath CadlagPath::constant(double horizon, double value) {
  return CadlagPath(horizon, 1, PathKind::PiecewiseConstant, {0.0}, {{value}});
}

CadlagPath CadlagPath::step(double horizon, double jump_time, double height) {
  return CadlagPath(horizon, 1, PathKind::PiecewiseConstant, {jump_time}, {{height}});
}

CadlagPath CadlagPath::staircase(double horizon,
                                 const std::vector<std::pair<double, double>>& jumps) {
  std::vector<double> bp;
  std::vector<State> vals;
  double level = 0.0;
  for (const auto& [t, h] : jumps) {
    level += h;
    bp.push_back(t);
    vals.push_back({level});
  }
  return CadlagPath(horizon, 1, PathKind::PiecewiseConstant, std::move(bp), std::move(vals));
}

CadlagPath CadlagPath::ramp(double horizon, double t0, double t1, double height) {
  return CadlagPath(horizon, 1, PathKind::PiecewiseLinear, {t0, t1}, {{0.0}, {height}});
}

State CadlagPath::eval(double t) const {
  State zero_state(dim_, 0.0);
  if (t < 0.0) return zero_state;
  if (t > horizon_) t = horizon_;
  if (breakpoints_.empty()) return zero_state;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) {
    // before the first breakpoint
    return kind_ == PathKind::PiecewiseConstant ? zero_state : values_.front();
  }
  std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  if (kind_ == PathKind::PiecewiseConstant) return values_[i];
  if (i + 1 >= breakpoints_.size()) return values_.back();
  double a = breakpoints_[i], b = breakpoints_[i + 1];
  double lam = (t - a) / (b - a);
  State r(dim_);
  for (int k = 0; k < dim_; ++k)
    r[k] = (1.0 - lam) * values_[i][k] + lam * values_[i + 1][k];
  return r;
}

State CadlagPath::left_limit(double t) const {
  if (t <= 0.0) return State(dim_, 0.0);
  if (t > horizon_) return eval(horizon_);
  if (kind_ == PathKind::PiecewiseLinear) return eval(t);  // continuous on (0,T]
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return State(dim_, 0.0);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double CadlagPath::eval1(double t) const {
  if (dim_ != 1) throw std::invalid_argument("eval1 requires d == 1");
  return eval(t)[0];
}

double CadlagPath::left_limit1(double t) const {
  if (dim_ != 1) throw std::invalid_argument("left_limit1 requires d == 1");
  return left_limit(t)[0];
}

std::vector<double> CadlagPath::jump_times() const {
  std::vector<double> out;
  if (kind_ == PathKind::PiecewiseLinear) {
    if (!close(eval(0.0), State(dim_, 0.0))) out.push_back(0.0);
    return out;
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!close(values_[i], left_limit(breakpoints_[i] == 0.0 ? 0.0 : breakpoints_[i]))) {
      // left_limit(0) is the zero state by convention
      out.push_back(breakpoints_[i]);
    }
  }
  return out;
}

bool CadlagPath::nondecreasing() const {
  State prev(dim_, 0.0);
  for (const auto& v : values_) {
    for (int k = 0; k < dim_; ++k)
      if (v[k] < prev[k] - 1e-12) return false;
    prev = v;
  }
  return true;
}

double CadlagPath::sup_norm() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, norm(v));
  return m;
}

CadlagPath CadlagPath::operator+(const CadlagPath& other) const {
  if (kind_ != other.kind_ || dim_ != other.dim_ ||
      std::abs(horizon_ - other.horizon_) > 1e-12)
    throw std::invalid_argument("path addition requires shared kind, dimension and horizon");
  std::vector<double> bp;
  bp.reserve(breakpoints_.size() + other.breakpoints_.size());
  std::merge(breakpoints_.begin(), breakpoints_.end(), other.breakpoints_.begin(),
             other.breakpoints_.end(), std::back_inserter(bp));
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  std::vector<State> vals;
  vals.reserve(bp.size());
  for (double t : bp) {
    State a = eval(t), b = other.eval(t);
    for (int k = 0; k < dim_; ++k) a[k] += b[k];
    vals.push_back(std::move(a));
  }
  return CadlagPath(horizon_, dim_, kind_, std::move(bp), std::move(vals));
}

std::string CadlagPath::describe() const {
  std::ostringstream os;
  os << (kind_ == PathKind::PiecewiseConstant ? "pc" : "pl") << " path, T=" << horizon_
     << ", d=" << dim_ << ", " << breakpoints_.size() << " breakpoints";
  return os.str();
}

CompletedGraph completed_graph(const CadlagPath& x) {
  CompletedGraph g;
  const double T = x.horizon();
  auto push = [&g](State z, double t) {
    if (!g.vertices.empty()) {
      const auto& last = g.vertices.back();
      if (last.t == t && close(last.z, z)) return;
    }
    g.vertices.push_back({std::move(z), t});
  };
  State zero_state(x.dim(), 0.0);
  if (x.kind() == PathKind::PiecewiseConstant) {
    State prev = zero_state;
    double tprev = 0.0;
    push(prev, 0.0);
    for (std::size_t i = 0; i < x.breakpoints().size(); ++i) {
      double b = x.breakpoints()[i];
      const State& v = x.values()[i];
      if (b > tprev) push(prev, b);  // continuity segment
      if (!close(v, prev)) push(v, b);  // jump segment
      prev = v;
      tprev = b;
    }
    if (tprev < T || g.vertices.size() < 2) push(prev, T);
  } else {
    State v0 = x.eval(0.0);
    if (!close(v0, zero_state)) push(zero_state, 0.0);  // initial jump segment
    push(v0, 0.0);
    for (std::size_t i = 0; i < x.breakpoints().size(); ++i)
      push(x.values()[i], x.breakpoints()[i]);
    push(x.eval(T), T);
  }
  return g;
}

double segment_distance(const State& p, const State& a, const State& b) {
  std::size_t d = p.size();
  double ab2 = 0.0, ap_ab = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double ab = b[k] - a[k];
    ab2 += ab * ab;
    ap_ab += (p[k] - a[k]) * ab;
  }
  double lam = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double dk = p[k] - (a[k] + lam * (b[k] - a[k]));
    s += dk * dk;
  }
  return std::sqrt(s);
}

double segment_distance(double p, double a, double b) {
  double lo = std::min(a, b), hi = std::max(a, b);
  if (p < lo) return lo - p;
  if (p > hi) return p - hi;
  return 0.0;
}

namespace {

struct SamplePoint {
  double z;
  double t;
};

double cheb(const SamplePoint& a, const SamplePoint& b) {
  return std::max(std::abs(a.z - b.z), std::abs(a.t - b.t));
}

// Discretize a (scalar) completed graph to roughly `grid` points spaced
// uniformly in Chebyshev arc length, keeping every original vertex.
std::vector<SamplePoint> sample_graph(const CompletedGraph& g, int grid, double* mesh_out) {
  std::vector<SamplePoint> verts;
  verts.reserve(g.vertices.size());
  for (const auto& v : g.vertices) verts.push_back({v.z[0], v.t});
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < verts.size(); ++i) total += cheb(verts[i], verts[i + 1]);
  std::vector<SamplePoint> out;
  out.push_back(verts.front());
  double target = total > 0.0 ? total / grid : 1.0;
  double mesh = 0.0;
  for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
    double len = cheb(verts[i], verts[i + 1]);
    int k = std::max(1, static_cast<int>(std::ceil(len / target - 1e-12)));
    for (int j = 1; j <= k; ++j) {
      double lam = static_cast<double>(j) / k;
      out.push_back({(1.0 - lam) * verts[i].z + lam * verts[i + 1].z,
                     (1.0 - lam) * verts[i].t + lam * verts[i + 1].t});
      mesh = std::max(mesh, len / k);
    }
  }
  if (mesh_out) *mesh_out = mesh;
  return out;
}

}  // namespace

M1Result m1_distance_full(const CadlagPath& x, const CadlagPath& y, int grid) {
  if (x.dim() != y.dim()) throw std::invalid_argument("m1_distance: dimension mismatch");
  if (x.dim() != 1)
    throw std::invalid_argument("m1_distance: lattice solver implemented for d == 1");
  if (grid < 16) throw std::invalid_argument("m1_distance: grid must be >= 16");
  double mx = 0.0, my = 0.0;
  auto a = sample_graph(completed_graph(x), grid, &mx);
  auto b = sample_graph(completed_graph(y), grid, &my);
  const std::size_t n = a.size(), m = b.size();
  // Discrete Frechet recursion over the product lattice; monotone staircase
  // predecessors realize the order-preserving parameter representations.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, inf), cur(m, inf);
  for (std::size_t j = 0; j < m; ++j) {
    double c = cheb(a[0], b[j]);
    prev[j] = j == 0 ? c : std::max(prev[j - 1], c);
  }
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best = prev[j];
      if (j > 0) best = std::min(best, std::min(cur[j - 1], prev[j - 1]));
      cur[j] = std::max(best, cheb(a[i], b[j]));
    }
    std::swap(prev, cur);
  }
  return {prev[m - 1], std::max(mx, my)};
}

double m1_distance(const CadlagPath& x, const CadlagPath& y, int grid) {
  return m1_distance_full(x, y, grid).value;
}

double oscillation(const CadlagPath& x, double t, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("oscillation: delta must be positive");
  const double lo = std::max(0.0, t - delta);
  const double hi = std::min(x.horizon(), t + delta);
  std::vector<State> cand;
  cand.push_back(x.eval(lo));
  cand.push_back(x.eval(hi));
  const auto& bp = x.breakpoints();
  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (bp[i] > lo && bp[i] <= hi) cand.push_back(x.left_limit(bp[i]));
    if (bp[i] >= lo && bp[i] <= hi) cand.push_back(x.values()[i]);
  }
  double m = 0.0;
  for (std::size_t i = 0; i < cand.size(); ++i)
    for (std::size_t j = i + 1; j < cand.size(); ++j)
      m = std::max(m, norm(diff(cand[i], cand[j])));
  return m;
}

namespace {

struct OscCand {
  double t;
  int eps;  // -1: approached from the left, +1: from the right
  State v;
};

// Candidate (time, value) points on the extended line: the zero state
// before 0, the piece values on [0,T], and the frozen value after T. Exact
// for piecewise-constant paths; for piecewise-linear paths the breakpoints
// carry the extreme values of each segment.
std::vector<OscCand> oscillation_candidates(const CadlagPath& x) {
  std::vector<OscCand> c;
  const double T = x.horizon();
  State zero_state(x.dim(), 0.0);
  c.push_back({0.0, -1, zero_state});
  const auto& bp = x.breakpoints();
  const auto& vals = x.values();
  if (x.kind() == PathKind::PiecewiseConstant) {
    if (bp.empty()) {
      c.push_back({0.0, 0, zero_state});
      c.push_back({T, 0, zero_state});
    } else {
      if (bp.front() > 0.0) {
        c.push_back({0.0, 0, zero_state});
        c.push_back({bp.front(), -1, zero_state});
      }
      for (std::size_t i = 0; i < bp.size(); ++i) {
        c.push_back({bp[i], 0, vals[i]});
        double end = i + 1 < bp.size() ? bp[i + 1] : T;
        int eps = i + 1 < bp.size() ? -1 : 0;
        if (end > bp[i]) c.push_back({end, eps, vals[i]});
      }
    }
  } else {
    c.push_back({0.0, 0, x.eval(0.0)});
    for (std::size_t i = 0; i < bp.size(); ++i) c.push_back({bp[i], 0, vals[i]});
    c.push_back({T, 0, x.eval(T)});
  }
  c.push_back({T, 1, x.eval(T)});
  std::sort(c.begin(), c.end(), [](const OscCand& a, const OscCand& b) {
    return a.t != b.t ? a.t < b.t : a.eps < b.eps;
  });
  c.erase(std::unique(c.begin(), c.end(),
                      [](const OscCand& a, const OscCand& b) {
                        return a.t == b.t && a.eps == b.eps && close(a.v, b.v);
                      }),
          c.end());
  return c;
}

double strong_osc_scalar(const std::vector<OscCand>& c, double delta) {
  const std::size_t n = c.size();
  std::vector<double> vs(n);
  for (std::size_t i = 0; i < n; ++i) vs[i] = c[i].v[0];
  // suffix range min/max by doubling
  int levels = 1;
  while ((1u << levels) <= n) ++levels;
  std::vector<std::vector<double>> rmin(levels, vs), rmax(levels, vs);
  for (int l = 1; l < levels; ++l)
    for (std::size_t i = 0; i + (1u << l) <= n; ++i) {
      rmin[l][i] = std::min(rmin[l - 1][i], rmin[l - 1][i + (1u << (l - 1))]);
      rmax[l][i] = std::max(rmax[l - 1][i], rmax[l - 1][i + (1u << (l - 1))]);
    }
  auto range_min = [&](std::size_t lo, std::size_t hi) {  // inclusive
    int l = 31 - __builtin_clz(static_cast<unsigned>(hi - lo + 1));
    return std::min(rmin[l][lo], rmin[l][hi - (1u << l) + 1]);
  };
  auto range_max = [&](std::size_t lo, std::size_t hi) {
    int l = 31 - __builtin_clz(static_cast<unsigned>(hi - lo + 1));
    return std::max(rmax[l][lo], rmax[l][hi - (1u << l) + 1]);
  };
  double best = 0.0;
  for (std::size_t i2 = 1; i2 + 1 < n; ++i2) {
    for (std::size_t i1 = i2; i1-- > 0;) {
      if (c[i2].t - c[i1].t > 2.0 * delta) break;
      // last admissible index for t3
      std::size_t hi = i2;
      while (hi + 1 < n && c[hi + 1].t - c[i1].t <= 2.0 * delta) ++hi;
      if (hi <= i2) continue;
      double v1 = vs[i1], v2 = vs[i2];
      double m3min = range_min(i2 + 1, hi);
      double m3max = range_max(i2 + 1, hi);
      best = std::max(best, v2 - std::max(v1, m3min));
      best = std::max(best, std::min(v1, m3max) - v2);
    }
  }
  return best;
}

double strong_osc_general(const std::vector<OscCand>& c, double delta) {
  const std::size_t n = c.size();
  const bool scalar = !c.empty() && c.front().v.size() == 1;
  double best = 0.0;
  for (std::size_t i1 = 0; i1 < n; ++i1)
    for (std::size_t i3 = i1 + 2; i3 < n && c[i3].t - c[i1].t <= 2.0 * delta; ++i3)
      for (std::size_t i2 = i1 + 1; i2 < i3; ++i2) {
        double d = scalar ? segment_distance(c[i2].v[0], c[i1].v[0], c[i3].v[0])
                          : segment_distance(c[i2].v, c[i1].v, c[i3].v);
        best = std::max(best, d);
      }
  return best;
}

}  // namespace

double strong_m1_oscillation(const CadlagPath& x, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("strong_m1_oscillation: delta must be positive");
  auto c = oscillation_candidates(x);
  if (x.dim() == 1 && c.size() > 64) return strong_osc_scalar(c, delta);
  return strong_osc_general(c, delta);
}

double modified_oscillation(const CadlagPath& x, double delta) {
  double ws = strong_m1_oscillation(x, delta);
  // sup_{0 <= s < t <= delta} |x_s - [0, x_t]|
  auto c = oscillation_candidates(x);
  std::vector<OscCand> win;
  for (const auto& p : c)
    if (p.t >= 0.0 && p.t <= delta && !(p.t == 0.0 && p.eps < 0)) win.push_back(p);
  win.push_back({delta, 0, x.eval(delta)});
  std::sort(win.begin(), win.end(), [](const OscCand& a, const OscCand& b) {
    return a.t != b.t ? a.t < b.t : a.eps < b.eps;
  });
  State zero_state(x.dim(), 0.0);
  const bool scalar = x.dim() == 1;
  double init = 0.0;
  for (std::size_t i = 0; i < win.size(); ++i)
    for (std::size_t j = i + 1; j < win.size(); ++j) {
      double d = scalar ? segment_distance(win[i].v[0], 0.0, win[j].v[0])
                        : segment_distance(win[i].v, zero_state, win[j].v);
      init = std::max(init, d);
    }
  return ws + init;
}

CompactnessReport compactness_diagnostic(const std::vector<CadlagPath>& paths,
                                         const std::vector<double>& delta_schedule) {
  if (paths.empty()) throw std::invalid_argument("compactness_diagnostic: empty family");
  for (std::size_t i = 1; i < delta_schedule.size(); ++i)
    if (!(delta_schedule[i] < delta_schedule[i - 1]))
      throw std::invalid_argument("compactness_diagnostic: delta schedule must decrease");
  CompactnessReport rep;
  for (const auto& p : paths) rep.sup_norm = std::max(rep.sup_norm, p.sup_norm());
  for (double d : delta_schedule) {
    double w = 0.0;
    for (const auto& p : paths) w = std::max(w, modified_oscillation(p, d));
    rep.oscillation_row.emplace_back(d, w);
  }
  bool nonincreasing = true;
  for (std::size_t i = 1; i < rep.oscillation_row.size(); ++i)
    if (rep.oscillation_row[i].second > rep.oscillation_row[i - 1].second + rep.monotone_tol)
      nonincreasing = false;
  double front = rep.oscillation_row.empty() ? 0.0 : rep.oscillation_row.front().second;
  double back = rep.oscillation_row.empty() ? 0.0 : rep.oscillation_row.back().second;
  bool vanishing = back <= std::max(rep.absolute_tol, rep.decay_factor * front);
  rep.consistent = std::isfinite(rep.sup_norm) && nonincreasing && vanishing;
  return rep;
}

namespace {

// Merged refinement of both breakpoint sets together with 0 and T.
std::vector<double> merged_grid(const CadlagPath& x, const CadlagPath& y) {
  std::vector<double> g;
  g.push_back(0.0);
  for (double b : x.breakpoints()) g.push_back(b);
  for (double b : y.breakpoints()) g.push_back(b);
  g.push_back(x.horizon());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

// Antiderivative of |u|^alpha.
double pow_anti(double u, double alpha) {
  return std::copysign(std::pow(std::abs(u), alpha + 1.0) / (alpha + 1.0), u);
}

}  // namespace

double uniform_distance(const CadlagPath& x, const CadlagPath& y) {
  if (std::abs(x.horizon() - y.horizon()) > 1e-12)
    throw std::invalid_argument("uniform_distance: horizon mismatch");
  if (x.dim() != y.dim()) throw std::invalid_argument("uniform_distance: dimension mismatch");
  auto g = merged_grid(x, y);
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    m = std::max(m, norm(diff(x.eval(g[i]), y.eval(g[i]))));
    if (i > 0) m = std::max(m, norm(diff(x.left_limit(g[i]), y.left_limit(g[i]))));
  }
  return m;
}

double lp_distance(const CadlagPath& x, const CadlagPath& y, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("lp_distance: alpha must be positive");
  if (x.dim() != 1 || y.dim() != 1)
    throw std::invalid_argument("lp_distance: implemented for d == 1");
  if (std::abs(x.horizon() - y.horizon()) > 1e-12)
    throw std::invalid_argument("lp_distance: horizon mismatch");
  auto g = merged_grid(x, y);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    double a = g[i], b = g[i + 1], h = b - a;
    if (h <= 0.0) continue;
    double da = x.eval1(a) - y.eval1(a);
    double db = x.left_limit1(b) - y.left_limit1(b);
    double slope = (db - da) / h;
    if (std::abs(slope) < 1e-15) {
      acc += std::pow(std::abs(da), alpha) * h;
    } else {
      acc += (pow_anti(da + slope * h, alpha) - pow_anti(da, alpha)) / slope;
    }
  }
  return std::pow(acc, 1.0 / alpha);
}

}  // namespace mfgsc
