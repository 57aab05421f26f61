#include "blowup/rpde.h"

#include "blowup/csv.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blowup::rpde {

namespace {

std::string num(double x) { return csv::format_double(x); }

// x^a for x >= 0 with the conventions 0^0 = 1 and cheap paths for the common exponents.
inline double power(double x, double a) {
  if (a == 1.0) return x;
  if (a == 2.0) return x * x;
  if (a == 3.0) return x * x * x;
  if (a == 0.0) return 1.0;
  return std::pow(x, a);
}

}  // namespace

std::vector<std::string> ModelParams::violations() const {
  std::vector<std::string> v;
  auto finite = [&](double x, const char* name) {
    if (!std::isfinite(x)) v.push_back(std::string(name) + " must be finite");
    return std::isfinite(x);
  };
  if (finite(gamma, "gamma") && gamma < 0.0) v.push_back("gamma must be >= 0 (got " + num(gamma) + ")");
  if (finite(k, "k") && !(k > 0.0)) v.push_back("k must be > 0 (got " + num(k) + ")");
  if (finite(delta, "delta") && delta < 0.0) v.push_back("delta must be >= 0 (got " + num(delta) + ")");
  if (finite(eta, "eta") && eta < 0.0) v.push_back("eta must be >= 0 (got " + num(eta) + ")");
  if (finite(p, "p") && !(p > 1.0)) v.push_back("p must be > 1 (got " + num(p) + ")");
  if (finite(q, "q") && !(q > 1.0)) v.push_back("q must be > 1 (got " + num(q) + ")");
  if (finite(n, "n") && !(n > 1.0)) v.push_back("n must be > 1 (got " + num(n) + ")");
  if (finite(m, "m") && m < 0.0) v.push_back("m must be >= 0 (got " + num(m) + ")");
  if (q < p) v.push_back("q >= p required (got p=" + num(p) + ", q=" + num(q) + ")");
  if (m + n < q) v.push_back("m + n >= q required (got m+n=" + num(m + n) + ", q=" + num(q) + ")");
  return v;
}

void ModelParams::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

double ModelParams::effective_gamma() const noexcept {
  return hurst.is_brownian() ? gamma - 0.5 * eta * eta : gamma;
}

InitialDatum InitialDatum::multiple_of_phi(const spectral::SpectralBasis& basis, double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("initial datum b*phi needs b > 0 (got " + num(b) + ")");
  InitialDatum f;
  f.kind = Kind::multiple_of_phi;
  f.b = b;
  f.values = basis.phi();
  for (auto& x : f.values) x *= b;
  return f;
}

InitialDatum InitialDatum::custom(const spectral::SpectralBasis& basis, std::vector<double> values) {
  const auto& dom = basis.domain();
  std::vector<std::string> v;
  if (values.size() != dom.node_count()) {
    throw ConfigError("initial datum has " + std::to_string(values.size()) + " values, grid has " +
                      std::to_string(dom.node_count()) + " nodes");
  }
  bool nonzero = false, negative = false, boundary = false, nonfinite = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) nonfinite = true;
    if (values[i] < 0.0) negative = true;
    if (values[i] != 0.0) nonzero = true;
    if (dom.on_boundary(i) && values[i] != 0.0) boundary = true;
  }
  if (nonfinite) v.push_back("initial datum must be finite");
  if (negative) v.push_back("initial datum must be non-negative");
  if (boundary) v.push_back("initial datum must vanish on the boundary");
  if (!nonzero) v.push_back("initial datum must not be identically zero");
  if (!v.empty()) throw ConfigError(std::move(v));
  InitialDatum f;
  f.kind = Kind::custom;
  f.values = std::move(values);
  return f;
}

TransformResult transform(std::span<const double> f, double path_value, double eta, Direction dir) {
  if (!std::isfinite(path_value)) throw DomainError("transform: path value must be finite");
  const double expo = (dir == Direction::u_to_v ? -eta : eta) * path_value;
  TransformResult out;
  out.values.resize(f.size());
  const double factor = std::exp(expo);
  if (std::isfinite(factor) && factor > 0.0) {
    for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = f[i] * factor;
    return out;
  }
  out.log_space = true;
  out.log_values.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.log_values[i] = (f[i] > 0.0 ? std::log(f[i]) : -std::numeric_limits<double>::infinity()) + expo;
    out.values[i] = std::exp(out.log_values[i]);
  }
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::global_until_horizon: return "global_until_horizon";
    case Verdict::blew_up: return "blew_up";
    case Verdict::step_collapse: return "step_collapse";
  }
  return "unknown";
}

double mass_functional(std::span<const double> v, const spectral::SpectralBasis& basis) {
  const auto& phi = basis.phi();
  if (v.size() != phi.size()) throw ConfigError("node function has the wrong length");
  const auto& dom = basis.domain();
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += dom.quadrature_weight(i) * v[i] * phi[i];
  return acc;
}

SolutionTrace solve(const ModelParams& params, const spectral::SpectralBasis& basis, const InitialDatum& f,
                    const fbm::FbmPath& path, const SolverControls& c) {
  params.validate();
  const auto& dom = basis.domain();
  std::vector<std::string> bad;
  if (path.hurst.value() != params.hurst.value())
    bad.push_back("path Hurst index " + num(path.hurst.value()) + " differs from the model's " +
                  num(params.hurst.value()));
  const double horizon = c.horizon > 0.0 ? c.horizon : path.grid.t_max();
  if (horizon > path.grid.t_max() * (1.0 + 1e-12))
    bad.push_back("path covers [0, " + num(path.grid.t_max()) + "] but the horizon is " + num(horizon));
  if (!(c.output_dt > 0.0)) bad.push_back("output_dt must be > 0");
  else if (path.grid.dt() > 4.0 * c.output_dt)
    bad.push_back("path grid step " + num(path.grid.dt()) + " is more than 4x coarser than output_dt " +
                  num(c.output_dt));
  if (!(c.v_max > 0.0)) bad.push_back("v_max must be > 0");
  if (!(c.dt_min > 0.0)) bad.push_back("dt_min must be > 0");
  if (!(c.cfl > 0.0 && c.cfl <= 1.0)) bad.push_back("cfl must lie in (0, 1]");
  if (!(c.safety > 0.0 && c.safety < 1.0)) bad.push_back("safety must lie in (0, 1)");
  if (f.values.size() != dom.node_count()) bad.push_back("initial datum does not match the grid");
  if (!bad.empty()) throw ConfigError(std::move(bad));

  const std::size_t nn = dom.node_count();
  const std::size_t nxn = dom.nodes_x();
  const bool rect = dom.shape == spectral::Shape::rectangle;
  const double ihx2 = 1.0 / (dom.hx() * dom.hx());
  const double ihy2 = rect ? 1.0 / (dom.hy() * dom.hy()) : 0.0;
  const double dt_diff = c.cfl / (2.0 * ihx2 + 2.0 * ihy2);
  const double volume = dom.volume();
  const double g = params.effective_gamma();
  const auto& P = params;

  std::vector<double> weight(nn), interior(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    weight[i] = dom.quadrature_weight(i);
    interior[i] = dom.on_boundary(i) ? 0.0 : 1.0;
  }

  // Output and snapshot stop times.
  std::vector<double> outputs;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * c.output_dt;
    if (t >= horizon * (1.0 - 1e-12)) break;
    outputs.push_back(t);
  }
  outputs.push_back(horizon);
  std::vector<double> snaps;
  for (double t : c.snapshot_times)
    if (t >= 0.0 && t <= horizon) snaps.push_back(t);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

  SolutionTrace tr;
  std::vector<double> v = f.values, rhs(nn);
  for (std::size_t i = 0; i < nn; ++i) v[i] *= interior[i];

  double t = 0.0;
  std::size_t next_out = 0, next_snap = 0;
  auto sup_of = [&](const std::vector<double>& x) { return *std::max_element(x.begin(), x.end()); };
  auto record = [&](double at) {
    tr.times.push_back(at);
    tr.J.push_back(mass_functional(v, basis));
    tr.sup_norm.push_back(sup_of(v));
    if (c.keep_states) tr.states.push_back({at, v});
  };
  auto take_stops = [&]() {
    // Steps land exactly on stop times, so t is the stop time here.
    for (; next_out < outputs.size() && outputs[next_out] <= t; ++next_out) record(t);
    for (; next_snap < snaps.size() && snaps[next_snap] <= t; ++next_snap) tr.snapshots.push_back({t, v});
  };
  take_stops();

  Snapshot last_finite{t, v};
  while (t < horizon) {
    const double S = sup_of(v);
    if (S >= c.v_max) {
      tr.verdict = Verdict::blew_up;
      tr.tau_num = t;
      break;
    }
    const double B = path.at(t);
    const double ep = std::exp((P.p - 1.0) * P.eta * B);
    const double eq = std::exp((P.q - 1.0) * P.eta * B);
    const double emn = std::exp((P.m + P.n - 1.0) * P.eta * B);

    double iq = 0.0, in = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
      if (interior[i] == 0.0) continue;
      iq += weight[i] * power(v[i], P.q);
      in += weight[i] * power(v[i], P.n);
    }

    // Bound on the relative growth rate of the reaction terms, evaluated at the current sup.
    double rate = std::abs(g) + P.k * P.p * ep * power(S, P.p - 1.0) + P.q * eq * volume * power(S, P.q - 1.0);
    if (P.delta > 0.0) {
      double r = P.n * power(S, P.m) * volume * power(S, P.n - 1.0);
      if (P.m > 0.0) r += P.m * power(S, P.m - 1.0) * volume * power(S, P.n);
      rate += P.delta * emn * r;
    }
    const double dt_react = rate > 0.0 ? c.safety / rate : std::numeric_limits<double>::infinity();
    if (dt_react < c.dt_min) {
      tr.verdict = Verdict::step_collapse;
      tr.tau_num = t;
      break;
    }
    double dt = std::min(dt_diff, dt_react);
    double stop = horizon;
    if (next_out < outputs.size()) stop = std::min(stop, outputs[next_out]);
    if (next_snap < snaps.size()) stop = std::min(stop, snaps[next_snap]);
    bool hit_stop = false;
    if (t + dt >= stop) {
      dt = stop - t;
      hit_stop = true;
    }

    const double src_q = eq * iq;
    const double src_n = P.delta * emn * in;
    for (std::size_t idx = 0; idx < nn; ++idx) {
      if (interior[idx] == 0.0) {
        rhs[idx] = 0.0;
        continue;
      }
      double lap = (v[idx - 1] - 2.0 * v[idx] + v[idx + 1]) * ihx2;
      if (rect) lap += (v[idx - nxn] - 2.0 * v[idx] + v[idx + nxn]) * ihy2;
      const double vi = v[idx];
      rhs[idx] = lap + g * vi + src_q - P.k * ep * power(vi, P.p) + src_n * power(vi, P.m);
    }
    bool finite = true;
    for (std::size_t idx = 0; idx < nn; ++idx) {
      double nv = v[idx] + dt * rhs[idx];
      if (!std::isfinite(nv)) finite = false;
      if (nv < 0.0) {
        tr.min_before_clip = std::min(tr.min_before_clip, nv);
        ++tr.clipped;
        nv = 0.0;
      }
      v[idx] = nv;
    }
    if (!finite)
      throw SolverFault("non-finite state at t=" + num(t + dt) + " after " + std::to_string(tr.steps) + " steps",
                        last_finite);
    t = hit_stop ? stop : t + dt;
    ++tr.steps;
    if (tr.steps % 64 == 0) last_finite = {t, v};
    take_stops();
    if (tr.steps >= c.max_steps) throw NumericalError("solver exceeded max_steps=" + std::to_string(c.max_steps));
  }
  if (tr.verdict != Verdict::global_until_horizon && (tr.times.empty() || tr.times.back() < t)) {
    tr.times.push_back(t);
    tr.J.push_back(mass_functional(v, basis));
    tr.sup_norm.push_back(sup_of(v));
  }
  tr.end_time = t;
  tr.final_state = v;
  return tr;
}

ComparisonVerdict comparison_probe(const SolutionTrace& lower, const SolutionTrace& upper, double tol) {
  ComparisonVerdict out;
  std::size_t j = 0;
  for (const auto& a : lower.states) {
    while (j < upper.states.size() && upper.states[j].t < a.t - 1e-12) ++j;
    if (j == upper.states.size()) break;
    const auto& b = upper.states[j];
    if (std::abs(b.t - a.t) > 1e-12 * std::max(1.0, a.t)) continue;
    if (a.v.size() != b.v.size()) throw ConfigError("comparison_probe: traces live on different grids");
    ++out.compared_times;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
      const double excess = a.v[i] - b.v[i];
      out.max_excess = std::max(out.max_excess, excess);
      if (excess > tol && !out.first_violation_time) {
        out.ordered = false;
        out.first_violation_time = a.t;
      }
    }
  }
  return out;
}

void write_trace_csv(const SolutionTrace& trace, std::ostream& out) {
  csv::Writer w(out);
  w.header({"t", "J", "sup_norm"});
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    w.field(trace.times[i]).field(trace.J[i]).field(trace.sup_norm[i]);
    w.end_row();
  }
}

void write_snapshot_csv(const Snapshot& snap, const spectral::SpectralBasis& basis, std::ostream& out) {
  csv::Writer w(out);
  const bool rect = basis.domain().shape == spectral::Shape::rectangle;
  if (rect)
    w.header({"x", "y", "v"});
  else
    w.header({"x", "v"});
  for (std::size_t i = 0; i < snap.v.size(); ++i) {
    const auto xy = basis.domain().node(i);
    w.field(xy[0]);
    if (rect) w.field(xy[1]);
    w.field(snap.v[i]);
    w.end_row();
  }
}

}  // namespace blowup::rpde
