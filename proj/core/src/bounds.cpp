#include "blowup/bounds.h"

#include "blowup/errors.h"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace blowup::bounds {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void require_grid_match(const fbm::FbmPath& path, const fbm::TimeGrid& g, const char* what) {
  if (g.size() != path.grid.size() || g.t_max() != path.grid.t_max())
    throw ConfigError(std::string(what) + " was built on a different time grid than the path");
}

void require_d_gt_k(const rpde::ModelParams& params, const spectral::SpectralBasis& basis) {
  const double vol = basis.domain().volume();
  if (!(vol > params.k))
    throw ConfigError("lower bound needs |D| > k (|D| = " + num(vol) + ", k = " + num(params.k) + ")");
}

// int_{t0}^{t1} exp(E(s)) ds for E linear from e0 to e1.
double exp_linear_integral(double dt, double e0, double e1) {
  const double d = e1 - e0;
  if (std::abs(d) < 1e-12) return dt * std::exp(0.5 * (e0 + e1));
  if (d > 0.0) return dt * std::exp(e1) * (-std::expm1(-d)) / d;
  return dt * std::exp(e0) * (-std::expm1(d)) / (-d);
}

// Exact integral of exp(c(B) B + d s) over [t0, t1] with B linear; c = c_pos for B >= 0, c_neg otherwise.
double segment_integral(double t0, double t1, double b0, double b1, double c_pos, double c_neg, double d) {
  if (!(t1 > t0)) return 0.0;
  auto piece = [&](double s0, double s1, double x0, double x1) {
    const double c = (0.5 * (x0 + x1) >= 0.0) ? c_pos : c_neg;
    return exp_linear_integral(s1 - s0, c * x0 + d * s0, c * x1 + d * s1);
  };
  if ((b0 < 0.0 && b1 > 0.0) || (b0 > 0.0 && b1 < 0.0)) {
    const double tz = t0 + (t1 - t0) * b0 / (b0 - b1);
    return piece(t0, tz, b0, 0.0) + piece(tz, t1, 0.0, b1);
  }
  return piece(t0, t1, b0, b1);
}

// Cumulative exact integral of exp(c(B) B + d s) along the piecewise-linear path.
struct PathExpIntegral {
  const fbm::FbmPath& path;
  double c_pos, c_neg, d;
  std::vector<double> cum;  // at the nodes

  PathExpIntegral(const fbm::FbmPath& p, double cp, double cn, double dd) : path(p), c_pos(cp), c_neg(cn), d(dd) {
    const auto& g = path.grid;
    cum.assign(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i)
      cum[i] = cum[i - 1] + segment_integral(g.node(i - 1), g.node(i), path.values[i - 1], path.values[i], c_pos,
                                             c_neg, d);
  }

  double at(double t) const {
    const auto& g = path.grid;
    if (t <= 0.0) return 0.0;
    if (t >= g.t_max()) return cum.back();
    const std::size_t i = std::min(static_cast<std::size_t>(t / g.dt()), g.n_steps() - 1);
    const double t0 = g.node(i);
    return cum[i] + segment_integral(t0, t, path.values[i], path.at(t), c_pos, c_neg, d);
  }

  // First t with at(t) >= target, or nullopt.
  std::optional<double> reach(double target) const {
    if (target <= 0.0) return 0.0;
    const auto& g = path.grid;
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (cum[i] >= target) {
        double lo = g.node(i - 1), hi = g.node(i);
        for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(1.0, hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          (at(mid) >= target ? hi : lo) = mid;
        }
        return hi;
      }
    }
    return std::nullopt;
  }
};

double max_exp_log(double eta_b, double a1, double a2) { return std::max(a1 * eta_b, a2 * eta_b); }
double min_exp_log(double eta_b, double a1, double a2) { return std::min(a1 * eta_b, a2 * eta_b); }

}  // namespace

StoppingTime first_crossing_increments(const fbm::TimeGrid& grid, std::span<const double> inc, double threshold) {
  if (inc.size() + 1 != grid.size()) throw ConfigError("increments do not match the time grid");
  StoppingTime st;
  st.threshold = threshold;
  if (!(threshold > 0.0)) {
    st.value = 0.0;
    st.vacuous = true;
    st.note = "threshold is not positive; the crossing happens at t = 0";
    return st;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    const double d = inc[i];
    if (acc + d >= threshold) {
      const double frac = std::isfinite(d) && d > 0.0 ? (threshold - acc) / d : 0.0;
      st.value = grid.node(i) + std::clamp(frac, 0.0, 1.0) * grid.dt();
      st.integral_at_end = threshold;
      return st;
    }
    acc += d;
  }
  st.integral_at_end = acc;
  return st;
}

StoppingTime first_crossing(const fbm::TimeGrid& grid, std::span<const double> g, double threshold) {
  if (g.size() != grid.size()) throw ConfigError("integrand does not match the time grid");
  std::vector<double> inc(grid.n_steps());
  const double h = grid.dt();
  for (std::size_t i = 0; i < inc.size(); ++i) inc[i] = 0.5 * h * (g[i] + g[i + 1]);
  return first_crossing_increments(grid, inc, threshold);
}

double domain_m(const rpde::ModelParams& params, const spectral::SpectralBasis& basis) {
  const double vol = basis.domain().volume();
  return std::max(vol, params.delta * vol);
}

LowerBoundInputs lower_bound_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                    double f_sup) {
  if (!(f_sup > 0.0) || !std::isfinite(f_sup)) throw ConfigError("sup of the initial datum must be positive");
  LowerBoundInputs in;
  in.M = domain_m(params, basis);
  in.f_sup = f_sup;
  in.exponent_sum = params.m + params.n + params.q - 1.0;
  in.threshold = 1.0 / (2.0 * in.M * in.exponent_sum * std::pow(f_sup, params.m + params.n - 1.0));
  return in;
}

SemigroupEnvelope::SemigroupEnvelope(const spectral::SpectralBasis& basis, double gamma, const fbm::TimeGrid& grid)
    : grid_(grid), values_(spectral::semigroup_sup_norm_table(basis, gamma, grid.nodes())) {}

SemigroupEnvelope SemigroupEnvelope::unit(double gamma, const fbm::TimeGrid& grid) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(gamma * grid.node(i));
  return SemigroupEnvelope(grid, std::move(v));
}

StoppingTime tau_lower_star(const fbm::FbmPath& path, const rpde::ModelParams& params,
                            const spectral::SpectralBasis& basis, double f_sup, const SemigroupEnvelope* envelope) {
  params.validate();
  require_d_gt_k(params, basis);
  const auto in = lower_bound_inputs(params, basis, f_sup);
  std::optional<SemigroupEnvelope> own;
  if (!envelope) {
    own.emplace(basis, params.effective_gamma(), path.grid);
    envelope = &*own;
  }
  require_grid_match(path, envelope->grid(), "semigroup envelope");
  const double e_mn = params.m + params.n - 1.0, e_q = params.q - 1.0;
  const auto env = envelope->values();
  std::vector<double> g(path.grid.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double eb = params.eta * path.values[i];
    g[i] = std::exp(max_exp_log(eb, e_q, e_mn)) * std::pow(env[i], e_mn);
  }
  return first_crossing(path.grid, g, in.threshold);
}

const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::global_b2: return "global_b2";
    case CertificateKind::global_K: return "global_K";
    case CertificateKind::admissible_b: return "admissible_b";
    case CertificateKind::none: return "none";
  }
  return "none";
}

GlobalCertificates global_certificate_b2(const fbm::FbmPath& path, const rpde::ModelParams& params,
                                         const spectral::SpectralBasis& basis, double f_sup, double c0,
                                         double c_kernel, const SemigroupEnvelope* envelope) {
  params.validate();
  require_d_gt_k(params, basis);
  const auto in = lower_bound_inputs(params, basis, f_sup);
  const double g_eff = params.effective_gamma();
  const double e_mn = params.m + params.n - 1.0, e_q = params.q - 1.0;
  const auto& grid = path.grid;
  const double h = grid.dt();

  std::optional<SemigroupEnvelope> own;
  if (!envelope) {
    own.emplace(basis, g_eff, grid);
    envelope = &*own;
  }
  require_grid_match(path, envelope->grid(), "semigroup envelope");
  const auto env = envelope->values();

  GlobalCertificates out;
  {
    auto& r = out.b2;
    double acc = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double gi = std::exp(max_exp_log(params.eta * path.values[i], e_q, e_mn)) * std::pow(env[i], e_mn);
      if (i > 0) acc += 0.5 * h * (prev + gi);
      prev = gi;
    }
    // Non-decreasing in t, so the max over the horizon is the final value.
    r.witness = 2.0 * in.exponent_sum * in.M * std::pow(f_sup, e_mn) * acc;
    r.threshold = 1.0;
    r.margin = 1.0 - r.witness;
    r.granted = r.margin > 0.0;
    r.kind = r.granted ? CertificateKind::global_b2 : CertificateKind::none;
    r.diagnostic = "accumulated over [0, " + num(grid.t_max()) + "]";
  }
  {
    auto& r = out.K;
    const double lam1 = basis.lambda1();
    if (!(lam1 > g_eff)) {
      r.refused = true;
      r.kind = CertificateKind::none;
      r.margin = -kInfinity;
      r.witness = kInfinity;
      r.diagnostic = "lambda1 <= effective gamma: the infinite-horizon integral does not decay";
      return out;
    }
    if (!(c0 > 0.0)) throw ConfigError("C0 must be positive");
    const double rate = (lam1 - g_eff) * e_mn;
    const double s = basis.phi_sup();
    const double kcal = 2.0 * in.M * in.exponent_sum * std::pow(c0 * s * s * (1.0 + c_kernel), e_mn);
    double acc = 0.0, prev = 0.0, last = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid.node(i);
      const double gi = std::exp(max_exp_log(params.eta * path.values[i], e_q, e_mn) - rate * t);
      if (i > 0) acc += 0.5 * h * (prev + gi);
      prev = gi;
      last = gi;
      if (gi < 1e-16 && t > 0.0) break;
    }
    // Beyond the truncation point the path is frozen at its last value and the exponential envelope decays.
    r.tail = last / rate;
    r.clean_truncation = last < 1e-16;
    r.witness = kcal * (acc + r.tail);
    r.threshold = 1.0;
    r.margin = 1.0 - r.witness;
    r.granted = r.margin > 0.0;
    r.kind = r.granted ? CertificateKind::global_K : CertificateKind::none;
    r.diagnostic = r.clean_truncation ? "integrand fell below 1e-16"
                                      : "horizon-limited: tail estimated with the path frozen at the horizon";
  }
  return out;
}

namespace {

double brownian_or_lambda(const rpde::ModelParams& params, const spectral::SpectralBasis& basis) {
  return params.hurst.is_brownian() ? basis.lambda1() + params.lambda_shift() : basis.lambda1();
}

struct AdmissibilityRhs {
  std::array<double, 3> rhs;
  std::array<double, 3> b_exponent_coef;  // c_i with lhs_i = b^{q-p} e^{-c_i eta B*}
};

AdmissibilityRhs admissibility_rhs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis) {
  const double c1 = basis.phi_sup();
  const double vol = basis.domain().volume();
  const double dpow = std::pow(vol, params.q - 1.0);
  const double lam = brownian_or_lambda(params, basis);
  const double p = params.p, q = params.q;
  AdmissibilityRhs r;
  r.rhs[0] = (params.k * std::pow(c1, p) + lam * c1) * dpow;
  r.rhs[1] = params.k * std::pow(c1, p) * dpow;
  if (q > p) {
    const double e = (q - p) / p;
    r.rhs[2] = 2.0 * params.k * std::pow(basis.integrate_phi_power(q / (q - p)), e) /
               std::pow(basis.integrate_phi_power(p + 1.0), e);
  } else {
    // q -> p limit: the L^{q/(q-p)} norm tends to the sup norm.
    r.rhs[2] = 2.0 * params.k * c1;
  }
  r.b_exponent_coef = {params.m + params.n - 1.0, q - p, q - 1.0};
  return r;
}

}  // namespace

AdmissibilityReport b_admissible(double b, double runsup, const rpde::ModelParams& params,
                                 const spectral::SpectralBasis& basis) {
  const auto r = admissibility_rhs(params, basis);
  AdmissibilityReport rep;
  rep.brownian_shift = params.hurst.is_brownian();
  const double bq = std::pow(b, params.q - params.p);
  bool ok = b > 1.0;
  for (int i = 0; i < 3; ++i) {
    rep.lhs[i] = bq * std::exp(-r.b_exponent_coef[i] * params.eta * runsup);
    rep.rhs[i] = r.rhs[i];
    rep.margins[i] = rep.lhs[i] - rep.rhs[i];
    if (!(rep.margins[i] >= 0.0)) ok = false;
  }
  rep.admissible = ok;
  rep.minimal_b = minimal_admissible_b(runsup, params, basis);
  return rep;
}

double minimal_admissible_b(double runsup, const rpde::ModelParams& params, const spectral::SpectralBasis& basis) {
  const auto r = admissibility_rhs(params, basis);
  const double dqp = params.q - params.p;
  if (dqp <= 0.0) {
    for (int i = 0; i < 3; ++i)
      if (std::exp(-r.b_exponent_coef[i] * params.eta * runsup) < r.rhs[i]) return kInfinity;
    return 1.0;
  }
  double b = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double logb = (std::log(r.rhs[i]) + r.b_exponent_coef[i] * params.eta * runsup) / dqp;
    b = std::max(b, std::exp(logb));
  }
  return b;
}

double admissible_until(double b, const fbm::FbmPath& path, const rpde::ModelParams& params,
                        const spectral::SpectralBasis& basis) {
  const auto rs = fbm::running_sup(path.values);
  double last = -1.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    // running sup is non-decreasing, so the first failure ends the window
    if (!b_admissible(b, rs[i], params, basis).admissible) break;
    last = path.grid.node(i);
  }
  return last;
}

UpperBoundInputs upper_bound_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                    const rpde::InitialDatum& f, double eps0_fraction) {
  params.validate();
  const double p = params.p, q = params.q, m = params.m, n = params.n, mn = m + n;
  if (!(q > p)) throw ConfigError("upper bounds need q > p (got p = " + num(p) + ", q = " + num(q) + ")");
  if (!(eps0_fraction > 0.0 && eps0_fraction <= 1.0)) throw ConfigError("eps0 fraction must lie in (0, 1]");
  UpperBoundInputs in;
  in.J0 = rpde::mass_functional(f.values, basis);
  if (f.kind == rpde::InitialDatum::Kind::multiple_of_phi) {
    in.b = f.b;
  } else {
    double b = kInfinity;
    const auto& phi = basis.phi();
    for (std::size_t i = 0; i < phi.size(); ++i)
      if (!basis.domain().on_boundary(i) && phi[i] > 0.0) b = std::min(b, f.values[i] / phi[i]);
    in.b = b;
  }
  in.int_q_over_qp = basis.integrate_phi_power(q / (q - p));
  in.int_n_over_n1 = basis.integrate_phi_power(n / (n - 1.0));
  in.int_p_plus_1 = basis.integrate_phi_power(p + 1.0);
  const double iq = std::pow(in.int_q_over_qp, (p - q) / p);
  const double in1 = std::pow(in.int_n_over_n1, 1.0 - n);
  in.Ntilde = 0.5 * iq + params.delta * in1;
  if (mn > q * (1.0 + 1e-12)) {
    const double r = mn - q;
    in.A0 = (r / mn) * std::pow(mn / q, q / r);
    const double log_cap = (q / r) * (q * std::log(in.J0) - std::log(in.A0));
    in.eps0_cap = std::exp(log_cap);
    in.eps0 = eps0_fraction * in.eps0_cap;
    // eps0 - A0 eps0^{mn/r} / J0^q, the second term through logs
    const double log_t2 = std::log(in.A0) + (mn / r) * std::log(in.eps0) - q * std::log(in.J0);
    in.eps_coef = in.eps0 - std::exp(log_t2);
  } else {
    in.A0 = 0.0;
    in.eps0_cap = kInfinity;
    in.eps0 = 1.0;
    in.eps_coef = 1.0;
  }
  in.Dcoef = iq + params.delta * in.eps_coef * in1;
  in.Dcoef_ode = 0.5 * iq + params.delta * in.eps_coef * in1;
  in.rho1 = params.eta * (q - 1.0);
  return in;
}

UpperStoppingTime tau_upper_case1(const fbm::FbmPath& path, const UpperBoundInputs& in,
                                  const rpde::ModelParams& params, const spectral::SpectralBasis& basis) {
  params.validate();
  const double mu = params.q;
  if (std::abs(params.m + params.n - mu) > 1e-12 * mu)
    throw ConfigError("case 1 upper bound needs m + n = q");
  if (!(in.b > 1.0)) throw ConfigError("upper bound needs f >= b phi with b > 1 (b = " + num(in.b) + ")");
  UpperStoppingTime out;
  out.valid_until = admissible_until(in.b, path, params, basis);
  if (out.valid_until < 0.0)
    throw ConfigError("b = " + num(in.b) + " is not admissible at t = 0 (minimal b = " +
                      num(minimal_admissible_b(0.0, params, basis)) + ")");
  const double a = -basis.lambda1() + params.effective_gamma();
  const double thr = std::pow(in.J0, 1.0 - mu) / ((mu - 1.0) * in.Ntilde);
  std::vector<double> gp(path.grid.size()), gm(path.grid.size());
  for (std::size_t i = 0; i < gp.size(); ++i) {
    const double t = path.grid.node(i);
    const double eb = params.eta * (mu - 1.0) * path.values[i];
    gp[i] = std::exp(eb + a * (mu - 1.0) * t);
    gm[i] = std::exp(eb - a * (mu - 1.0) * t);
  }
  out.printed = first_crossing(path.grid, gp, thr);
  out.mirrored = first_crossing(path.grid, gm, thr);
  return out;
}

UpperStoppingTime tau_upper_case2(const fbm::FbmPath& path, const UpperBoundInputs& in,
                                  const rpde::ModelParams& params, const spectral::SpectralBasis& basis) {
  params.validate();
  const double q = params.q, mn = params.m + params.n;
  if (!(mn > q)) throw ConfigError("case 2 upper bound needs m + n > q");
  if (!(in.b > 1.0)) throw ConfigError("upper bound needs f >= b phi with b > 1 (b = " + num(in.b) + ")");
  if (in.eps0 > in.eps0_cap) throw ConfigError("eps0 exceeds its cap");
  UpperStoppingTime out;
  out.valid_until = admissible_until(in.b, path, params, basis);
  if (out.valid_until < 0.0)
    throw ConfigError("b = " + num(in.b) + " is not admissible at t = 0 (minimal b = " +
                      num(minimal_admissible_b(0.0, params, basis)) + ")");
  const double a = -basis.lambda1() + params.effective_gamma();
  if (a == 0.0) {
    out.printed.note = out.mirrored.note = "-lambda1 + gamma = 0: the printed threshold is singular";
    return out;
  }
  const double thr = 2.0 * std::pow(in.J0, 1.0 - q) / ((q - 1.0) * a * in.Dcoef);
  std::vector<double> gp(path.grid.size()), gm(path.grid.size());
  for (std::size_t i = 0; i < gp.size(); ++i) {
    const double t = path.grid.node(i);
    const double eb = min_exp_log(params.eta * path.values[i], q - 1.0, mn - 1.0);
    gp[i] = std::exp(eb - a * (q - 1.0) * t);
    gm[i] = std::exp(eb + a * (q - 1.0) * t);
  }
  out.printed = first_crossing(path.grid, gp, thr);
  out.mirrored = first_crossing(path.grid, gm, thr);
  if (thr <= 0.0) out.printed.note = out.mirrored.note = "threshold " + num(thr) + " is not positive";
  else if (in.Dcoef <= 0.0) out.printed.note = out.mirrored.note = "bracket D = " + num(in.Dcoef) + " is not positive";
  return out;
}

double a1_coefficient(const UpperBoundInputs& in, const rpde::ModelParams& params,
                      const spectral::SpectralBasis& basis, bool printed) {
  const double q = params.q;
  const double rate = printed ? -basis.lambda1() + params.gamma : basis.lambda1() + params.lambda_shift();
  const double den = (q - 1.0) * rate * in.Dcoef;
  if (den == 0.0) return kInfinity;
  return 2.0 * std::pow(in.J0, 1.0 - q) / den;
}

SigmaBounds sigma_bounds_h_half(const fbm::FbmPath& path, const rpde::ModelParams& params,
                                const spectral::SpectralBasis& basis, double f_sup, const UpperBoundInputs& in) {
  params.validate();
  if (!params.hurst.is_brownian() || !path.hurst.is_brownian())
    throw ConfigError("sigma bounds are defined for H = 1/2 only");
  require_d_gt_k(params, basis);
  const double q = params.q, e_mn = params.m + params.n - 1.0, e_q = q - 1.0;
  const double lam_shift = params.lambda_shift();
  const auto& grid = path.grid;
  SigmaBounds out;

  const double M = domain_m(params, basis);
  const double thr_star = 1.0 / (2.0 * M * e_mn * std::pow(f_sup, e_mn));
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = std::exp(max_exp_log(params.eta * path.values[i], e_q, e_mn) - lam_shift * e_mn * grid.node(i));
  out.sigma_star = first_crossing(grid, g, thr_star);

  // X(s) = eta (q-1) W(s) - (lambda1 + Lambda)(q-1) s is piecewise linear; integrate e^{-X} 1{X >= 0} exactly.
  const double lr = basis.lambda1() + lam_shift;
  std::vector<double> inc(grid.n_steps());
  auto X = [&](std::size_t i) { return params.eta * e_q * path.values[i] - lr * e_q * grid.node(i); };
  for (std::size_t i = 0; i < inc.size(); ++i) {
    const double x0 = X(i), x1 = X(i + 1), h = grid.dt();
    if (x0 >= 0.0 && x1 >= 0.0) {
      inc[i] = exp_linear_integral(h, -x0, -x1);
    } else if (x0 < 0.0 && x1 < 0.0) {
      inc[i] = 0.0;
    } else {
      const double xp = std::max(x0, x1);
      const double len = h * xp / std::abs(x1 - x0);
      inc[i] = exp_linear_integral(len, 0.0, -xp);
    }
  }
  out.a1_printed = a1_coefficient(in, params, basis, true);
  out.a1_variant = a1_coefficient(in, params, basis, false);
  out.sigma_star_star = first_crossing_increments(grid, inc, out.a1_printed);
  out.sigma_star_star_variant = first_crossing_increments(grid, inc, out.a1_variant);
  return out;
}

ComparisonOdeTrace comparison_ode(const fbm::FbmPath& path, const UpperBoundInputs& in,
                                  const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                  std::span<const double> times, const ComparisonOdeOptions& options) {
  if (!(in.J0 > 0.0)) throw ConfigError("comparison ODE needs I(0) = J(0) > 0");
  for (double t : times)
    if (t < 0.0 || t > path.grid.t_max()) throw DomainError("comparison ODE output time outside the path horizon");
  const double a = -basis.lambda1() + params.effective_gamma();
  const bool case1 = options.mode == OdeCase::case1;
  const double beta = params.q;  // mu in case 1
  const double coef = case1 ? in.Ntilde : in.Dcoef_ode;
  // g(t) = exp(c(B) eta B); case 1: c = mu - 1, case 2: min of the two exponentials.
  const double c_pos = params.eta * (beta - 1.0);
  const double c_neg = case1 ? c_pos : params.eta * (params.m + params.n - 1.0);
  const double lead = std::pow(in.J0, 1.0 - beta);

  // I(t) = e^{a t} {J0^{1-beta} - (beta-1) C int_0^t g e^{a(beta-1)s} ds}^{-1/(beta-1)}
  const PathExpIntegral S(path, c_pos, c_neg, a * (beta - 1.0));
  const double target = lead / ((beta - 1.0) * coef);
  ComparisonOdeTrace tr;
  if (coef > 0.0) tr.singularity_time = S.reach(target);
  tr.agreement_cutoff = tr.singularity_time ? 0.99 * *tr.singularity_time : kInfinity;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  tr.times.assign(times.begin(), times.end());
  for (double t : times) {
    const double br = lead - (beta - 1.0) * coef * S.at(t);
    tr.closed_form.push_back(br > 0.0 ? std::exp(a * t) * std::pow(br, -1.0 / (beta - 1.0)) : kInfinity);
  }

  if (!case1) {
    // Printed form: e^{(q-1)a t}{J0^{1-q} - (q-1) a D int g e^{-(q-1)a s}}^{-1/(p-1) or -1/(q-1)}.
    const PathExpIntegral Sp(path, c_pos, c_neg, -a * (beta - 1.0));
    for (double t : times) {
      const double br = lead - (beta - 1.0) * a * coef * Sp.at(t);
      const double pre = std::exp((beta - 1.0) * a * t);
      tr.printed_p_exponent.push_back(br > 0.0 ? pre * std::pow(br, -1.0 / (params.p - 1.0)) : nan);
      tr.printed_q_exponent.push_back(br > 0.0 ? pre * std::pow(br, -1.0 / (beta - 1.0)) : nan);
    }
  }

  // Independent side: dopri5 on I' = a I + C g(t) I^beta, restarted on each path interval.
  namespace ode = boost::numeric::odeint;
  using State = double;
  const auto& grid = path.grid;
  auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(0.0, options.rel_tol);
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return times[l] < times[r]; });
  tr.numeric.assign(times.size(), nan);
  State I = in.J0;
  double t = 0.0;
  std::size_t seg = 0;
  auto advance = [&](double t_end) {
    while (t < t_end) {
      while (seg + 1 < grid.n_steps() && grid.node(seg + 1) <= t) ++seg;
      const double s_end = std::min(t_end, grid.node(seg + 1));
      const double t0 = grid.node(seg), b0 = path.values[seg];
      const double slope = (path.values[seg + 1] - b0) / grid.dt();
      auto rhs = [&](const State& x, State& dx, double s) {
        const double b = b0 + slope * (s - t0);
        const double c = b >= 0.0 ? c_pos : c_neg;
        dx = a * x + coef * std::exp(c * b) * std::pow(x, beta);
      };
      const double h0 = std::max((s_end - t) * 1e-3, 1e-14);
      ode::integrate_adaptive(stepper, rhs, I, t, s_end, h0);
      t = s_end;
      if (t >= grid.node(seg + 1)) ++seg;
      if (seg >= grid.n_steps()) seg = grid.n_steps() - 1;
    }
  };
  for (std::size_t k : order) {
    const double tk = times[k];
    if (tk >= tr.agreement_cutoff) break;
    advance(tk);
    tr.numeric[k] = I;
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] < tr.agreement_cutoff) || !std::isfinite(tr.numeric[k])) continue;
    const double ref = tr.closed_form[k];
    tr.max_rel_diff = std::max(tr.max_rel_diff, std::abs(tr.numeric[k] - ref) / std::abs(ref));
  }
  return tr;
}

}  // namespace blowup::bounds
