#include "blowup/probability.h"

#include "blowup/errors.h"
#include "blowup/special_functions.h"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace blowup::prob {

namespace {

struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

void require_brownian(const rpde::ModelParams& params, const char* what) {
  if (!params.hurst.is_brownian()) throw ConfigError(std::string(what) + " is defined for H = 1/2 only");
}

}  // namespace

GammaLawInputs gamma_law_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                const bounds::UpperBoundInputs& in) {
  require_brownian(params, "the Gamma-law bound");
  const double mu = params.q;
  if (std::abs(params.m + params.n - mu) > 1e-12 * mu) throw ConfigError("the Gamma-law bound needs m + n = q");
  const double rho = params.eta * (mu - 1.0);
  if (!(rho > 0.0)) throw ConfigError("the Gamma-law bound needs eta > 0");
  GammaLawInputs g;
  g.theta1 = 2.0 * (basis.lambda1() + params.lambda_shift()) * (mu - 1.0) / (rho * rho);
  g.threshold = 2.0 * (mu - 1.0) * in.Ntilde / (rho * rho * std::pow(in.J0, 1.0 - mu));
  return g;
}

double gamma_law_case1(const GammaLawInputs& in) {
  if (!(in.theta1 > 0.0)) throw DomainError("theta1 must be positive (needs lambda1 + Lambda > 0)");
  if (in.threshold <= 0.0) return 0.0;
  return special::gamma_p(in.theta1, in.threshold);
}

BesselSeriesInputs bessel_series_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                        const bounds::UpperBoundInputs& in, bool printed_a1) {
  require_brownian(params, "the Bessel-series bound");
  const double q = params.q;
  const double rho = params.eta * (q - 1.0);
  if (!(rho > 0.0)) throw ConfigError("the Bessel-series bound needs eta > 0");
  const double lr = (basis.lambda1() + params.lambda_shift()) * (q - 1.0);
  BesselSeriesInputs b;
  b.order = 2.0 * lr / (rho * rho) - 1.0;
  b.prefactor = 8.0 * lr / (rho * rho);
  b.a1 = bounds::a1_coefficient(in, params, basis, printed_a1);
  b.decay = rho * rho * b.a1 / 8.0;
  return b;
}

SeriesResult bessel_series_case2(BesselSeriesInputs& in) {
  if (!(in.order > -1.0)) throw DomainError("Bessel order must exceed -1");
  if (!(in.a1 > 0.0)) throw DomainError("a1 must be positive");
  SeriesResult r;
  if (std::isinf(in.a1)) return r;
  Kahan sum;
  std::size_t want = std::max<std::size_t>(in.zeros.size(), 16);
  for (std::size_t j = 0;; ++j) {
    if (j >= in.zeros.size()) {
      in.zeros = special::bessel_j_zeros(in.order, want);
      want *= 2;
    }
    const double z = in.zeros[j];
    const double term = std::exp(-in.decay * z * z) / (z * z);
    sum.add(term);
    r.terms = j + 1;
    if (term == 0.0 || term < 1e-14 * sum.sum) {
      // Zeros beyond j are at least `gap` apart, so the tail is dominated by a geometric series.
      const double gap = j > 0 ? std::min(std::numbers::pi, in.zeros[j] - in.zeros[j - 1]) : std::numbers::pi;
      const double zn = z + gap;
      const double first = std::exp(-in.decay * zn * zn) / (zn * zn);
      const double ratio = std::exp(-in.decay * 2.0 * zn * gap);
      r.truncation_bound = in.prefactor * first / (1.0 - ratio);
      break;
    }
  }
  in.n_terms = r.terms;
  r.value = in.prefactor * sum.sum;
  return r;
}

DensityBoundInputs density_bound_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                        double f_sup, bool printed) {
  require_brownian(params, "the density bound");
  const double q = params.q, e_mn = params.m + params.n - 1.0;
  const double rho = params.eta * (q - 1.0);
  if (!(rho > 0.0)) throw ConfigError("the density bound needs eta > 0");
  const double lam = params.lambda_shift();
  DensityBoundInputs d;
  const double M = bounds::domain_m(params, basis);
  const double first = 1.0 / (2.0 * M * e_mn * std::pow(f_sup, e_mn));
  const double second = printed ? 1.0 / ((basis.lambda1() + lam) * (q - 1.0)) : 1.0 / (lam * e_mn);
  d.Ntilde1 = first - second;
  d.shape = 2.0 * lam * e_mn / (rho * rho);
  d.scale = 2.0 / (rho * rho);
  return d;
}

double inverse_gamma_cdf(double shape, double scale, double y) {
  if (y <= 0.0) return 0.0;
  return special::gamma_q(shape, scale / y);
}

DensityBoundResult density_upper_bound(const DensityBoundInputs& in) {
  if (!(in.shape > 0.0) || !(in.scale > 0.0)) throw DomainError("density bound needs positive shape and scale");
  DensityBoundResult r;
  if (!(in.Ntilde1 > 0.0)) {
    r.vacuous = true;
    return r;
  }
  r.value = special::gamma_p(in.shape, in.scale / in.Ntilde1);
  // Direct check: with y = N1/u, the tail is int_0^1 h(N1/u) N1/u^2 du.
  const double a = in.shape, s = in.scale, n1 = in.Ntilde1;
  auto integrand = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double y = n1 / u;
    const double logh = a * std::log(s) - std::lgamma(a) - (a + 1.0) * std::log(y) - s / y;
    return std::exp(logh + std::log(n1) - 2.0 * std::log(u));
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  r.quadrature = ts.integrate(integrand, 0.0, 1.0, 1e-12);
  return r;
}

const char* to_string(NtildeArgument a) { return a == NtildeArgument::bracket ? "bracket" : "threshold"; }

NhEstimate estimate_nh(std::span<const fbm::FbmPath> paths, const rpde::ModelParams& params,
                       const spectral::SpectralBasis& basis, double alpha, double ntilde_arg) {
  if (paths.empty()) throw ConfigError("N(H) estimate needs at least one path");
  if (!(ntilde_arg > 0.0)) throw ConfigError("N(H) needs a positive constant inside the logarithm");
  const double mu = params.q, h = params.hurst.value();
  const double a = -basis.lambda1() + params.gamma;
  const double rho = params.eta * (mu - 1.0);
  const double log_den = std::log(ntilde_arg + 1.0);
  Kahan sum, sum2;
  for (const auto& path : paths) {
    const auto& g = path.grid;
    double acc = 0.0, prev = 0.0, sup = 1.0;  // 1 is the t -> infinity limit
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double t = g.node(i);
      const double e = std::exp(a * (mu - 1.0) * t - 0.5 * rho * rho * std::pow(t, 2.0 * h) + rho * path.values[i]);
      if (i > 0) acc += 0.5 * g.dt() * (prev + e);
      prev = e;
      const double ta = std::pow(t, alpha);
      sup = std::max(sup, (std::log1p(acc) + ta) / (log_den + ta));
    }
    sum.add(sup);
    sum2.add(sup * sup);
  }
  NhEstimate r;
  r.n_paths = paths.size();
  r.t_max = paths.front().grid.t_max();
  const double n = static_cast<double>(paths.size());
  r.mean = sum.sum / n;
  if (paths.size() > 1) r.std_error = std::sqrt(std::max(0.0, (sum2.sum / n - r.mean * r.mean) * n / (n - 1.0)) / n);
  return r;
}

double m_h_printed(double hurst, double alpha, double x) {
  const double r = 2.0 * hurst / alpha;
  return std::pow((alpha - hurst) / alpha, 2.0 - r) * std::pow(std::log(x + 1.0), r - 2.0);
}

double m_h_exact(double hurst, double alpha, double x) {
  return std::pow(hurst / alpha, 2.0 * hurst / alpha) * m_h_printed(hurst, alpha, x);
}

MalliavinResult malliavin_lower_bound(MalliavinBoundInputs in, const rpde::ModelParams& params,
                                      const spectral::SpectralBasis& basis) {
  const double h = params.hurst.value();
  if (!(in.alpha > h)) throw ConfigError("Malliavin bound needs alpha > H");
  if (params.hurst.is_brownian()) throw ConfigError("Malliavin bound needs 1/2 < H < 1");
  if (std::abs(params.m + params.n - params.q) > 1e-12 * params.q) throw ConfigError("Malliavin bound needs m + n = q");
  MalliavinResult r;
  const double lam1 = basis.lambda1();
  if (lam1 < params.gamma) {
    r.certain = true;
    r.value = r.value_corrected = 1.0;
    r.note = "lambda1 < gamma: blow-up in finite time almost surely";
    return r;
  }
  if (lam1 == params.gamma) {
    r.note = "lambda1 = gamma lies outside both cases";
    return r;
  }
  if (!(in.rho1 > 0.0)) throw ConfigError("Malliavin bound needs rho1 = eta (mu - 1) > 0");
  if (in.N_H < 1.0) {
    r.clamped = true;
    r.note = "N(H) below 1 from sampling noise, clamped; the bound is vacuous";
    in.N_H = 1.0;
  }
  const double mp = m_h_printed(h, in.alpha, in.Ntilde_arg);
  const double me = m_h_exact(h, in.alpha, in.Ntilde_arg);
  const double d2 = (in.N_H - 1.0) * (in.N_H - 1.0);
  const double r2 = in.rho1 * in.rho1;
  r.value = -std::expm1(-mp * d2 / (2.0 * r2));
  r.value_corrected = -std::expm1(-d2 / (2.0 * r2 * me));
  return r;
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw ConfigError("Wilson interval needs n > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

McEstimate mc_blowup_probability(std::span<const rpde::Verdict> verdicts) {
  if (verdicts.empty()) throw ConfigError("Monte Carlo estimate needs a non-empty ensemble");
  if (verdicts.size() < 30) throw ConfigError("Monte Carlo estimate needs at least 30 traces");
  McEstimate e;
  e.n = verdicts.size();
  for (auto v : verdicts) {
    if (v == rpde::Verdict::global_until_horizon)
      ++e.censored;
    else
      ++e.blowups;
  }
  e.estimate = static_cast<double>(e.blowups) / static_cast<double>(e.n);
  e.censored_fraction = static_cast<double>(e.censored) / static_cast<double>(e.n);
  e.ci = wilson_interval(e.blowups, e.n);
  return e;
}

McEstimate mc_blowup_probability(std::span<const rpde::SolutionTrace> traces) {
  std::vector<rpde::Verdict> v;
  v.reserve(traces.size());
  double horizon = -1.0;
  for (const auto& t : traces) {
    if (t.verdict == rpde::Verdict::global_until_horizon) {
      if (horizon >= 0.0 && std::abs(t.end_time - horizon) > 1e-9 * std::max(1.0, horizon))
        throw ConfigError("Monte Carlo estimate needs a common horizon");
      horizon = t.end_time;
    }
    v.push_back(t.verdict);
  }
  return mc_blowup_probability(std::span<const rpde::Verdict>(v));
}

KsReport exponential_functional_law_check(double alpha, std::size_t n_paths, std::uint64_t master_seed, double dt) {
  if (!(alpha > 1.0)) throw ConfigError("exponential functional check needs alpha > 1");
  if (n_paths == 0) throw ConfigError("exponential functional check needs paths");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  KsReport r;
  r.alpha = alpha;
  r.n = n_paths;
  r.dt = dt;
  // e^{-2(alpha-1)T} < 1e-8 bounds the mean of the omitted tail.
  r.t_max = std::log(1e8) / (2.0 * (alpha - 1.0));
  const auto steps = static_cast<std::size_t>(std::ceil(r.t_max / dt));
  const double sd = std::sqrt(dt);
  std::vector<double> y(n_paths);
  Kahan mean;
  for (std::size_t p = 0; p < n_paths; ++p) {
    std::mt19937_64 rng(fbm::replicate_seed(master_seed, p));
    std::normal_distribution<double> normal(0.0, 1.0);
    double w = 0.0, prev = 1.0, acc = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
      w += sd * normal(rng);
      const double e = std::exp(2.0 * (w - alpha * static_cast<double>(i) * dt));
      acc += 0.5 * dt * (prev + e);
      prev = e;
    }
    y[p] = acc;
    mean.add(acc);
  }
  r.sample_mean = mean.sum / static_cast<double>(n_paths);
  r.expected_mean = 1.0 / (2.0 * (alpha - 1.0));
  r.ks = ks_distance(y, [&](double v) { return inverse_gamma_cdf(alpha, 0.5, v); });
  r.band = 1.63 / std::sqrt(static_cast<double>(n_paths));
  // CDF shift from the truncation: Markov on the omitted mass plus the density times the shift.
  const double tail = std::exp(-2.0 * (alpha - 1.0) * r.t_max) / (2.0 * (alpha - 1.0));
  const double mode = 0.5 / (alpha + 1.0);
  const double dmax = std::exp(alpha * std::log(0.5) - std::lgamma(alpha) - (alpha + 1.0) * std::log(mode) - 0.5 / mode);
  r.allowance = 2.0 * std::sqrt(tail * dmax);
  r.passed = r.ks < r.band + r.allowance;
  return r;
}

}  // namespace blowup::prob
