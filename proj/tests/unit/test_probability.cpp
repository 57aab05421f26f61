#include "blowup/errors.h"
#include "blowup/probability.h"
#include "blowup/special_functions.h"
#include "oracles.h"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace blowup;
using namespace blowup::prob;

namespace {

rpde::ModelParams brownian_params(double n) {
  rpde::ModelParams p;
  p.k = 0.1;
  p.delta = 0.5;
  p.eta = 0.5;
  p.p = 2.0;
  p.q = 3.0;
  p.m = 1.0;
  p.n = n;
  p.hurst = fbm::HurstParameter(0.5);
  return p;
}

}  // namespace

TEST_CASE("Gamma law: exponential case and limits") {
  GammaLawInputs g{1.0, std::log(2.0)};
  CHECK(gamma_law_case1(g) == doctest::Approx(0.5));
  g.threshold = 0.0;
  CHECK(gamma_law_case1(g) == 0.0);
  g.threshold = 1e3;
  CHECK(gamma_law_case1(g) == doctest::Approx(1.0));
  g.theta1 = -1.0;
  CHECK_THROWS_AS(gamma_law_case1(g), DomainError);
}

TEST_CASE("Gamma CDF matches sampling") {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> d(2.7, 1.0);
  const int n = 200000;
  std::vector<double> s(n);
  for (auto& x : s) x = d(rng);
  std::sort(s.begin(), s.end());
  for (int k = 1; k < 20; ++k) {
    const double x = s[static_cast<std::size_t>(n * k / 20.0)];
    const double pe = k / 20.0, se = std::sqrt(pe * (1 - pe) / n);
    CHECK(std::abs(gamma_law_case1({2.7, x}) - pe) < 4.0 * se + 1.0 / n);
  }
}

TEST_CASE("Gamma-law inputs need the Brownian case") {
  auto p = brownian_params(2.0);
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 32), 31);
  const auto in = bounds::upper_bound_inputs(p, b, rpde::InitialDatum::multiple_of_phi(b, 5.0));
  const auto g = gamma_law_inputs(p, b, in);
  const double rho = p.eta * (p.q - 1.0);
  CHECK(g.theta1 == doctest::Approx(2.0 * (b.lambda1() + p.lambda_shift()) * (p.q - 1.0) / (rho * rho)));
  p.hurst = fbm::HurstParameter(0.7);
  CHECK_THROWS_AS(gamma_law_inputs(p, b, in), ConfigError);
}

TEST_CASE("Bessel series limits") {
  BesselSeriesInputs s;
  s.order = 0.0;
  s.prefactor = 4.0;  // 4 sum 1/j_{0,k}^2 = 1
  s.a1 = 1.0;
  s.decay = 1e-3;
  const auto r = bessel_series_case2(s);
  double direct = 0.0;
  for (int k = 1; k <= 3000; ++k) {
    const double z = boost::math::cyl_bessel_j_zero(0.0, k);
    direct += std::exp(-s.decay * z * z) / (z * z);
  }
  CHECK(r.value == doctest::Approx(4.0 * direct).epsilon(1e-10));
  BesselSeriesInputs closer = s;
  closer.zeros.clear();
  closer.decay = 1e-5;
  const auto rc = bessel_series_case2(closer);
  CHECK(rc.value > r.value);
  CHECK(rc.value < 1.0);
  CHECK(rc.value == doctest::Approx(1.0).epsilon(0.02));
  BesselSeriesInputs big = s;
  big.zeros.clear();
  big.decay = 50.0;
  CHECK(bessel_series_case2(big).value < 1e-100);
  BesselSeriesInputs bad = s;
  bad.a1 = -1.0;
  CHECK_THROWS_AS(bessel_series_case2(bad), DomainError);
}

TEST_CASE("Bessel series from model inputs stays a probability") {
  auto p = brownian_params(3.0);
  p.delta = 0.0;
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 32), 31);
  for (double bb : {2.0, 5.0, 20.0}) {
    const auto in = bounds::upper_bound_inputs(p, b, rpde::InitialDatum::multiple_of_phi(b, bb));
    auto s = bessel_series_inputs(p, b, in, false);
    const auto r = bessel_series_case2(s);
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0 + 1e-9);
  }
}

TEST_CASE("density tail bound") {
  DensityBoundInputs d{1.0, 1.0, 1.0};
  const auto r = density_upper_bound(d);
  // inverse-gamma(1, 1) tail beyond 1 is P(Exp(1) < 1)
  CHECK(r.value == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(r.quadrature == doctest::Approx(r.value).epsilon(1e-8));
  d.Ntilde1 = -1.0;
  CHECK(density_upper_bound(d).vacuous);
  d.Ntilde1 = 1e-6;
  CHECK(density_upper_bound(d).value == doctest::Approx(1.0));
  CHECK(inverse_gamma_cdf(2.0, 3.0, 1e9) == doctest::Approx(1.0));
  CHECK(inverse_gamma_cdf(2.0, 3.0, 0.0) == 0.0);
}

TEST_CASE("Malliavin constant: closed form against a grid search") {
  for (double h : {0.6, 0.75, 0.9})
    for (double alpha : {1.0, 1.5})
      for (double x : {0.5, 3.0}) {
        const double L = std::log(x + 1.0);
        double best = 0.0;
        for (int i = 1; i < 200000; ++i) {
          const double t = i * 1e-4;
          best = std::max(best, std::pow(t, 2 * h) / std::pow(L + std::pow(t, alpha), 2));
        }
        CHECK(m_h_exact(h, alpha, x) == doctest::Approx(best).epsilon(1e-6));
        CHECK(m_h_exact(h, alpha, x) == doctest::Approx(std::pow(h / alpha, 2 * h / alpha) * m_h_printed(h, alpha, x)));
      }
}

TEST_CASE("Malliavin lower bound properties") {
  rpde::ModelParams p;
  p.k = 0.1;
  p.delta = 0.5;
  p.eta = 0.4;
  p.p = 2.0;
  p.q = 3.0;
  p.m = 1.0;
  p.n = 2.0;
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(2.0, 32), 31);
  MalliavinBoundInputs in;
  in.alpha = 1.0;
  in.rho1 = 0.8;
  in.mu = 3.0;
  in.Ntilde = 1.0;
  in.Ntilde_arg = 1.0;
  in.N_H = 1.0;
  in.M_H = m_h_printed(0.75, 1.0, 1.0);
  CHECK(malliavin_lower_bound(in, p, b).value == doctest::Approx(0.0));
  in.N_H = 2.0;
  const double v1 = malliavin_lower_bound(in, p, b).value;
  in.rho1 = 0.4;
  const double v2 = malliavin_lower_bound(in, p, b).value;
  CHECK(v2 > v1);
  CHECK(v1 > 0.0);
  const double me = m_h_exact(0.75, 1.0, 1.0);
  CHECK(malliavin_lower_bound(in, p, b).value_corrected == doctest::Approx(1.0 - std::exp(-1.0 / (2.0 * 0.16 * me))));
  in.N_H = 0.9;
  CHECK(malliavin_lower_bound(in, p, b).clamped);
  auto hot = p;
  hot.gamma = 10.0;
  CHECK(malliavin_lower_bound(in, hot, b).certain);
  CHECK(malliavin_lower_bound(in, hot, b).value == 1.0);
  in.alpha = 0.7;
  CHECK_THROWS_AS(malliavin_lower_bound(in, p, b), ConfigError);
}

TEST_CASE("N(H) is at least one") {
  rpde::ModelParams p;
  p.eta = 0.4;
  p.q = 3.0;
  p.m = 1.0;
  p.n = 2.0;
  p.p = 2.0;
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(2.0, 32), 31);
  std::vector<fbm::FbmPath> paths;
  const fbm::PathSampler s(p.hurst, fbm::TimeGrid(2.0, 256));
  for (std::uint64_t i = 0; i < 20; ++i) paths.push_back(s.sample(i));
  const auto e = estimate_nh(paths, p, b, 1.0, 1.0);
  CHECK(e.mean >= 1.0);
  CHECK(e.n_paths == 20);
}

TEST_CASE("Wilson interval") {
  const auto a = wilson_interval(0, 50);
  CHECK(a.low == doctest::Approx(0.0));
  CHECK(a.high > 0.0);
  const auto c = wilson_interval(50, 50);
  CHECK(c.high == doctest::Approx(1.0));
  const auto m = wilson_interval(25, 50);
  CHECK(m.low + m.high == doctest::Approx(1.0));
  // textbook value for 81 of 263
  const auto t = wilson_interval(81, 263);
  CHECK(t.low == doctest::Approx(0.2553).epsilon(1e-3));
  CHECK(t.high == doctest::Approx(0.3662).epsilon(1e-3));
  CHECK_THROWS_AS(wilson_interval(0, 0), ConfigError);
}

TEST_CASE("Monte Carlo estimate needs enough traces") {
  std::vector<rpde::Verdict> v(20, rpde::Verdict::blew_up);
  CHECK_THROWS_AS(mc_blowup_probability(v), ConfigError);
  v.resize(40, rpde::Verdict::global_until_horizon);
  v[25] = rpde::Verdict::step_collapse;
  const auto e = mc_blowup_probability(v);
  CHECK(e.blowups == 21);
  CHECK(e.censored == 19);
  CHECK(e.estimate == doctest::Approx(21.0 / 40.0));
}

TEST_CASE("KS distance self test") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(20000);
  for (auto& x : s) x = u(rng);
  CHECK(ks_distance(s, [](double x) { return x; }) < 1.63 / std::sqrt(20000.0));
  CHECK(ks_distance(s, [](double x) { return x * x; }) > 0.2);
}

TEST_CASE("exponential functional law, small ensemble") {
  const auto r = exponential_functional_law_check(2.0, 2000, 3);
  CHECK(r.expected_mean == doctest::Approx(0.5));
  CHECK(r.sample_mean == doctest::Approx(0.5).epsilon(0.15));
  CHECK(r.ks < r.band + r.allowance);
  CHECK_THROWS_AS(exponential_functional_law_check(1.0, 10, 1), ConfigError);
  // inverse gamma CDF against direct integration of its density
  const double shape = 2.0, scale = 0.5, y = 0.7;
  auto dens = [&](double x) {
    if (x < 1e-3) return 0.0;
    return std::pow(scale, shape) / std::tgamma(shape) * std::pow(x, -shape - 1) * std::exp(-scale / x);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  CHECK(inverse_gamma_cdf(shape, scale, y) == doctest::Approx(ts.integrate(dens, 0.0, y)).epsilon(1e-9));
}
