#include "blowup/errors.h"
#include "blowup/rpde.h"
#include "oracles.h"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blowup;
using namespace blowup::rpde;

namespace {

fbm::FbmPath zero_path(double t_max, std::size_t n, double h = 0.75) {
  const fbm::TimeGrid g(t_max, n);
  return {g, std::vector<double>(g.size(), 0.0), fbm::HurstParameter(h), 0, fbm::SamplingMethod::circulant};
}

}  // namespace

TEST_CASE("model violations are collected") {
  ModelParams p;
  p.p = 0.5;
  p.k = 0.0;
  p.m = -1.0;
  const auto v = p.violations();
  CHECK(v.size() >= 3);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  ModelParams ok;
  CHECK(ok.violations().empty());
}

TEST_CASE("effective gamma carries the Ito shift only for H = 1/2") {
  ModelParams p;
  p.gamma = 1.0;
  p.eta = 0.4;
  CHECK(p.effective_gamma() == 1.0);
  p.hurst = fbm::HurstParameter(0.5);
  CHECK(p.effective_gamma() == doctest::Approx(1.0 - 0.08));
  CHECK(p.lambda_shift() == doctest::Approx(-0.92));
}

TEST_CASE("transform round trip and overflow") {
  const std::vector<double> f{0.0, 1.0, 2.0, 0.0};
  const auto v = transform(f, 0.7, 0.5, Direction::u_to_v);
  const auto u = transform(v.values, 0.7, 0.5, Direction::v_to_u);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(u.values[i] == doctest::Approx(f[i]));
  CHECK(transform(f, 1e4, 1.0, Direction::v_to_u).log_space);
}

TEST_CASE("custom datum validation") {
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 8), 3);
  std::vector<double> bad(9, 1.0);
  CHECK_THROWS_AS(InitialDatum::custom(b, bad), ConfigError);
  CHECK_THROWS_AS(InitialDatum::custom(b, std::vector<double>(9, 0.0)), ConfigError);
  CHECK_THROWS_AS(InitialDatum::multiple_of_phi(b, -1.0), ConfigError);
}

TEST_CASE("small data decay like the principal mode") {
  // With a tiny datum every reaction term is negligible and J(t) = J(0) exp(-lambda1 t).
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 64), 63);
  ModelParams p;
  p.k = 1e-3;
  p.delta = 0.0;
  p.q = 2.0;
  const auto f = InitialDatum::multiple_of_phi(b, 1e-8);
  SolverControls c;
  c.output_dt = 0.01;
  const auto tr = solve(p, b, f, zero_path(0.2, 64), c);
  CHECK(tr.verdict == Verdict::global_until_horizon);
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    CHECK(tr.J[i] == doctest::Approx(tr.J[0] * std::exp(-b.lambda1() * tr.times[i])).epsilon(2e-3));
}

TEST_CASE("supercritical deterministic data blow up near the scalar ODE time") {
  // p = q with k tiny, m = 0, n = 2, f = c phi: J' >= -lambda1 J + (c' J)^2 type growth; compare to RK4 on the mass ODE
  // driven by the numerical profile ratio is not available, so only ordering with the lower bound is asserted here.
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 64), 63);
  ModelParams p;
  p.k = 1e-6;
  p.delta = 0.0;
  p.p = 2.0;
  p.q = 2.0;
  p.m = 0.0;
  p.n = 2.0;
  const auto f = InitialDatum::multiple_of_phi(b, 50.0);
  SolverControls c;
  c.output_dt = 0.001;
  const auto tr = solve(p, b, f, zero_path(0.1, 256), c);
  REQUIRE(tr.tau_num);
  CHECK(tr.verdict != Verdict::global_until_horizon);
  CHECK(*tr.tau_num < 0.1);
  CHECK(tr.sup_norm.back() > tr.sup_norm.front());
}

TEST_CASE("comparison principle on a shared path") {
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(2.0, 48), 47);
  ModelParams p;
  p.k = 0.5;
  p.delta = 0.3;
  p.eta = 0.3;
  p.q = 2.5;
  p.m = 0.5;
  p.n = 2.0;
  const auto path = fbm::sample_path(p.hurst, fbm::TimeGrid(0.3, 128), 17);
  SolverControls c;
  c.output_dt = 0.01;
  c.keep_states = true;
  const auto lo = solve(p, b, InitialDatum::multiple_of_phi(b, 1.0), path, c);
  const auto hi = solve(p, b, InitialDatum::multiple_of_phi(b, 1.5), path, c);
  const auto v = comparison_probe(lo, hi);
  CHECK(v.ordered);
  CHECK(v.compared_times > 10);
}

TEST_CASE("solver preconditions") {
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 16), 5);
  ModelParams p;
  const auto f = InitialDatum::multiple_of_phi(b, 1.0);
  SolverControls c;
  c.output_dt = 0.001;
  CHECK_THROWS_AS(solve(p, b, f, zero_path(1.0, 10), c), ConfigError);  // path step 0.1 > 4 * output_dt
  c.output_dt = 0.05;
  CHECK_THROWS_AS(solve(p, b, f, zero_path(1.0, 100, 0.6), c), ConfigError);  // Hurst mismatch
  c.horizon = 2.0;
  CHECK_THROWS_AS(solve(p, b, f, zero_path(1.0, 100), c), ConfigError);
}

TEST_CASE("mass functional of phi is the squared L2 mass") {
  const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 256), 3);
  const double exact = std::numbers::pi * std::numbers::pi / 8.0;  // int (pi/2 sin pi x)^2
  CHECK(mass_functional(b.phi(), b) == doctest::Approx(exact).epsilon(1e-4));
}
