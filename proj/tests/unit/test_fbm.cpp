#include "blowup/errors.h"
#include "blowup/fbm.h"
#include "oracles.h"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace blowup;
using namespace blowup::fbm;

TEST_CASE("hurst range and grid") {
  CHECK_THROWS_AS(HurstParameter(0.49), DomainError);
  CHECK_THROWS_AS(HurstParameter(1.0), DomainError);
  CHECK(HurstParameter(0.5).is_brownian());
  const TimeGrid g(2.0, 8);
  CHECK(g.size() == 9);
  CHECK(g.dt() == doctest::Approx(0.25));
  CHECK(g.node(8) == 2.0);
}

TEST_CASE("covariance basics") {
  const HurstParameter h(0.75);
  CHECK(covariance(h, 0.7, 0.7) == doctest::Approx(std::pow(0.7, 1.5)));
  CHECK(covariance(h, 0.3, 0.9) == doctest::Approx(covariance(h, 0.9, 0.3)));
  CHECK(covariance(HurstParameter(0.5), 0.3, 0.9) == doctest::Approx(0.3));
}

TEST_CASE("kernel matches the literature form pointwise") {
  for (double h : {0.6, 0.75, 0.9})
    for (auto [t, s] : {std::pair{1.0, 0.2}, {1.0, 0.7}, {2.5, 1.1}, {0.4, 0.05}}) {
      const double mine = volterra_kernel(HurstParameter(h), t, s);
      const double ref = oracle::kernel_literature(h, t, s);
      CHECK(mine == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("kernel square integral equals t^{2H}") {
  for (double h : {0.6, 0.75, 0.9})
    for (double t : {0.5, 1.0, 2.0}) {
      const double v = kernel_square_integral(HurstParameter(h), t);
      CHECK(std::abs(v / std::pow(t, 2 * h) - 1.0) < 1e-6);
      // independent quadrature of the literature kernel
      CHECK(oracle::kernel_square_literature(h, t) == doctest::Approx(std::pow(t, 2 * h)).epsilon(1e-5));
    }
  CHECK(kernel_square_integral(HurstParameter(0.5), 1.7) == 1.7);
  CHECK_THROWS_AS(volterra_kernel(HurstParameter(0.7), 1.0, 1.0), DomainError);
}

TEST_CASE("sampler is deterministic per seed") {
  const TimeGrid g(1.0, 128);
  const PathSampler s(HurstParameter(0.75), g);
  const auto a = s.sample(11), b = s.sample(11), c = s.sample(12);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.values[0] == 0.0);
  CHECK(s.method() == SamplingMethod::circulant);
}

TEST_CASE("replicate seeds do not collide") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(replicate_seed(7, i));
  CHECK(seen.size() == 100000);
}

TEST_CASE("circulant and cholesky agree with the covariance") {
  const TimeGrid g(1.0, 16);
  for (auto method : {SamplingMethod::circulant, SamplingMethod::cholesky}) {
    const PathSampler s(HurstParameter(0.8), g, method);
    const int n = 6000;
    double c = 0.0, c2 = 0.0;
    for (int p = 0; p < n; ++p) {
      const auto path = s.sample(replicate_seed(99, p));
      const double x = path.values[8] * path.values[16];
      c += x;
      c2 += x * x;
    }
    c /= n;
    const double se = std::sqrt((c2 / n - c * c) / n);
    CHECK(std::abs(c - covariance(HurstParameter(0.8), 0.5, 1.0)) < 4 * se);
  }
}

TEST_CASE("volterra sampler is an unbiased-enough cross-check") {
  const TimeGrid g(1.0, 16);
  const VolterraSampler vs(HurstParameter(0.7), g);
  double c = 0.0;
  const int n = 4000;
  for (int p = 0; p < n; ++p) {
    const auto path = vs.sample(replicate_seed(5, p));
    c += path.values[16] * path.values[16];
  }
  CHECK(c / n == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("exponential integral against direct trapezoid") {
  const TimeGrid g(1.0, 64);
  const auto path = sample_path(HurstParameter(0.75), g, 3);
  const auto e = exp_integral(path, 1.3, 0.4);
  double acc = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i)
    acc += 0.5 * g.dt() *
           (std::exp(1.3 * path.values[i - 1] - 0.4 * g.node(i - 1)) + std::exp(1.3 * path.values[i] - 0.4 * g.node(i)));
  CHECK(e.values.back() == doctest::Approx(acc).epsilon(1e-12));
  CHECK_FALSE(e.log_space);
  const auto big = exp_integral(path, 1e4, 0.0);
  CHECK(big.log_space);
  CHECK(std::isfinite(big.log_values.back()));
}

TEST_CASE("running sup is monotone and functionals are cached by key") {
  const TimeGrid g(1.0, 64);
  const auto path = sample_path(HurstParameter(0.6), g, 4);
  const auto rs = running_sup(path.values);
  for (std::size_t i = 1; i < rs.size(); ++i) CHECK(rs[i] >= rs[i - 1]);
  const ExpIntegralKey keys[] = {{1.0, 0.0}, {2.0, 1.0}};
  const auto pf = path_functionals(path, keys);
  CHECK(pf.exp_integral(2.0, 1.0).values.size() == g.size());
}

TEST_CASE("law of the iterated logarithm diagnostic") {
  std::vector<FbmPath> none;
  CHECK_THROWS_AS(lil_diagnostic(none, 0.1), ConfigError);
  const TimeGrid g(2.0, 16);
  std::vector<FbmPath> short_paths{sample_path(HurstParameter(0.7), g, 1)};
  CHECK_THROWS_AS(lil_diagnostic(short_paths, 0.1), DomainError);
}

TEST_CASE("path csv has a header and one row per node") {
  const TimeGrid g(1.0, 4);
  const auto path = sample_path(HurstParameter(0.7), g, 1);
  std::ostringstream out;
  write_path_csv(path, out);
  const auto s = out.str();
  CHECK(s.rfind("t,B\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 6);
}
