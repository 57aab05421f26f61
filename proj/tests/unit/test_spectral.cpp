#include "blowup/errors.h"
#include "blowup/spectral.h"
#include "oracles.h"

#include <Eigen/Dense>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace blowup;
using namespace blowup::spectral;

constexpr double pi = std::numbers::pi;

TEST_CASE("domain validation lists every violation") {
  try {
    DomainSpec::rectangle(-1.0, 0.0, 1, 5);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations().size() == 3);
  }
  CHECK_THROWS_AS(SpectralBasis(DomainSpec::interval(1.0, 8), 8), ConfigError);
}

TEST_CASE("principal pair on intervals and rectangles") {
  const SpectralBasis b(DomainSpec::interval(2.0, 64), 10);
  CHECK(b.lambda1() == doctest::Approx(pi * pi / 4.0));
  CHECK(b.integrate(b.phi()) == doctest::Approx(1.0).epsilon(1e-14));
  const SpectralBasis r(DomainSpec::rectangle(1.0, 1.0, 32, 32), 6);
  CHECK(r.lambda1() == doctest::Approx(2.0 * pi * pi));
  CHECK(r.lambda2() == doctest::Approx(5.0 * pi * pi));
  CHECK(r.integrate(r.phi()) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("phi sup is the analytic maximum") {
  const SpectralBasis b(DomainSpec::interval(1.0, 63), 5);
  const double grid_max = *std::max_element(b.phi().begin(), b.phi().end());
  CHECK(b.phi_sup() >= grid_max);
  CHECK(b.phi_sup() == doctest::Approx(b.phi_at(0.5)));
}

TEST_CASE("eigen identity of the semigroup") {
  const SpectralBasis b(DomainSpec::interval(1.0, 128), 127);
  const auto& phi = b.phi();
  for (double t : {0.01, 0.1, 1.0}) {
    const auto tf = apply_semigroup(b, phi, t);
    double worst = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) worst = std::max(worst, std::abs(tf[i] - std::exp(-b.lambda1() * t) * phi[i]));
    CHECK(worst / b.phi_sup() <= 1e-8);
  }
  CHECK(apply_semigroup(b, phi, 0.0) == phi);
  CHECK_THROWS_AS(apply_semigroup(b, phi, -1.0), DomainError);
}

TEST_CASE("semigroup agrees with a finite-difference matrix exponential") {
  // Oracle: exp(t A) with A the second-difference matrix, eigen-decomposed by Eigen.
  const std::size_t n = 40;
  const SpectralBasis b(DomainSpec::interval(1.0, n), n - 1);
  const double h = 1.0 / n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n - 1, n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    A(i, i) = -2.0 / (h * h);
    if (i + 1 < n - 1) A(i, i + 1) = A(i + 1, i) = 1.0 / (h * h);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd f(n - 1);
  std::vector<double> fv(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i) fv[i] = f(i - 1) = std::sin(pi * i * h) + 0.3 * std::sin(3 * pi * i * h);
  const double t = 0.01;
  const Eigen::VectorXd ref =
      es.eigenvectors() * (es.eigenvalues().array() * t).exp().matrix().asDiagonal() * es.eigenvectors().transpose() * f;
  // Analytic modes decay with pi^2 k^2, the matrix with its own eigenvalues; compare against the exact PDE solution.
  const auto mine = apply_semigroup(b, fv, t);
  for (std::size_t i = 1; i < n; ++i) {
    const double exact = std::exp(-pi * pi * t) * std::sin(pi * i * h) + 0.3 * std::exp(-9 * pi * pi * t) * std::sin(3 * pi * i * h);
    CHECK(mine[i] == doctest::Approx(exact).epsilon(1e-12));
    CHECK(ref(i - 1) == doctest::Approx(exact).epsilon(2e-2));
  }
}

TEST_CASE("sup norm of T_t 1 against the sine series") {
  const SpectralBasis b(DomainSpec::interval(1.0, 512), 511);
  for (double t : {0.05, 0.2, 1.0}) {
    const double ref = oracle::heat_indicator_centre(1.0, t);
    CHECK(semigroup_sup_norm(b, 0.0, t) == doctest::Approx(ref).epsilon(1e-4));
  }
  CHECK(semigroup_sup_norm(b, 0.0, 0.0) == 1.0);
  CHECK(semigroup_sup_norm(b, 2.0, 1.0) == doctest::Approx(std::exp(2.0) * oracle::heat_indicator_centre(1.0, 1.0)).epsilon(1e-4));
}

TEST_CASE("two-sided heat kernel bound has a finite constant") {
  const SpectralBasis b(DomainSpec::interval(1.0, 512), 500);
  std::vector<double> ts;
  for (int i = 0; i < 20; ++i) ts.push_back(1e-3 * std::pow(1e3, i / 19.0));
  std::vector<std::array<double, 2>> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({(i + 0.5) / 10.0, 0.0});
  const auto fit = fit_kernel_bound(b, ts, pts);
  CHECK(fit.feasible);
  CHECK(std::isfinite(fit.c));
  CHECK(fit.c <= fit.c_closed_form * 1.001 + 1e-12);
  for (double s : fit.lower_slack) CHECK(s >= 0.0);
  for (const auto& r : fit.residuals) CHECK(r.upper_slack >= -1e-12);
}

TEST_CASE("phi-integrals converge at second order") {
  for (double r : {1.5, 2.0, 3.0}) {
    double v[3];
    for (int k = 0; k < 3; ++k) v[k] = SpectralBasis(DomainSpec::interval(1.0, 32u << k), 1).integrate_phi_power(r);
    const double d1 = std::abs(v[0] - v[1]), d2 = std::abs(v[1] - v[2]);
    if (d2 > 1e-13) CHECK(std::log2(d1 / d2) >= 1.9);
    // closed form for integer r via the Beta function: int_0^1 (pi/2 sin(pi x))^r dx
    const double exact = std::pow(pi / 2, r) * std::tgamma((r + 1) / 2) / (std::sqrt(pi) * std::tgamma(r / 2 + 1));
    CHECK(v[2] == doctest::Approx(exact).epsilon(1e-4));
  }
}

TEST_CASE("coefficients round-trip through synthesis") {
  const SpectralBasis b(DomainSpec::rectangle(2.0, 1.0, 16, 12), 40);
  std::vector<double> w(b.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::cos(0.3 * k);
  const auto f = b.synthesize(w);
  const auto c = b.coefficients(f);
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(c[k] == doctest::Approx(w[k]).epsilon(1e-10));
}
