#include "blowup/errors.h"
#include "blowup/special_functions.h"
#include "oracles.h"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <doctest.h>

#include <cmath>

using namespace blowup::special;

TEST_CASE("incomplete gamma against boost") {
  for (double a : {0.3, 1.0, 2.5, 10.0, 57.0})
    for (double x : {1e-3, 0.5, 1.0, 3.0, 9.0, 40.0, 120.0}) {
      CHECK(gamma_p(a, x) == doctest::Approx(boost::math::gamma_p(a, x)).epsilon(1e-12));
      CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-13));
    }
  CHECK(gamma_p(1.0, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gamma_p(2.0, 0.0) == 0.0);
}

TEST_CASE("Bessel function against its power series") {
  for (double nu : {-0.5, 0.0, 0.7, 3.0})
    for (double x : {0.1, 1.0, 4.0, 9.0}) CHECK(bessel_j(nu, x) == doctest::Approx(oracle::bessel_j_series(nu, x)).epsilon(1e-10));
}

TEST_CASE("Bessel zeros") {
  const auto z0 = bessel_j_zeros(0.0, 5);
  REQUIRE(z0.size() == 5);
  const double first = oracle::bisect([](double x) { return oracle::bessel_j_series(0.0, x); }, 2.0, 3.0);
  CHECK(z0[0] == doctest::Approx(first).epsilon(1e-12));
  CHECK(z0[0] == doctest::Approx(2.404825557695773).epsilon(1e-13));
  for (double nu : {-0.9, -0.3, 0.5, 2.2, 20.0}) {
    const auto z = bessel_j_zeros(nu, 40);
    for (std::size_t k = 0; k < z.size(); ++k) {
      CHECK(std::abs(bessel_j(nu, z[k])) < 1e-10);
      if (k > 0) CHECK(z[k] - z[k - 1] > 2.5);  // consecutive zeros are separated by roughly pi
      CHECK(z[k] == doctest::Approx(boost::math::cyl_bessel_j_zero(nu, static_cast<int>(k + 1))).epsilon(1e-10));
    }
    CHECK(z.back() == doctest::Approx(mcmahon_zero(nu, 40)).epsilon(1e-3));
  }
  const auto half = bessel_j_zeros(0.5, 3);  // J_{1/2} vanishes at k pi
  for (std::size_t k = 0; k < 3; ++k) CHECK(half[k] == doctest::Approx(std::numbers::pi * (k + 1.0)).epsilon(1e-13));
  CHECK_THROWS(bessel_j_zeros(-1.0, 3));
}
