#include "blowup/special_functions.h"

#include "blowup/errors.h"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace blowup::special {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// log of x^a e^{-x} / Gamma(a)
double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

double series_p(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) return sum * std::exp(log_prefactor(a, x));
  }
  throw NumericalError("incomplete gamma series did not converge");
}

// Modified Lentz on the continued fraction for Q(a, x).
double cf_q(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h * std::exp(log_prefactor(a, x));
  }
  throw NumericalError("incomplete gamma continued fraction did not converge");
}

void check_args(double a, double x) {
  if (!(a > 0.0)) throw DomainError("incomplete gamma needs a > 0");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma needs x >= 0");
}

}  // namespace

double gamma_p(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? series_p(a, x) : 1.0 - cf_q(a, x);
}

double gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - series_p(a, x) : cf_q(a, x);
}

double bessel_j(double nu, double x) {
  if (!(nu > -1.0)) throw DomainError("Bessel order must exceed -1");
  if (x < 0.0) throw DomainError("Bessel argument must be non-negative");
  if (x == 0.0) return nu == 0.0 ? 1.0 : (nu > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return boost::math::cyl_bessel_j(nu, x);
}

double mcmahon_zero(double nu, std::size_t k) {
  if (k == 0) throw DomainError("zero index starts at 1");
  const double mu = 4.0 * nu * nu;
  const double beta = (static_cast<double>(k) + 0.5 * nu - 0.25) * std::numbers::pi;
  const double e = 8.0 * beta;
  return beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e);
}

std::vector<double> bessel_j_zeros(double nu, std::size_t count) {
  if (!(nu > -1.0)) throw DomainError("Bessel order must exceed -1");
  std::vector<double> zeros;
  if (count == 0) return zeros;
  zeros.reserve(count);
  // Consecutive zeros are more than 2 apart for nu > -1, so this step cannot jump over a pair.
  const double step = 0.05;
  const double x_limit = std::max(mcmahon_zero(nu, count), 0.0) + 10.0 + 2.0 * std::abs(nu);
  double x0 = 1e-3 * std::min(1.0, std::max(nu + 1.0, 1e-3));
  double f0 = bessel_j(nu, x0);
  while (zeros.size() < count) {
    const double x1 = x0 + step;
    if (x1 > x_limit + static_cast<double>(count) * step)
      throw NumericalError("Bessel zero search left its bracket range");
    const double f1 = bessel_j(nu, x1);
    if (f0 == 0.0) {
      zeros.push_back(x0);
    } else if (f0 * f1 < 0.0) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200 && hi - lo > 2e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bessel_j(nu, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      zeros.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  return zeros;
}

}  // namespace blowup::special
