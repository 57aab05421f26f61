#pragma once

#include <cstddef>
#include <vector>

namespace blowup::special {

/// Regularized lower incomplete gamma P(a, x): series for x < a + 1, Lentz continued fraction otherwise.
double gamma_p(double a, double x);
/// Q(a, x) = 1 - P(a, x), computed directly on the continued-fraction side.
double gamma_q(double a, double x);

/// First-kind Bessel function J_nu(x), nu > -1, x >= 0.
double bessel_j(double nu, double x);

/// McMahon's large-k expansion of the k-th positive zero (k >= 1).
double mcmahon_zero(double nu, std::size_t k);

/// First `count` positive zeros of J_nu, ascending. Scans for sign changes and bisects.
std::vector<double> bessel_j_zeros(double nu, std::size_t count);

}  // namespace blowup::special
