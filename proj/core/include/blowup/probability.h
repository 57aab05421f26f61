#pragma once

#include "blowup/bounds.h"
#include "blowup/fbm.h"
#include "blowup/rpde.h"
#include "blowup/spectral.h"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace blowup::prob {

struct GammaLawInputs {
  double theta1 = 0.0;     // 2 (lambda1 + Lambda)(mu - 1) / rho1^2
  double threshold = 0.0;  // 2 (mu - 1) Ntilde / (rho1^2 J0^{1-mu})
};

/// H = 1/2, m + n = q = mu.
GammaLawInputs gamma_law_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                const bounds::UpperBoundInputs& in);

/// Lower bound on P(blow-up): the Gamma(theta1, 1) CDF at the threshold.
double gamma_law_case1(const GammaLawInputs& in);

struct BesselSeriesInputs {
  double order = 0.0;      // 2 (lambda1 + Lambda)(q - 1) / (eta (q - 1))^2 - 1
  double a1 = 0.0;
  double prefactor = 0.0;  // 8 (lambda1 + Lambda)(q - 1) / (eta (q - 1))^2
  double decay = 0.0;      // (eta (q - 1))^2 a1 / 8
  std::vector<double> zeros;
  std::size_t n_terms = 0;
};

/// H = 1/2, m + n > q (or = q in the limit convention). `printed_a1` picks the a1 assembly.
BesselSeriesInputs bessel_series_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                        const bounds::UpperBoundInputs& in, bool printed_a1);

struct SeriesResult {
  double value = 0.0;
  double truncation_bound = 0.0;  // rigorous bound on the omitted tail
  std::size_t terms = 0;
};

/// prefactor * sum_j exp(-decay j_{nu,j}^2) / j_{nu,j}^2, zeros extended on demand.
SeriesResult bessel_series_case2(BesselSeriesInputs& in);

struct DensityBoundInputs {
  double Ntilde1 = 0.0;
  double shape = 0.0;  // 2 Lambda (m + n - 1) / (eta (q - 1))^2
  double scale = 0.0;  // 2 / (eta (q - 1))^2
};

/// `printed` uses 1/((lambda1 + Lambda)(q - 1)) in Ntilde1, otherwise 1/(Lambda (m + n - 1)).
DensityBoundInputs density_bound_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                        double f_sup, bool printed);

struct DensityBoundResult {
  double value = 1.0;
  double quadrature = 1.0;  // direct integration of the density
  bool vacuous = false;     // Ntilde1 <= 0
};

/// Upper bound on P(blow-up): the inverse-gamma tail beyond Ntilde1.
DensityBoundResult density_upper_bound(const DensityBoundInputs& in);

enum class NtildeArgument { bracket, threshold };
const char* to_string(NtildeArgument a);

struct MalliavinBoundInputs {
  double alpha = 1.0;
  double rho1 = 0.0;
  double mu = 0.0;
  double Ntilde = 0.0;
  double Ntilde_arg = 0.0;  // the constant inside log(. + 1)
  double N_H = 1.0;
  double M_H = 0.0;         // as printed
};

struct NhEstimate {
  double mean = 1.0;
  double std_error = 0.0;
  double t_max = 0.0;
  std::size_t n_paths = 0;
};

/// Monte Carlo N(H): average over paths of the supremum over the path grid (and t -> infinity) of
///   [log(1 + int_0^t e^{a(mu-1)s - rho1^2 s^{2H}/2 + rho1 B}) + t^alpha] / [log(Ntilde_arg + 1) + t^alpha].
NhEstimate estimate_nh(std::span<const fbm::FbmPath> paths, const rpde::ModelParams& params,
                       const spectral::SpectralBasis& basis, double alpha, double ntilde_arg);

/// ((alpha - H)/alpha)^{2 - 2H/alpha} log(x + 1)^{2H/alpha - 2}.
double m_h_printed(double hurst, double alpha, double ntilde_arg);
/// sup_t t^{2H} / (log(x + 1) + t^alpha)^2 = (H/alpha)^{2H/alpha} m_h_printed.
double m_h_exact(double hurst, double alpha, double ntilde_arg);

struct MalliavinResult {
  double value = 0.0;           // as printed: 1 - exp(-M_H (N - 1)^2 / (2 rho1^2))
  double value_corrected = 0.0; // 1 - exp(-(N - 1)^2 / (2 rho1^2 M_exact))
  bool certain = false;         // lambda1 < gamma: blow-up almost surely
  bool clamped = false;         // N_H < 1 from sampling noise, set to 1
  std::string note;
};

MalliavinResult malliavin_lower_bound(MalliavinBoundInputs in, const rpde::ModelParams& params,
                                      const spectral::SpectralBasis& basis);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// 95% Wilson score interval.
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct McEstimate {
  std::size_t n = 0;
  std::size_t blowups = 0;
  std::size_t censored = 0;  // reached the horizon without blowing up
  double estimate = 0.0;
  Interval ci;
  double censored_fraction = 0.0;
};

/// Needs at least 30 traces on a common horizon.
McEstimate mc_blowup_probability(std::span<const rpde::SolutionTrace> traces);
McEstimate mc_blowup_probability(std::span<const rpde::Verdict> verdicts);

/// Kolmogorov-Smirnov distance of a sample against a CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf);

struct KsReport {
  double alpha = 0.0;
  std::size_t n = 0;
  double t_max = 0.0;
  double dt = 0.0;
  double ks = 0.0;
  double band = 0.0;       // 1.63 / sqrt(n)
  double allowance = 0.0;  // truncation allowance
  double sample_mean = 0.0;
  double expected_mean = 0.0;
  bool passed = false;
};

/// int_0^T e^{2(W - alpha t)} dt over Brownian paths against the inverse-gamma(alpha, 1/2) law.
KsReport exponential_functional_law_check(double alpha, std::size_t n_paths, std::uint64_t master_seed,
                                          double dt = 1e-3);

/// Inverse-gamma(shape, scale) CDF.
double inverse_gamma_cdf(double shape, double scale, double y);

}  // namespace blowup::prob

#include <algorithm>
#include <cmath>

template <class Cdf>
double blowup::prob::ks_distance(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}
