#pragma once

#include "blowup/fbm.h"
#include "blowup/rpde.h"
#include "blowup/spectral.h"

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blowup::bounds {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// First time a cumulative integral reaches a threshold.
struct StoppingTime {
  double value = kInfinity;      // linear interpolation inside the crossing interval
  double threshold = 0.0;
  double integral_at_end = 0.0;  // accumulated integral at the horizon (or at the crossing)
  bool vacuous = false;          // threshold <= 0: the infimum is attained at t = 0
  std::string note;
  bool finite() const noexcept { return value < kInfinity; }
};

/// Cumulative trapezoid of `integrand` sampled on `grid` and its first crossing of `threshold`.
StoppingTime first_crossing(const fbm::TimeGrid& grid, std::span<const double> integrand, double threshold);

/// Same, from per-interval increments (increments[i] covers [t_i, t_{i+1}]).
StoppingTime first_crossing_increments(const fbm::TimeGrid& grid, std::span<const double> increments,
                                       double threshold);

/// M = max(|D|, delta |D|).
double domain_m(const rpde::ModelParams& params, const spectral::SpectralBasis& basis);

struct LowerBoundInputs {
  double M = 0.0;
  double f_sup = 0.0;
  double exponent_sum = 0.0;  // m + n + q - 1
  double threshold = 0.0;     // 1 / (2 M (m+n+q-1) f_sup^{m+n-1})
};

LowerBoundInputs lower_bound_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                    double f_sup);

/// Table of ||exp(g r) T_r||_inf on a time grid, with g the model's effective linear coefficient
/// (gamma, or -Lambda when H = 1/2). Build once per (basis, params, grid) and share across paths.
class SemigroupEnvelope {
public:
  SemigroupEnvelope(const spectral::SpectralBasis& basis, double gamma, const fbm::TimeGrid& grid);
  /// The crude envelope ||T_r|| <= 1 (times exp(g r)).
  static SemigroupEnvelope unit(double gamma, const fbm::TimeGrid& grid);
  std::span<const double> values() const noexcept { return values_; }
  const fbm::TimeGrid& grid() const noexcept { return grid_; }

private:
  SemigroupEnvelope(fbm::TimeGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {}
  fbm::TimeGrid grid_;
  std::vector<double> values_;
};

/// Lower blow-up time: first t with
///   int_0^t max(e^{(q-1) eta B}, e^{(m+n-1) eta B}) ||e^{g r} T_r||^{m+n-1} dr >= threshold.
/// Requires |D| > k.
StoppingTime tau_lower_star(const fbm::FbmPath& path, const rpde::ModelParams& params,
                            const spectral::SpectralBasis& basis, double f_sup,
                            const SemigroupEnvelope* envelope = nullptr);

enum class CertificateKind { global_b2, global_K, admissible_b, none };
const char* to_string(CertificateKind k);

struct CertificateReport {
  CertificateKind kind = CertificateKind::none;
  bool granted = false;
  double margin = 0.0;     // > 0 iff granted
  double witness = 0.0;    // left-hand side of the strict inequality
  double threshold = 1.0;  // right-hand side
  bool refused = false;    // hypothesis for this certificate fails (diagnostic set)
  bool clean_truncation = true;
  double tail = 0.0;
  std::string diagnostic;
};

struct GlobalCertificates {
  CertificateReport b2;  // accumulated scaled integral over the path horizon stays below 1
  CertificateReport K;   // kernel-bound variant with f <= C0 phi over an infinite horizon
};

/// Both global-existence certificates on one path. `c_kernel` is the fitted kernel-bound constant.
GlobalCertificates global_certificate_b2(const fbm::FbmPath& path, const rpde::ModelParams& params,
                                         const spectral::SpectralBasis& basis, double f_sup, double c0,
                                         double c_kernel, const SemigroupEnvelope* envelope = nullptr);

struct AdmissibilityReport {
  bool admissible = false;
  std::array<double, 3> lhs{};
  std::array<double, 3> rhs{};
  std::array<double, 3> margins{};  // lhs - rhs
  double minimal_b = 0.0;           // smallest b satisfying all three at this running sup (>= 1)
  bool brownian_shift = false;      // lambda1 + Lambda used in the first inequality
};

/// The three admissibility inequalities for f >= b phi at running supremum `runsup`.
AdmissibilityReport b_admissible(double b, double runsup, const rpde::ModelParams& params,
                                 const spectral::SpectralBasis& basis);

/// Closed-form smallest admissible b at a given running supremum.
double minimal_admissible_b(double runsup, const rpde::ModelParams& params, const spectral::SpectralBasis& basis);

/// Last grid time up to which b stays admissible along the path (-1 if not even at t = 0).
double admissible_until(double b, const fbm::FbmPath& path, const rpde::ModelParams& params,
                        const spectral::SpectralBasis& basis);

struct UpperBoundInputs {
  double b = 0.0;
  double J0 = 0.0;
  double Ntilde = 0.0;          // 1/2 (int phi^{q/(q-p)})^{(p-q)/p} + delta (int phi^{n/(n-1)})^{1-n}
  double A0 = 0.0;
  double eps0 = 0.0;
  double eps0_cap = 0.0;
  double eps_coef = 1.0;        // eps0 - A0 eps0^{(m+n)/(m+n-q)} / J0^q (1 when m+n = q)
  double Dcoef = 0.0;           // bracket of the case-2 threshold as printed (no 1/2)
  double Dcoef_ode = 0.0;       // coefficient of the case-2 comparison ODE (with the 1/2)
  double rho1 = 0.0;            // eta (q - 1)
  double int_q_over_qp = 0.0;   // int phi^{q/(q-p)}
  double int_n_over_n1 = 0.0;   // int phi^{n/(n-1)}
  double int_p_plus_1 = 0.0;    // int phi^{p+1}
};

/// Needs q > p. b is the datum's multiple of phi (largest b with f >= b phi for custom data).
UpperBoundInputs upper_bound_inputs(const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                    const rpde::InitialDatum& f, double eps0_fraction = 0.5);

enum class SignVariant { printed, mirrored };

struct UpperStoppingTime {
  StoppingTime printed;
  StoppingTime mirrored;
  double valid_until = 0.0;  // admissibility of b holds on [0, valid_until]
};

/// m + n = q = mu: first t with int_0^t e^{eta(mu-1)B + s(-lambda1+g)(mu-1)s} ds >= J0^{1-mu}/((mu-1) Ntilde),
/// s = +1 as printed, -1 mirrored.
UpperStoppingTime tau_upper_case1(const fbm::FbmPath& path, const UpperBoundInputs& in,
                                  const rpde::ModelParams& params, const spectral::SpectralBasis& basis);

/// m + n > q: min-exponential integrand times e^{-+(-lambda1+g)(q-1)s}, threshold
/// 2 J0^{1-q} / ((q-1)(-lambda1+g) Dcoef).
UpperStoppingTime tau_upper_case2(const fbm::FbmPath& path, const UpperBoundInputs& in,
                                  const rpde::ModelParams& params, const spectral::SpectralBasis& basis);

struct SigmaBounds {
  StoppingTime sigma_star;
  StoppingTime sigma_star_star;          // a1 as printed, with (-lambda1 + gamma)
  StoppingTime sigma_star_star_variant;  // a1 with (lambda1 + Lambda)
  double a1_printed = 0.0;
  double a1_variant = 0.0;
};

/// H = 1/2 only.
SigmaBounds sigma_bounds_h_half(const fbm::FbmPath& path, const rpde::ModelParams& params,
                                const spectral::SpectralBasis& basis, double f_sup, const UpperBoundInputs& in);

/// a1 of the Brownian case-2 bound; `printed` uses (-lambda1 + gamma), otherwise (lambda1 + Lambda).
double a1_coefficient(const UpperBoundInputs& in, const rpde::ModelParams& params,
                      const spectral::SpectralBasis& basis, bool printed);

enum class OdeCase { case1, case2 };

struct ComparisonOdeOptions {
  OdeCase mode = OdeCase::case1;
  double rel_tol = 1e-12;
};

/// I(t) for I' = a I + C g(t) I^beta with a = -lambda1 + g_eff, driven by the path.
struct ComparisonOdeTrace {
  std::vector<double> times;
  std::vector<double> closed_form;  // exact bracket integral for the piecewise-linear path
  std::vector<double> numeric;      // dopri5 integration, interval by interval
  std::optional<double> singularity_time;
  double agreement_cutoff = 0.0;    // comparisons stop 1% (in time) before the singularity
  double max_rel_diff = 0.0;        // over times < agreement_cutoff
  /// Case 2 only: the printed closed form (prefactor e^{(q-1)a t}, factor (q-1) a D,
  /// weight e^{-(q-1)a s}) with exponent -1/(p-1) and with -1/(q-1).
  std::vector<double> printed_p_exponent;
  std::vector<double> printed_q_exponent;
};

ComparisonOdeTrace comparison_ode(const fbm::FbmPath& path, const UpperBoundInputs& in,
                                  const rpde::ModelParams& params, const spectral::SpectralBasis& basis,
                                  std::span<const double> times, const ComparisonOdeOptions& options = {});

}  // namespace blowup::bounds
