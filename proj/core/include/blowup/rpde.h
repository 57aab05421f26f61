#pragma once

#include "blowup/errors.h"
#include "blowup/fbm.h"
#include "blowup/spectral.h"

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace blowup::rpde {

/// Coefficients of
///   du = [(Laplace + gamma) u + int u^q - k u^p + delta u^m int u^n] dt + eta u dB^H.
struct ModelParams {
  double gamma = 0.0;
  double k = 1.0;
  double delta = 0.0;
  double eta = 0.0;
  double p = 2.0;
  double q = 2.0;
  double m = 0.0;
  double n = 2.0;
  fbm::HurstParameter hurst{0.75};

  /// Every violated standing assumption, empty when valid.
  std::vector<std::string> violations() const;
  void validate() const;

  /// Linear coefficient of the random PDE: gamma, or gamma - eta^2/2 when H = 1/2.
  double effective_gamma() const noexcept;
  /// Lambda = eta^2/2 - gamma (meaningful for H = 1/2).
  double lambda_shift() const noexcept { return 0.5 * eta * eta - gamma; }
};

struct InitialDatum {
  enum class Kind { multiple_of_phi, custom };
  Kind kind = Kind::multiple_of_phi;
  double b = 0.0;  // only for multiple_of_phi
  std::vector<double> values;

  /// f = b * phi (phi with unit mass).
  static InitialDatum multiple_of_phi(const spectral::SpectralBasis& basis, double b);
  /// Non-negative, zero on the boundary, not identically zero.
  static InitialDatum custom(const spectral::SpectralBasis& basis, std::vector<double> values);
};

enum class Direction { u_to_v, v_to_u };

struct TransformResult {
  std::vector<double> values;
  bool log_space = false;           // exp(-+eta B) overflowed; values may hold inf
  std::vector<double> log_values;   // filled only when log_space
};

/// v = exp(-eta B) u (u_to_v) or u = exp(eta B) v (v_to_u).
TransformResult transform(std::span<const double> f, double path_value, double eta, Direction dir);

struct SolverControls {
  double horizon = 0.0;      // 0: use the path's t_max
  double output_dt = 0.01;
  double v_max = 1e8;
  double dt_min = 1e-12;
  double cfl = 0.9;          // fraction of the explicit diffusion limit
  double safety = 0.02;      // max relative change per step from the reaction terms
  std::vector<double> snapshot_times;
  bool keep_states = false;  // store v at every output time (needed by comparison_probe)
  std::size_t max_steps = 200'000'000;
};

enum class Verdict { global_until_horizon, blew_up, step_collapse };
const char* to_string(Verdict v);

struct Snapshot {
  double t = 0.0;
  std::vector<double> v;
};

struct SolutionTrace {
  std::vector<double> times;
  std::vector<double> J;
  std::vector<double> sup_norm;
  Verdict verdict = Verdict::global_until_horizon;
  std::optional<double> tau_num;
  std::size_t steps = 0;
  std::size_t clipped = 0;          // negative undershoots set to zero
  double min_before_clip = 0.0;     // most negative value seen before clipping
  std::vector<Snapshot> snapshots;  // requested snapshot times
  std::vector<Snapshot> states;     // every output time when keep_states
  double end_time = 0.0;
  std::vector<double> final_state;
};

/// Raised when the state becomes non-finite; carries the last finite state.
class SolverFault : public NumericalError {
public:
  SolverFault(const std::string& what, Snapshot last) : NumericalError(what), last_(std::move(last)) {}
  const Snapshot& last_finite() const noexcept { return last_; }

private:
  Snapshot last_;
};

/// Method of lines with central differences and explicit Euler, driven by the
/// piecewise-linear interpolant of `path`.
SolutionTrace solve(const ModelParams& params, const spectral::SpectralBasis& basis,
                    const InitialDatum& f, const fbm::FbmPath& path, const SolverControls& controls);

/// int v phi over the domain (grid trapezoid).
double mass_functional(std::span<const double> v, const spectral::SpectralBasis& basis);

struct ComparisonVerdict {
  bool ordered = true;
  std::size_t compared_times = 0;
  std::optional<double> first_violation_time;
  double max_excess = 0.0;  // max of v1 - v2 over the compared times
};

/// Checks v1 <= v2 + tol on the output times both traces reached (needs keep_states).
ComparisonVerdict comparison_probe(const SolutionTrace& lower, const SolutionTrace& upper, double tol = 1e-8);

/// Columns: t, J, sup_norm.
void write_trace_csv(const SolutionTrace& trace, std::ostream& out);
/// Columns: x[, y], v.
void write_snapshot_csv(const Snapshot& snap, const spectral::SpectralBasis& basis, std::ostream& out);

}  // namespace blowup::rpde
