#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

namespace blowup::fbm {

/// Hurst index restricted to [0.5, 1).
class HurstParameter {
public:
  explicit HurstParameter(double h);
  double value() const noexcept { return h_; }
  bool is_brownian() const noexcept { return h_ == 0.5; }

private:
  double h_;
};

/// Uniform grid t_i = i * dt on [0, t_max].
class TimeGrid {
public:
  TimeGrid(double t_max, std::size_t n_steps);
  double t_max() const noexcept { return t_max_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t size() const noexcept { return n_steps_ + 1; }
  double dt() const noexcept { return t_max_ / static_cast<double>(n_steps_); }
  double node(std::size_t i) const noexcept;
  std::vector<double> nodes() const;

private:
  double t_max_;
  std::size_t n_steps_;
};

enum class SamplingMethod { circulant, cholesky };

const char* to_string(SamplingMethod m);

struct FbmPath {
  TimeGrid grid;
  std::vector<double> values;
  HurstParameter hurst;
  std::uint64_t seed = 0;
  SamplingMethod method = SamplingMethod::circulant;

  /// Piecewise-linear interpolation; t is clamped to [0, t_max].
  double at(double t) const;
  double max_abs() const;
};

/// R_H(t, s) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2.
double covariance(HurstParameter h, double t, double s);

/// Molchan-Golosov type kernel K_H(t, s), 0 < s < t, normalized so that
/// the integral of K_H(t, .)^2 over (0, t) equals t^{2H}.
double volterra_kernel(HurstParameter h, double t, double s);

/// The constant C_H in front of the kernel (cached per H).
double volterra_constant(HurstParameter h);

/// Quadrature of K_H(t, theta)^2 over (0, t).
double kernel_square_integral(HurstParameter h, double t);

/// Splitmix64 step: deterministic, well-mixed child seed for replicate `index`.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index);

/// Reusable sampler: precomputes the circulant spectrum (or Cholesky factor)
/// once per (H, grid). sample() is const and safe to call concurrently.
class PathSampler {
public:
  PathSampler(HurstParameter h, const TimeGrid& grid,
              SamplingMethod requested = SamplingMethod::circulant);
  ~PathSampler();
  PathSampler(PathSampler&&) noexcept;
  PathSampler& operator=(PathSampler&&) noexcept;

  FbmPath sample(std::uint64_t seed) const;
  /// Method actually used (circulant falls back to cholesky on a negative embedding eigenvalue).
  SamplingMethod method() const noexcept;
  /// Smallest circulant eigenvalue divided by the largest (diagnostic; 0 for cholesky).
  double min_relative_eigenvalue() const noexcept;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

FbmPath sample_path(HurstParameter h, const TimeGrid& grid, std::uint64_t seed,
                    SamplingMethod method = SamplingMethod::circulant);

/// Direct discretization B(t_i) = sum_j w_ij dW_j with cell-averaged kernel weights.
/// Quadratic cost and a discretization bias; only meant as an independent cross-check.
class VolterraSampler {
public:
  VolterraSampler(HurstParameter h, const TimeGrid& grid);
  FbmPath sample(std::uint64_t seed) const;

private:
  HurstParameter h_;
  TimeGrid grid_;
  std::vector<std::vector<double>> weights_;  // weights_[i-1][j], j < i
};

struct ExpIntegralKey {
  double sigma;
  double nu;
  auto operator<=>(const ExpIntegralKey&) const = default;
};

/// Cumulative trapezoid values of int_0^{t_i} exp(sigma B(s) - nu s) ds.
/// When log_space is set the linear values may overflow to inf; log_values stay exact.
struct ExpIntegral {
  std::vector<double> values;
  std::vector<double> log_values;
  bool log_space = false;
};

struct PathFunctionals {
  std::vector<double> running_sup;
  std::map<ExpIntegralKey, ExpIntegral> exp_integrals;

  const ExpIntegral& exp_integral(double sigma, double nu) const;
};

std::vector<double> running_sup(std::span<const double> values);

ExpIntegral exp_integral(const FbmPath& path, double sigma, double nu);

PathFunctionals path_functionals(const FbmPath& path, std::span<const ExpIntegralKey> requests);

struct LilReport {
  std::size_t n_paths = 0;
  std::size_t within = 0;
  double fraction = 0.0;
  double epsilon = 0.0;
  double t_max = 0.0;
  double envelope = 0.0;  // (1 + eps) t^H sqrt(2 log log t) at the first path's t_max
};

LilReport lil_diagnostic(std::span<const FbmPath> paths, double epsilon);

/// Columns: t, B.
void write_path_csv(const FbmPath& path, std::ostream& out);

}  // namespace blowup::fbm
