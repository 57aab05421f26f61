#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace blowup::spectral {

enum class Shape { interval, rectangle };

/// Interval (0, L) or rectangle (0, Lx) x (0, Ly) on a uniform node grid that
/// includes the boundary. Node index = i + (nx + 1) * j.
struct DomainSpec {
  Shape shape = Shape::interval;
  double lx = 1.0;
  double ly = 0.0;
  std::size_t nx = 0;
  std::size_t ny = 0;

  static DomainSpec interval(double length, std::size_t n_cells);
  static DomainSpec rectangle(double lx, double ly, std::size_t nx, std::size_t ny);

  int dimension() const noexcept { return shape == Shape::interval ? 1 : 2; }
  double volume() const noexcept { return shape == Shape::interval ? lx : lx * ly; }
  double hx() const noexcept { return lx / static_cast<double>(nx); }
  double hy() const noexcept { return shape == Shape::interval ? 1.0 : ly / static_cast<double>(ny); }
  std::size_t nodes_x() const noexcept { return nx + 1; }
  std::size_t nodes_y() const noexcept { return shape == Shape::interval ? 1 : ny + 1; }
  std::size_t node_count() const noexcept { return nodes_x() * nodes_y(); }
  std::array<double, 2> node(std::size_t idx) const;
  bool on_boundary(std::size_t idx) const;
  /// Number of grid-resolvable Dirichlet modes.
  std::size_t max_modes() const noexcept;
  /// Trapezoid weight of a node (boundary weights are irrelevant for Dirichlet data but kept exact).
  double quadrature_weight(std::size_t idx) const;
};

struct Mode {
  std::size_t kx = 1;
  std::size_t ky = 0;  // 0 for intervals
  double lambda = 0.0;
};

/// Analytic Dirichlet eigenpairs of -Laplace sampled on the grid. Immutable.
class SpectralBasis {
public:
  SpectralBasis(const DomainSpec& domain, std::size_t n_modes);

  const DomainSpec& domain() const noexcept { return domain_; }
  std::size_t size() const noexcept { return modes_.size(); }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  std::vector<double> eigenvalues() const;
  double lambda1() const noexcept { return modes_[0].lambda; }
  double lambda2() const noexcept { return modes_.size() > 1 ? modes_[1].lambda : modes_[0].lambda; }
  double second_gap() const noexcept { return lambda2() - lambda1(); }

  /// L2-orthonormal mode k sampled on the nodes.
  std::vector<double> mode_values(std::size_t k) const;
  /// L2-orthonormal mode k at an arbitrary point.
  double mode_at(std::size_t k, double x, double y = 0.0) const;

  /// Principal eigenfunction with unit grid mass (the phi of the theory).
  const std::vector<double>& phi() const noexcept { return phi_; }
  /// Principal eigenfunction with unit L2 norm.
  const std::vector<double>& phi_l2() const noexcept { return phi_l2_; }
  double phi_sup() const noexcept { return phi_sup_; }
  /// phi = unit_mass_factor() * phi_l2; every conversion between the two conventions goes through here.
  double unit_mass_factor() const noexcept { return unit_mass_factor_; }
  double phi_at(double x, double y = 0.0) const { return unit_mass_factor_ * mode_at(0, x, y); }

  /// Composite trapezoid rule over the node grid.
  double integrate(std::span<const double> f) const;
  /// Grid integral of phi^r.
  double integrate_phi_power(double r) const;

  /// Dirichlet heat kernel p_t(x, y) = sum_k exp(-lambda_k t) e_k(x) e_k(y) over the retained modes.
  double heat_kernel(double t, std::array<double, 2> a, std::array<double, 2> b) const;

  /// Projection coefficients (f, e_k) under the grid quadrature (exact orthogonality).
  std::vector<double> coefficients(std::span<const double> f) const;
  /// sum_k w_k c_k e_k on the nodes.
  std::vector<double> synthesize(std::span<const double> weighted_coeffs) const;

private:
  DomainSpec domain_;
  std::vector<Mode> modes_;
  std::size_t kx_max_ = 0, ky_max_ = 0;
  std::vector<std::vector<double>> axis_x_;  // axis_x_[k-1][i] = sqrt(2/Lx) sin(k pi x_i / Lx)
  std::vector<std::vector<double>> axis_y_;
  std::vector<double> phi_, phi_l2_;
  double phi_sup_ = 0.0;
  double unit_mass_factor_ = 1.0;
};

/// T_t f by spectral synthesis; T_0 f = f exactly.
std::vector<double> apply_semigroup(const SpectralBasis& basis, std::span<const double> f, double t);

/// exp(gamma t) sup_x (T_t 1)(x) with 1 the interior indicator; 1 at t = 0.
double semigroup_sup_norm(const SpectralBasis& basis, double gamma, double t);

/// Same quantity tabulated for many times; reuses the projection of the indicator.
std::vector<double> semigroup_sup_norm_table(const SpectralBasis& basis, double gamma,
                                             std::span<const double> times);

struct KernelResidual {
  double t = 0.0;
  std::array<double, 2> x{}, y{};
  double ratio = 0.0;        // exp(lambda1 t) p_t(x,y) / (phi_l2(x) phi_l2(y) Z)
  double upper_slack = 0.0;  // upper envelope - ratio (>= 0 when satisfied)
};

struct KernelViolation {
  double t = 0.0;
  double sup_ratio = 0.0;
  std::string message;
};

struct KernelBoundFit {
  double c = 0.0;              // smallest feasible constant (bisection)
  double c_closed_form = 0.0;  // max of the per-sample requirements
  bool feasible = true;
  std::string convention = "L2";
  double z = 1.0;
  std::vector<double> t_samples;
  std::vector<double> sup_ratio;         // per t: max over (x, y) samples
  std::vector<double> lower_slack;       // per t: sup_ratio - max(1, t^{-(d+2)/2} / c)
  std::size_t pointwise_lower_misses = 0;  // samples with ratio < 1 (expected off-diagonal)
  std::vector<KernelResidual> residuals;
  std::optional<KernelViolation> violation;
};

/// Fit the constant of the two-sided kernel bound over t_samples x (points x points).
/// The lower side is required of the supremum over the sampled pairs at each t.
KernelBoundFit fit_kernel_bound(const SpectralBasis& basis, std::span<const double> t_samples,
                                std::span<const std::array<double, 2>> points);

/// C0 * phi_sup^2 * (1 + c) * exp(-(lambda1 - gamma) t).
double semigroup_decay_bound(const SpectralBasis& basis, double c0, double gamma, double c, double t);

/// Columns: x[, y], phi, e1, e2.
void write_basis_csv(const SpectralBasis& basis, std::ostream& out);

}  // namespace blowup::spectral
