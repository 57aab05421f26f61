#include "blowup/spectral.h"

#include "blowup/csv.h"
#include "blowup/errors.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace blowup::spectral {

namespace {

// sqrt(2/L) sin(k pi x_i / L) on nodes i = 0..n, exact zeros at both ends.
std::vector<double> axis_mode(double length, std::size_t n, std::size_t k) {
  std::vector<double> v(n + 1, 0.0);
  const double amp = std::sqrt(2.0 / length);
  for (std::size_t i = 1; i < n; ++i)
    v[i] = amp * std::sin(std::numbers::pi * static_cast<double>(k * i % (2 * n)) / static_cast<double>(n));
  return v;
}

double axis_mode_at(double length, std::size_t k, double x) {
  return std::sqrt(2.0 / length) * std::sin(static_cast<double>(k) * std::numbers::pi * x / length);
}

}  // namespace

DomainSpec DomainSpec::interval(double length, std::size_t n_cells) {
  std::vector<std::string> v;
  if (!(length > 0.0) || !std::isfinite(length)) v.push_back("interval length must be positive and finite");
  if (n_cells < 2) v.push_back("interval needs at least 2 cells");
  if (!v.empty()) throw ConfigError(v);
  DomainSpec d;
  d.shape = Shape::interval;
  d.lx = length;
  d.nx = n_cells;
  return d;
}

DomainSpec DomainSpec::rectangle(double lx, double ly, std::size_t nx, std::size_t ny) {
  std::vector<std::string> v;
  if (!(lx > 0.0) || !std::isfinite(lx)) v.push_back("rectangle side lx must be positive and finite");
  if (!(ly > 0.0) || !std::isfinite(ly)) v.push_back("rectangle side ly must be positive and finite");
  if (nx < 2) v.push_back("rectangle needs at least 2 cells along x");
  if (ny < 2) v.push_back("rectangle needs at least 2 cells along y");
  if (!v.empty()) throw ConfigError(v);
  DomainSpec d;
  d.shape = Shape::rectangle;
  d.lx = lx;
  d.ly = ly;
  d.nx = nx;
  d.ny = ny;
  return d;
}

std::array<double, 2> DomainSpec::node(std::size_t idx) const {
  const std::size_t i = idx % nodes_x();
  const std::size_t j = idx / nodes_x();
  return {static_cast<double>(i) * hx(), shape == Shape::interval ? 0.0 : static_cast<double>(j) * hy()};
}

bool DomainSpec::on_boundary(std::size_t idx) const {
  const std::size_t i = idx % nodes_x();
  const std::size_t j = idx / nodes_x();
  if (i == 0 || i == nx) return true;
  return shape == Shape::rectangle && (j == 0 || j == ny);
}

std::size_t DomainSpec::max_modes() const noexcept {
  return shape == Shape::interval ? nx - 1 : (nx - 1) * (ny - 1);
}

double DomainSpec::quadrature_weight(std::size_t idx) const {
  const std::size_t i = idx % nodes_x();
  const std::size_t j = idx / nodes_x();
  double w = (i == 0 || i == nx) ? 0.5 * hx() : hx();
  if (shape == Shape::rectangle) w *= (j == 0 || j == ny) ? 0.5 * hy() : hy();
  return w;
}

SpectralBasis::SpectralBasis(const DomainSpec& domain, std::size_t n_modes) : domain_(domain) {
  if (n_modes == 0) throw ConfigError("spectral basis needs at least one mode");
  if (n_modes > domain.max_modes())
    throw ConfigError("requested " + std::to_string(n_modes) + " modes but the grid resolves only " +
                      std::to_string(domain.max_modes()));
  const double px = std::numbers::pi / domain.lx;
  if (domain.shape == Shape::interval) {
    for (std::size_t k = 1; k <= n_modes; ++k) modes_.push_back({k, 0, std::pow(px * static_cast<double>(k), 2)});
  } else {
    const double py = std::numbers::pi / domain.ly;
    std::vector<Mode> all;
    // Only pairs that can make the cut are enumerated.
    const std::size_t kx_lim = std::min(domain.nx - 1, n_modes);
    const std::size_t ky_lim = std::min(domain.ny - 1, n_modes);
    for (std::size_t a = 1; a <= kx_lim; ++a)
      for (std::size_t b = 1; b <= ky_lim; ++b)
        all.push_back({a, b, std::pow(px * static_cast<double>(a), 2) + std::pow(py * static_cast<double>(b), 2)});
    std::sort(all.begin(), all.end(), [](const Mode& l, const Mode& r) {
      if (l.lambda != r.lambda) return l.lambda < r.lambda;
      return l.kx != r.kx ? l.kx < r.kx : l.ky < r.ky;
    });
    all.resize(n_modes);
    modes_ = std::move(all);
  }
  for (const auto& m : modes_) {
    kx_max_ = std::max(kx_max_, m.kx);
    ky_max_ = std::max(ky_max_, m.ky);
  }
  for (std::size_t k = 1; k <= kx_max_; ++k) axis_x_.push_back(axis_mode(domain.lx, domain.nx, k));
  for (std::size_t k = 1; k <= ky_max_; ++k) axis_y_.push_back(axis_mode(domain.ly, domain.ny, k));

  phi_l2_ = mode_values(0);
  double mass = integrate(phi_l2_);
  unit_mass_factor_ = 1.0 / mass;
  phi_.resize(phi_l2_.size());
  for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] = unit_mass_factor_ * phi_l2_[i];
  // Analytic supremum of the principal mode (attained at the centre), not the grid maximum.
  double sup_l2 = std::sqrt(2.0 / domain.lx);
  if (domain.shape == Shape::rectangle) sup_l2 *= std::sqrt(2.0 / domain.ly);
  phi_sup_ = unit_mass_factor_ * sup_l2;
}

std::vector<double> SpectralBasis::eigenvalues() const {
  std::vector<double> out;
  out.reserve(modes_.size());
  for (const auto& m : modes_) out.push_back(m.lambda);
  return out;
}

std::vector<double> SpectralBasis::mode_values(std::size_t k) const {
  const auto& m = modes_.at(k);
  const auto& ex = axis_x_[m.kx - 1];
  if (domain_.shape == Shape::interval) return ex;
  const auto& ey = axis_y_[m.ky - 1];
  std::vector<double> v(domain_.node_count());
  const std::size_t nxn = domain_.nodes_x();
  for (std::size_t j = 0; j < domain_.nodes_y(); ++j)
    for (std::size_t i = 0; i < nxn; ++i) v[i + nxn * j] = ex[i] * ey[j];
  return v;
}

double SpectralBasis::mode_at(std::size_t k, double x, double y) const {
  const auto& m = modes_.at(k);
  double v = axis_mode_at(domain_.lx, m.kx, x);
  if (domain_.shape == Shape::rectangle) v *= axis_mode_at(domain_.ly, m.ky, y);
  return v;
}

double SpectralBasis::integrate(std::span<const double> f) const {
  if (f.size() != domain_.node_count()) throw ConfigError("node function has the wrong length");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += domain_.quadrature_weight(i) * f[i];
  return acc;
}

double SpectralBasis::integrate_phi_power(double r) const {
  std::vector<double> g(phi_.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = phi_[i] > 0.0 ? std::pow(phi_[i], r) : 0.0;
  return integrate(g);
}

double SpectralBasis::heat_kernel(double t, std::array<double, 2> a, std::array<double, 2> b) const {
  if (!(t > 0.0)) throw DomainError("heat kernel needs t > 0");
  double acc = 0.0;
  for (std::size_t k = 0; k < modes_.size(); ++k)
    acc += std::exp(-modes_[k].lambda * t) * mode_at(k, a[0], a[1]) * mode_at(k, b[0], b[1]);
  return acc;
}

std::vector<double> SpectralBasis::coefficients(std::span<const double> f) const {
  if (f.size() != domain_.node_count()) throw ConfigError("node function has the wrong length");
  const std::size_t nxn = domain_.nodes_x();
  const double hx = domain_.hx();
  std::vector<double> c(modes_.size(), 0.0);
  if (domain_.shape == Shape::interval) {
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      const auto& e = axis_x_[modes_[k].kx - 1];
      double acc = 0.0;
      for (std::size_t i = 1; i + 1 < nxn; ++i) acc += f[i] * e[i];
      c[k] = hx * acc;
    }
    return c;
  }
  // Separable: contract along x first, then along y.
  const std::size_t nyn = domain_.nodes_y();
  std::vector<std::vector<double>> g(kx_max_, std::vector<double>(nyn, 0.0));
  for (std::size_t a = 0; a < kx_max_; ++a)
    for (std::size_t j = 1; j + 1 < nyn; ++j) {
      double acc = 0.0;
      for (std::size_t i = 1; i + 1 < nxn; ++i) acc += f[i + nxn * j] * axis_x_[a][i];
      g[a][j] = hx * acc;
    }
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    const auto& gy = g[modes_[k].kx - 1];
    const auto& ey = axis_y_[modes_[k].ky - 1];
    double acc = 0.0;
    for (std::size_t j = 1; j + 1 < nyn; ++j) acc += gy[j] * ey[j];
    c[k] = domain_.hy() * acc;
  }
  return c;
}

std::vector<double> SpectralBasis::synthesize(std::span<const double> w) const {
  if (w.size() != modes_.size()) throw ConfigError("coefficient vector has the wrong length");
  const std::size_t nxn = domain_.nodes_x();
  std::vector<double> out(domain_.node_count(), 0.0);
  if (domain_.shape == Shape::interval) {
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      if (w[k] == 0.0) continue;
      const auto& e = axis_x_[modes_[k].kx - 1];
      for (std::size_t i = 1; i + 1 < nxn; ++i) out[i] += w[k] * e[i];
    }
    return out;
  }
  const std::size_t nyn = domain_.nodes_y();
  std::vector<std::vector<double>> h(kx_max_, std::vector<double>(nyn, 0.0));
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    if (w[k] == 0.0) continue;
    const auto& ey = axis_y_[modes_[k].ky - 1];
    auto& row = h[modes_[k].kx - 1];
    for (std::size_t j = 1; j + 1 < nyn; ++j) row[j] += w[k] * ey[j];
  }
  for (std::size_t a = 0; a < kx_max_; ++a)
    for (std::size_t j = 1; j + 1 < nyn; ++j) {
      const double hj = h[a][j];
      if (hj == 0.0) continue;
      for (std::size_t i = 1; i + 1 < nxn; ++i) out[i + nxn * j] += hj * axis_x_[a][i];
    }
  return out;
}

std::vector<double> apply_semigroup(const SpectralBasis& basis, std::span<const double> f, double t) {
  if (t < 0.0) throw DomainError("semigroup time must be non-negative");
  if (f.size() != basis.domain().node_count()) throw ConfigError("node function has the wrong length");
  if (t == 0.0) return {f.begin(), f.end()};
  auto c = basis.coefficients(f);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= std::exp(-basis.modes()[k].lambda * t);
  return basis.synthesize(c);
}

namespace {

std::vector<double> interior_indicator(const DomainSpec& d) {
  std::vector<double> one(d.node_count(), 0.0);
  for (std::size_t i = 0; i < one.size(); ++i)
    if (!d.on_boundary(i)) one[i] = 1.0;
  return one;
}

}  // namespace

std::vector<double> semigroup_sup_norm_table(const SpectralBasis& basis, double gamma,
                                             std::span<const double> times) {
  const auto c = basis.coefficients(interior_indicator(basis.domain()));
  std::vector<double> out(times.size());
  std::vector<double> w(c.size());
  for (std::size_t n = 0; n < times.size(); ++n) {
    const double t = times[n];
    if (t < 0.0) throw DomainError("semigroup time must be non-negative");
    if (t == 0.0) {
      out[n] = 1.0;
      continue;
    }
    for (std::size_t k = 0; k < c.size(); ++k) w[k] = c[k] * std::exp(-basis.modes()[k].lambda * t);
    const auto v = basis.synthesize(w);
    out[n] = std::exp(gamma * t) * *std::max_element(v.begin(), v.end());
  }
  return out;
}

double semigroup_sup_norm(const SpectralBasis& basis, double gamma, double t) {
  const double times[1] = {t};
  return semigroup_sup_norm_table(basis, gamma, times)[0];
}

KernelBoundFit fit_kernel_bound(const SpectralBasis& basis, std::span<const double> t_samples,
                                std::span<const std::array<double, 2>> points) {
  if (t_samples.empty() || points.empty()) throw ConfigError("kernel fit needs time and point samples");
  const auto& dom = basis.domain();
  for (double t : t_samples)
    if (!(t > 0.0)) throw DomainError("kernel fit needs t > 0");
  for (const auto& p : points) {
    const bool inside_x = p[0] > 0.0 && p[0] < dom.lx;
    const bool inside_y = dom.shape == Shape::interval || (p[1] > 0.0 && p[1] < dom.ly);
    if (!inside_x || !inside_y) throw DomainError("kernel fit points must lie in the open domain");
  }
  const double e = (dom.dimension() + 2) / 2.0;
  const double lam1 = basis.lambda1();
  const double gap = basis.second_gap();
  const std::size_t nk = basis.size(), np = points.size();

  std::vector<double> table(nk * np);  // table[k*np + p] = e_k(point p)
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t p = 0; p < np; ++p) table[k * np + p] = basis.mode_at(k, points[p][0], points[p][1]);

  KernelBoundFit fit;
  fit.t_samples.assign(t_samples.begin(), t_samples.end());
  std::vector<double> need_lower(t_samples.size()), need_upper(t_samples.size(), 0.0);
  std::vector<double> decay(nk);
  for (std::size_t n = 0; n < t_samples.size(); ++n) {
    const double t = t_samples[n];
    for (std::size_t k = 0; k < nk; ++k) decay[k] = std::exp(-(basis.modes()[k].lambda - lam1) * t);
    const double small_t = std::pow(std::min(1.0, t), e);
    const double damp = std::exp(gap * t);
    double sup = -1.0;
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = 0; b < np; ++b) {
        double acc = 0.0;
        for (std::size_t k = 0; k < nk; ++k) acc += decay[k] * table[k * np + a] * table[k * np + b];
        const double ratio = acc / (table[a] * table[b] * fit.z);
        sup = std::max(sup, ratio);
        if (ratio < 1.0) ++fit.pointwise_lower_misses;
        need_upper[n] = std::max(need_upper[n], (ratio - 1.0) * small_t * damp);
        fit.residuals.push_back({t, points[a], points[b], ratio, 0.0});
      }
    fit.sup_ratio.push_back(sup);
    need_lower[n] = std::pow(t, -e) / sup;
    if (sup < 1.0 && !fit.violation)
      fit.violation = KernelViolation{t, sup, "sup over sampled pairs of the normalized kernel ratio is below 1"};
  }
  fit.feasible = !fit.violation.has_value();
  fit.c_closed_form = std::max(*std::max_element(need_lower.begin(), need_lower.end()),
                               *std::max_element(need_upper.begin(), need_upper.end()));

  // The 1 <= sup side does not depend on c; bisection covers the c-dependent inequalities.
  auto ok = [&](double c) {
    for (std::size_t n = 0; n < t_samples.size(); ++n) {
      const double t = t_samples[n];
      if (fit.sup_ratio[n] < std::pow(t, -e) / c) return false;
    }
    for (const auto& r : fit.residuals) {
      const double env = 1.0 + c * std::pow(std::min(1.0, r.t), -e) * std::exp(-gap * r.t);
      if (r.ratio > env) return false;
    }
    return true;
  };
  double hi = 1.0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("kernel bound fit: no finite constant found");
  }
  double lo = 0.0;
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  fit.c = hi;
  for (std::size_t n = 0; n < t_samples.size(); ++n)
    fit.lower_slack.push_back(fit.sup_ratio[n] - std::max(1.0, std::pow(t_samples[n], -e) / fit.c));
  for (auto& r : fit.residuals)
    r.upper_slack = 1.0 + fit.c * std::pow(std::min(1.0, r.t), -e) * std::exp(-gap * r.t) - r.ratio;
  return fit;
}

double semigroup_decay_bound(const SpectralBasis& basis, double c0, double gamma, double c, double t) {
  const double s = basis.phi_sup();
  return c0 * s * s * (1.0 + c) * std::exp(-(basis.lambda1() - gamma) * t);
}

void write_basis_csv(const SpectralBasis& basis, std::ostream& out) {
  csv::Writer w(out);
  const bool rect = basis.domain().shape == Shape::rectangle;
  if (rect)
    w.header({"x", "y", "phi", "e1", "e2"});
  else
    w.header({"x", "phi", "e1", "e2"});
  const auto e1 = basis.mode_values(0);
  const auto e2 = basis.size() > 1 ? basis.mode_values(1) : std::vector<double>(e1.size(), 0.0);
  for (std::size_t i = 0; i < e1.size(); ++i) {
    const auto xy = basis.domain().node(i);
    w.field(xy[0]);
    if (rect) w.field(xy[1]);
    w.field(basis.phi()[i]).field(e1[i]).field(e2[i]);
    w.end_row();
  }
}

}  // namespace blowup::spectral
