#include "blowup/fbm.h"

#include "blowup/csv.h"
#include "blowup/errors.h"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <random>
#include <string>

namespace blowup::fbm {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Separate instances per nesting level: the outer integrand calls the inner quadrature.
boost::math::quadrature::tanh_sinh<double>& integrator(int level = 0) {
  thread_local boost::math::quadrature::tanh_sinh<double> ts[3];
  return ts[level];
}

constexpr double kQuadTol = 1e-12;

// fGn autocovariance at integer lag k for unit spacing.
double fgn_autocov(double hurst, double k) {
  const double two_h = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(k + 1.0), two_h) - 2.0 * std::pow(std::abs(k), two_h) +
                std::pow(std::abs(k - 1.0), two_h));
}

// Kernel without the constant C_H.
double raw_kernel(double hurst, double t, double s) {
  const double a = hurst - 0.5;
  if (a == 0.0) return 1.0;
  const double lead = std::pow(t / s, a) * std::pow(t - s, a);
  // int_s^t u^{H-3/2} (u-s)^{H-1/2} du with u = s + (t-s) y; tanh-sinh copes with the
  // algebraic endpoint behaviour. Always integrating over [0, 1] sidesteps an assertion in
  // boost's interval handling for very short intervals.
  const double len = t - s;
  auto f = [&](double y) {
    if (y <= 0.0) return 0.0;
    return std::pow(s + len * y, hurst - 1.5) * std::pow(y, a);
  };
  const double inner = std::pow(len, a + 1.0) * integrator(0).integrate(f, 0.0, 1.0, kQuadTol);
  return lead - a * std::pow(s, -a) * inner;
}

double raw_square_integral(double hurst, double t) {
  auto f = [&](double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    const double k = raw_kernel(hurst, t, t * y);
    return k * k;
  };
  return t * integrator(1).integrate(f, 0.0, 1.0, kQuadTol);
}

std::vector<double> standard_normals(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(count);
  for (auto& v : z) v = normal(rng);
  return z;
}

}  // namespace

HurstParameter::HurstParameter(double h) : h_(h) {
  if (!(h >= 0.5 && h < 1.0))
    throw DomainError("Hurst index must lie in [0.5, 1), got " + csv::format_double(h));
}

TimeGrid::TimeGrid(double t_max, std::size_t n_steps) : t_max_(t_max), n_steps_(n_steps) {
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw DomainError("time grid needs a finite t_max > 0");
  if (n_steps == 0) throw DomainError("time grid needs n_steps >= 1");
}

double TimeGrid::node(std::size_t i) const noexcept {
  if (i >= n_steps_) return i == n_steps_ ? t_max_ : static_cast<double>(i) * dt();
  return static_cast<double>(i) * dt();
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> t(size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = node(i);
  return t;
}

const char* to_string(SamplingMethod m) {
  return m == SamplingMethod::circulant ? "circulant" : "cholesky";
}

double FbmPath::at(double t) const {
  if (t <= 0.0) return values.front();
  if (t >= grid.t_max()) return values.back();
  const double x = t / grid.dt();
  auto i = static_cast<std::size_t>(x);
  if (i >= grid.n_steps()) return values.back();
  const double w = x - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double FbmPath::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double covariance(HurstParameter h, double t, double s) {
  if (t < 0.0 || s < 0.0) throw DomainError("covariance: times must be non-negative");
  const double two_h = 2.0 * h.value();
  return 0.5 * (std::pow(s, two_h) + std::pow(t, two_h) - std::pow(std::abs(t - s), two_h));
}

double volterra_constant(HurstParameter h) {
  if (h.is_brownian()) return 1.0;
  static std::mutex mu;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(h.value()); it != cache.end()) return it->second;
  }
  const double c = 1.0 / std::sqrt(raw_square_integral(h.value(), 1.0));
  std::lock_guard lock(mu);
  cache.emplace(h.value(), c);
  return c;
}

double volterra_kernel(HurstParameter h, double t, double s) {
  if (!(s > 0.0) || !(s < t)) throw DomainError("volterra_kernel: requires 0 < s < t");
  if (h.is_brownian()) return 1.0;
  return volterra_constant(h) * raw_kernel(h.value(), t, s);
}

double kernel_square_integral(HurstParameter h, double t) {
  if (!(t > 0.0)) throw DomainError("kernel_square_integral: requires t > 0");
  if (h.is_brownian()) return t;
  const double c = volterra_constant(h);
  return c * c * raw_square_integral(h.value(), t);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct PathSampler::Impl {
  HurstParameter hurst;
  TimeGrid grid;
  SamplingMethod method;
  double min_rel_eig = 0.0;
  // circulant
  std::vector<double> sqrt_eig;  // sqrt(lambda_j / m)
  fftw_plan plan = nullptr;
  // cholesky
  Eigen::MatrixXd lower;

  Impl(HurstParameter h, const TimeGrid& g) : hurst(h), grid(g), method(SamplingMethod::circulant) {}

  ~Impl() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }

  bool setup_circulant() {
    const std::size_t n = grid.n_steps();
    const std::size_t m = 2 * n;
    std::vector<std::complex<double>> row(m), eig(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t lag = k <= n ? k : m - k;
      row[k] = fgn_autocov(hurst.value(), static_cast<double>(lag));
    }
    {
      std::lock_guard lock(fftw_planner_mutex());
      plan = fftw_plan_dft_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(row.data()),
                              reinterpret_cast<fftw_complex*>(eig.data()), FFTW_FORWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (!plan) throw NumericalError("FFTW failed to create a plan of size " + std::to_string(m));
    // Planning with FFTW_ESTIMATE leaves the input untouched.
    fftw_execute(plan);
    double max_eig = 0.0, min_eig = std::numeric_limits<double>::infinity();
    for (const auto& e : eig) {
      max_eig = std::max(max_eig, e.real());
      min_eig = std::min(min_eig, e.real());
    }
    min_rel_eig = min_eig / max_eig;
    if (min_eig < -1e-10 * max_eig) return false;
    sqrt_eig.resize(m);
    for (std::size_t j = 0; j < m; ++j)
      sqrt_eig[j] = std::sqrt(std::max(eig[j].real(), 0.0) / static_cast<double>(m));
    return true;
  }

  void setup_cholesky() {
    const std::size_t n = grid.n_steps();
    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        cov(i, j) = cov(j, i) = covariance(hurst, grid.node(i + 1), grid.node(j + 1));
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw NumericalError("Cholesky factorization of the fBm covariance failed (H=" +
                           csv::format_double(hurst.value()) + ", n=" + std::to_string(n) +
                           "); matrix not numerically positive definite");
    lower = llt.matrixL();
    for (std::size_t i = 0; i < n; ++i)
      if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i)))
        throw NumericalError("Cholesky factor has a non-positive pivot at row " + std::to_string(i));
    method = SamplingMethod::cholesky;
    min_rel_eig = 0.0;
  }

  FbmPath sample(std::uint64_t seed) const {
    const std::size_t n = grid.n_steps();
    FbmPath path{grid, std::vector<double>(n + 1, 0.0), hurst, seed, method};
    if (method == SamplingMethod::circulant) {
      const std::size_t m = 2 * n;
      const auto z = standard_normals(seed, 2 * m);
      std::vector<std::complex<double>> w(m), y(m);
      for (std::size_t j = 0; j < m; ++j) w[j] = sqrt_eig[j] * std::complex<double>(z[2 * j], z[2 * j + 1]);
      fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(w.data()),
                       reinterpret_cast<fftw_complex*>(y.data()));
      const double scale = std::pow(grid.dt(), hurst.value());
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += scale * y[k].real();
        path.values[k + 1] = acc;
      }
    } else {
      const auto z = standard_normals(seed, n);
      Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(n));
      Eigen::VectorXd b = lower.triangularView<Eigen::Lower>() * zv;
      for (std::size_t k = 0; k < n; ++k) path.values[k + 1] = b(static_cast<Eigen::Index>(k));
    }
    return path;
  }
};

PathSampler::PathSampler(HurstParameter h, const TimeGrid& grid, SamplingMethod requested)
    : impl_(std::make_unique<Impl>(h, grid)) {
  if (requested == SamplingMethod::circulant && impl_->setup_circulant()) return;
  impl_->setup_cholesky();
}

PathSampler::~PathSampler() = default;
PathSampler::PathSampler(PathSampler&&) noexcept = default;
PathSampler& PathSampler::operator=(PathSampler&&) noexcept = default;

FbmPath PathSampler::sample(std::uint64_t seed) const { return impl_->sample(seed); }
SamplingMethod PathSampler::method() const noexcept { return impl_->method; }
double PathSampler::min_relative_eigenvalue() const noexcept { return impl_->min_rel_eig; }

FbmPath sample_path(HurstParameter h, const TimeGrid& grid, std::uint64_t seed, SamplingMethod method) {
  return PathSampler(h, grid, method).sample(seed);
}

VolterraSampler::VolterraSampler(HurstParameter h, const TimeGrid& grid) : h_(h), grid_(grid) {
  const std::size_t n = grid.n_steps();
  const double dt = grid.dt();
  weights_.resize(n);
  // K(i dt, x dt) = dt^{H-1/2} K(i, x): build weights on the unit lattice.
  const double scale = std::pow(dt, h.value() - 0.5);
  for (std::size_t i = 1; i <= n; ++i) {
    auto& row = weights_[i - 1];
    row.resize(i);
    const double ti = static_cast<double>(i);
    for (std::size_t j = 0; j < i; ++j) {
      if (h.is_brownian()) {
        row[j] = 1.0;
        continue;
      }
      const double lo = static_cast<double>(j);
      auto f = [&](double y) {
        const double x = lo + y;
        return (x > 0.0 && x < ti) ? volterra_kernel(h, ti, x) : 0.0;
      };
      row[j] = scale * integrator(2).integrate(f, 0.0, 1.0, 1e-9);
    }
  }
}

FbmPath VolterraSampler::sample(std::uint64_t seed) const {
  const std::size_t n = grid_.n_steps();
  const auto z = standard_normals(seed, n);
  const double sdt = std::sqrt(grid_.dt());
  FbmPath path{grid_, std::vector<double>(n + 1, 0.0), h_, seed, SamplingMethod::cholesky};
  for (std::size_t i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j) acc += weights_[i - 1][j] * z[j];
    path.values[i] = sdt * acc;
  }
  return path;
}

std::vector<double> running_sup(std::span<const double> values) {
  std::vector<double> out(values.size());
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    m = std::max(m, std::abs(values[i]));
    out[i] = m;
  }
  return out;
}

namespace {

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

ExpIntegral exp_integral(const FbmPath& path, double sigma, double nu) {
  const std::size_t len = path.values.size();
  const double dt = path.grid.dt();
  ExpIntegral out;
  out.values.assign(len, 0.0);
  out.log_values.assign(len, -std::numeric_limits<double>::infinity());
  out.log_space = std::abs(sigma) * path.max_abs() > 500.0;
  auto g = [&](std::size_t i) { return sigma * path.values[i] - nu * path.grid.node(i); };
  if (!out.log_space) {
    double acc = 0.0, prev = std::exp(g(0));
    for (std::size_t i = 1; i < len; ++i) {
      const double cur = std::exp(g(i));
      acc += 0.5 * dt * (prev + cur);
      out.values[i] = acc;
      out.log_values[i] = std::log(acc);
      prev = cur;
    }
    return out;
  }
  const double log_half_dt = std::log(0.5 * dt);
  double acc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < len; ++i) {
    acc = log_add_exp(acc, log_half_dt + log_add_exp(g(i - 1), g(i)));
    out.log_values[i] = acc;
    out.values[i] = std::exp(acc);
  }
  return out;
}

const ExpIntegral& PathFunctionals::exp_integral(double sigma, double nu) const {
  auto it = exp_integrals.find(ExpIntegralKey{sigma, nu});
  if (it == exp_integrals.end())
    throw ConfigError("exp integral (" + csv::format_double(sigma) + ", " + csv::format_double(nu) +
                      ") was not requested");
  return it->second;
}

PathFunctionals path_functionals(const FbmPath& path, std::span<const ExpIntegralKey> requests) {
  PathFunctionals out;
  out.running_sup = running_sup(path.values);
  for (const auto& key : requests)
    if (!out.exp_integrals.count(key))
      out.exp_integrals.emplace(key, fbm::exp_integral(path, key.sigma, key.nu));
  return out;
}

LilReport lil_diagnostic(std::span<const FbmPath> paths, double epsilon) {
  if (paths.empty()) throw ConfigError("lil_diagnostic: empty ensemble");
  LilReport rep;
  rep.n_paths = paths.size();
  rep.epsilon = epsilon;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    const double t = p.grid.t_max();
    if (!(t > std::exp(1.0)))
      throw DomainError("lil_diagnostic: t_max must exceed e so that log log t is positive");
    const double env = (1.0 + epsilon) * std::pow(t, p.hurst.value()) * std::sqrt(2.0 * std::log(std::log(t)));
    if (i == 0) {
      rep.t_max = t;
      rep.envelope = env;
    }
    if (std::abs(p.values.back()) <= env) ++rep.within;
  }
  rep.fraction = static_cast<double>(rep.within) / static_cast<double>(rep.n_paths);
  return rep;
}

void write_path_csv(const FbmPath& path, std::ostream& out) {
  csv::Writer w(out);
  w.header({"t", "B"});
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    w.field(path.grid.node(i)).field(path.values[i]);
    w.end_row();
  }
}

}  // namespace blowup::fbm
