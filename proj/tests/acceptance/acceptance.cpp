// One pass/fail line per acceptance criterion; exit status 1 if any fails.

#include "blowup/bounds.h"
#include "blowup/config.h"
#include "blowup/errors.h"
#include "blowup/fbm.h"
#include "blowup/harness.h"
#include "blowup/probability.h"
#include "blowup/rpde.h"
#include "blowup/spectral.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace blowup;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("blowup_acceptance_" + name);
  fs::remove_all(d);
  return d;
}

config::ExperimentConfig default_config() { return config::load_config(BLOWUP_DEFAULT_CONFIG); }

// 1. Empirical covariance on an 8-node subgrid within 4 standard errors.
Outcome fbm_fidelity() {
  const std::size_t n_paths = 10000;
  const fbm::TimeGrid grid(1.0, 256);
  double worst = 0.0;
  std::string where;
  for (double hv : {0.5, 0.75, 0.9}) {
    const fbm::HurstParameter h(hv);
    const fbm::PathSampler sampler(h, grid);
    std::vector<std::array<double, 8>> x(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
      const auto path = sampler.sample(fbm::replicate_seed(1001, p));
      for (std::size_t j = 0; j < 8; ++j) x[p][j] = path.values[32 * (j + 1)];
    }
    for (std::size_t a = 0; a < 8; ++a)
      for (std::size_t b = a; b < 8; ++b) {
        double m = 0.0, m2 = 0.0;
        for (const auto& r : x) {
          const double v = r[a] * r[b];
          m += v;
          m2 += v * v;
        }
        const double n = static_cast<double>(n_paths);
        m /= n;
        const double se = std::sqrt((m2 / n - m * m) / (n - 1.0));
        const double ref = fbm::covariance(h, grid.node(32 * (a + 1)), grid.node(32 * (b + 1)));
        const double z = std::abs(m - ref) / se;
        if (z > worst) {
          worst = z;
          where = "H=" + num(hv) + " (" + std::to_string(a) + "," + std::to_string(b) + ")";
        }
      }
  }
  return {worst < 4.0, "max |cov - R_H| = " + num(worst) + " SE at " + where + " over 3 x 36 entries"};
}

// 2. int_0^t K_H(t, s)^2 ds = t^{2H}.
Outcome volterra_normalization() {
  double worst = 0.0;
  for (double h : {0.6, 0.75, 0.9})
    for (double t : {0.5, 1.0, 2.0})
      worst = std::max(worst,
                       std::abs(fbm::kernel_square_integral(fbm::HurstParameter(h), t) / std::pow(t, 2.0 * h) - 1.0));
  return {worst <= 1e-6, "max relative error " + num(worst) + " over H in {0.6,0.75,0.9} x t in {0.5,1,2}"};
}

// 3. T_t phi = e^{-lambda1 t} phi on interval(1).
Outcome eigen_identity() {
  const spectral::SpectralBasis basis(spectral::DomainSpec::interval(1.0, 256), 255);
  const auto& phi = basis.phi();
  const double sup = *std::max_element(phi.begin(), phi.end());
  double worst = 0.0;
  for (double t : {0.01, 0.1, 1.0}) {
    const auto tf = spectral::apply_semigroup(basis, phi, t);
    const double e = std::exp(-basis.lambda1() * t);
    for (std::size_t i = 0; i < phi.size(); ++i) worst = std::max(worst, std::abs(tf[i] - e * phi[i]) / sup);
  }
  return {worst <= 1e-8, "max sup-norm deviation " + num(worst)};
}

// 4. Two-sided heat-kernel bound with 500 modes on a 20 x 10 x 10 sample grid.
Outcome kernel_bound() {
  const spectral::SpectralBasis basis(spectral::DomainSpec::interval(1.0, 512), 500);
  std::vector<double> ts(20);
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = 1e-3 * std::pow(1e3, static_cast<double>(i) / 19.0);
  std::vector<std::array<double, 2>> pts;
  for (std::size_t i = 0; i < 10; ++i) pts.push_back({(i + 0.5) / 10.0, 0.0});
  const auto fit = spectral::fit_kernel_bound(basis, ts, pts);
  const bool ok = fit.feasible && std::isfinite(fit.c) && !fit.violation;
  return {ok, "c = " + num(fit.c) + " (" + fit.convention + "), " + std::to_string(fit.residuals.size()) +
                  " samples, violations " + (fit.violation ? fit.violation->message : std::string("0"))};
}

// 5. int_0^T e^{2(W - alpha t)} dt against inverse-gamma(alpha, 1/2).
Outcome exponential_functional() {
  bool ok = true;
  std::string d;
  for (double alpha : {2.0, 3.0}) {
    const auto r = prob::exponential_functional_law_check(alpha, 10000, 424242 + static_cast<std::uint64_t>(alpha));
    const double rel = std::abs(r.sample_mean - r.expected_mean) / r.expected_mean;
    const bool pass = r.passed && r.ks < r.band + r.allowance && rel < 0.1;
    ok = ok && pass;
    d += "alpha=" + num(alpha) + ": KS " + num(r.ks) + " < " + num(r.band) + "+" + num(r.allowance) + ", mean " +
         num(r.sample_mean) + " vs " + num(r.expected_mean) + "; ";
  }
  return {ok, d};
}

// 6. tau* <= tau_num <= tau1* on the default parameter set.
Outcome ordering_suite() {
  auto cfg = default_config();
  cfg.ensemble_size = 200;
  const auto s = harness::prepare(cfg);
  std::vector<harness::BoundsRow> rows(cfg.ensemble_size);
  harness::parallel_for(rows.size(), std::thread::hardware_concurrency(),
                        [&](std::size_t i) { rows[i] = harness::bounds_row(s, i); });

  std::size_t blew = 0, lower_bad = 0, upper_checked = 0;
  std::vector<std::size_t> upper_bad;
  for (const auto& r : rows) {
    const bool b = r.verdict != rpde::Verdict::global_until_horizon;
    if (b) {
      ++blew;
      if (!(r.tau_lower <= *r.tau_num)) ++lower_bad;
    }
    if (r.upper_case != 1 || r.admissible_until < 0.0) continue;
    const double up = cfg.variants.st1_mirrored ? r.tau_upper_mirrored : r.tau_upper_printed;
    const double reach = b ? std::min(*r.tau_num, up) : up;
    if (r.admissible_until < reach) continue;
    ++upper_checked;
    if (b ? *r.tau_num > up : std::isfinite(up) && up <= r.end_time) upper_bad.push_back(r.replicate);
  }

  // Re-run each upper-bound violator with the spatial grid and output step refined once.
  std::size_t attributable = 0;
  for (std::size_t i : upper_bad) {
    const auto path = s.sampler->sample(s.seeds[i]);
    auto fine = s.cfg.domain;
    fine.nx *= 2;
    const spectral::SpectralBasis fb(fine, fine.max_modes());
    const auto f = rpde::InitialDatum::multiple_of_phi(fb, s.datum.b);
    const auto in = bounds::upper_bound_inputs(cfg.model, fb, f, cfg.eps0_fraction);
    const auto u = bounds::tau_upper_case1(path, in, cfg.model, fb);
    const double up = cfg.variants.st1_mirrored ? u.mirrored.value : u.printed.value;
    auto c = cfg.solver;
    c.horizon = cfg.t_max;
    c.output_dt *= 0.5;
    const auto tr = rpde::solve(cfg.model, fb, f, path, c);
    const double up0 = cfg.variants.st1_mirrored ? rows[i].tau_upper_mirrored : rows[i].tau_upper_printed;
    const double before = (rows[i].tau_num ? *rows[i].tau_num : rows[i].end_time) - up0;
    const double after = (tr.tau_num ? *tr.tau_num : tr.end_time) - up;
    if (after <= 0.0 || after < 0.5 * before) ++attributable;
  }
  const double frac = upper_checked ? 1.0 - static_cast<double>(upper_bad.size()) / upper_checked : 0.0;
  const bool ok = blew > 0 && lower_bad == 0 && upper_checked > 0 && frac >= 0.95 && attributable == upper_bad.size();
  return {ok, std::to_string(blew) + "/200 blew up; tau* <= tau_num on " + std::to_string(blew - lower_bad) + "/" +
                  std::to_string(blew) + "; tau_num <= tau1* on " + num(100.0 * frac) + "% of " +
                  std::to_string(upper_checked) + " certified paths; " + std::to_string(attributable) + "/" +
                  std::to_string(upper_bad.size()) + " violators shrink under refinement"};
}

// 7. Closed-form comparison ODE against dopri5; singularity equals tau1*.
Outcome comparison_ode() {
  const auto cfg = default_config();
  const auto s = harness::prepare(cfg);
  double worst = 0.0, worst_gap = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto path = s.sampler->sample(fbm::replicate_seed(777, i));
    const auto up = bounds::tau_upper_case1(path, *s.upper, cfg.model, s.basis).printed;
    const double end = up.finite() ? 0.99 * up.value : path.grid.t_max();
    std::vector<double> ts(400);
    for (std::size_t k = 0; k < ts.size(); ++k) ts[k] = end * static_cast<double>(k) / static_cast<double>(ts.size());
    const auto tr = bounds::comparison_ode(path, *s.upper, cfg.model, s.basis, ts);
    worst = std::max(worst, tr.max_rel_diff);
    const double sing = tr.singularity_time.value_or(bounds::kInfinity);
    if (up.finite() || std::isfinite(sing)) {
      ++finite;
      worst_gap = std::max(worst_gap, std::abs(sing - up.value));
    }
  }
  const bool ok = worst <= 1e-6 && worst_gap <= cfg.solver.output_dt;
  return {ok, "max relative difference " + num(worst) + "; max |singularity - tau1*| = " + num(worst_gap) +
                  " (output step " + num(cfg.solver.output_dt) + ") over " + std::to_string(finite) + " finite paths"};
}

// 8a. Absorption-dominated deterministic case: sup norm decays. 8b. Supercritical mass: tau_num
// against the diffusion-free scalar reduction G' = (1 + delta) int (f + G)^3.
Outcome deterministic_reductions() {
  const fbm::TimeGrid grid(1.0, 1000);
  const fbm::FbmPath zero{grid, std::vector<double>(grid.size(), 0.0), fbm::HurstParameter(0.75), 0,
                          fbm::SamplingMethod::circulant};
  std::string d;
  bool ok = true;
  {
    rpde::ModelParams p;
    p.k = 2.0;  // |D| = 1 <= k
    p.delta = 0.0;
    p.p = p.q = p.n = 2.0;
    p.m = 0.0;
    const spectral::SpectralBasis b(spectral::DomainSpec::interval(1.0, 64), 63);
    rpde::SolverControls c;
    c.output_dt = 0.005;
    const auto tr = rpde::solve(p, b, rpde::InitialDatum::multiple_of_phi(b, 5.0), zero, c);
    std::size_t rises = 0;
    for (std::size_t i = 1; i < tr.times.size(); ++i)
      if (tr.times[i] > 0.05 && tr.sup_norm[i] > tr.sup_norm[i - 1] * (1.0 + 1e-12)) ++rises;
    const bool pass = tr.verdict == rpde::Verdict::global_until_horizon && rises == 0 &&
                      tr.sup_norm.back() < tr.sup_norm.front();
    ok = ok && pass;
    d += "decay: sup " + num(tr.sup_norm.front()) + " -> " + num(tr.sup_norm.back()) + ", " +
         std::to_string(rises) + " increases after t=0.05; ";
  }
  {
    rpde::ModelParams p;
    p.k = 1e-6;
    p.delta = 0.5;
    p.p = 2.0;
    p.q = p.n = 3.0;
    p.m = 0.0;
    const double L = 1.0, bval = 20.0;
    const spectral::SpectralBasis b(spectral::DomainSpec::interval(L, 256), 255);
    const auto f = rpde::InitialDatum::multiple_of_phi(b, bval);
    const auto in = bounds::upper_bound_inputs(p, b, f);
    const double logistic = std::sqrt(b.lambda1() / in.Ntilde);
    // f = A sin(pi x / L) with A = b pi / (2L); moments of sin^j on (0, L).
    const double A = bval * std::numbers::pi / (2.0 * L);
    const double s1 = 2.0 * L / std::numbers::pi, s2 = L / 2.0, s3 = 4.0 * L / (3.0 * std::numbers::pi);
    auto rate = [&](double g) {
      return (1.0 + p.delta) * (A * A * A * s3 + 3.0 * g * A * A * s2 + 3.0 * g * g * A * s1 + g * g * g * L);
    };
    const double t_ode = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double g) { return 1.0 / rate(g); }, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
    const fbm::TimeGrid g2(4.0 * t_ode, 400);
    const fbm::FbmPath z2{g2, std::vector<double>(g2.size(), 0.0), fbm::HurstParameter(0.75), 0,
                          fbm::SamplingMethod::circulant};
    rpde::SolverControls c;
    c.output_dt = t_ode / 200.0;
    const auto tr = rpde::solve(p, b, f, z2, c);
    const double rel = tr.tau_num ? std::abs(*tr.tau_num - t_ode) / t_ode : bounds::kInfinity;
    const bool pass = in.J0 > logistic && rel <= 0.1;
    ok = ok && pass;
    d += "blow-up: J0 " + num(in.J0) + " > logistic " + num(logistic) + ", tau_num " +
         (tr.tau_num ? num(*tr.tau_num) : std::string("none")) + " vs scalar ODE " + num(t_ode) + " (rel " + num(rel) +
         ")";
  }
  return {ok, d};
}

// 9. H = 1/2 probability sandwich against a 500-path Monte Carlo estimate.
Outcome probability_sandwich() {
  const auto dir = scratch("probability");
  auto cfg = config::parse_config(
      "experiment = probability\n"
      "hurst = 0.5\ngamma = 0\nk = 0.1\ndelta = 0.5\neta = 3\n"
      "p = 1.1\nq = 1.3\nm = 0.1\nn = 1.2\n"
      "domain = interval\nlx = 20\nnx = 64\n"
      "datum_b = 0\ndatum_b_factor = 2\n"
      "t_max = 5\nn_steps = 4096\nsolver.output_dt = 0.01\n"
      "ensemble_size = 500\nmaster_seed = 99\n",
      "probability_sandwich");
  cfg.output_dir = dir.string();
  harness::RunOptions o;
  o.jobs = std::thread::hardware_concurrency();
  o.write_ledger = false;
  const auto res = harness::run(cfg, o);

  std::istringstream csv(slurp(dir / "probability.csv"));
  std::string line;
  std::getline(csv, line);
  bool in_range = true;
  std::size_t evaluated = 0;
  std::string d;
  while (std::getline(csv, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() < 8) continue;
    if (cols[7] == "not_applicable") continue;
    ++evaluated;
    const double v = std::stod(cols[3]);
    if (!(v >= 0.0 && v <= 1.0)) in_range = false;
    d += cols[0] + "[" + cols[2] + "]=" + num(v) + " ";
    if (evaluated == 1) d = "MC " + num(std::stod(cols[4])) + " [" + num(std::stod(cols[5])) + ", " +
                            num(std::stod(cols[6])) + "]; " + d;
  }
  std::size_t unexplained = 0;
  for (const auto& f : res.findings)
    if (!f.explained && f.suite == "probability") ++unexplained;
  fs::remove_all(dir);
  const bool ok = res.exit_code == 0 && in_range && evaluated >= 3 && unexplained == 0;
  return {ok, d + "; findings " + std::to_string(res.findings.size()) + " (unexplained " +
                  std::to_string(unexplained) + ")"};
}

// 10. Two bounds runs with one configuration give identical CSV bytes.
Outcome reproducibility() {
  auto cfg = default_config();
  const auto dir = scratch("repro");
  std::string text[2];
  for (int k = 0; k < 2; ++k) {
    cfg.output_dir = (dir / std::to_string(k)).string();
    harness::RunOptions o;
    o.jobs = k == 0 ? 1 : 2;
    o.write_ledger = false;
    harness::run(cfg, o);
    text[k] = slurp(dir / std::to_string(k) / "bounds.csv");
  }
  fs::remove_all(dir);
  const bool ok = !text[0].empty() && text[0] == text[1];
  return {ok, std::to_string(text[0].size()) + " bytes, fnv1a " + std::to_string(harness::fnv1a(text[0])) +
                  (ok ? " (identical)" : " (differ)")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // 0: no runtime limit
  };
  const std::vector<Criterion> all{
      {1, "fbm_fidelity", fbm_fidelity, 60.0},
      {2, "volterra_normalization", volterra_normalization, 10.0},
      {3, "semigroup_eigen_identity", eigen_identity, 0.0},
      {4, "heat_kernel_bound", kernel_bound, 0.0},
      {5, "exponential_functional_law", exponential_functional, 0.0},
      {6, "ordering_suite", ordering_suite, 1800.0},
      {7, "comparison_ode", comparison_ode, 0.0},
      {8, "deterministic_reductions", deterministic_reductions, 0.0},
      {9, "probability_sandwich", probability_sandwich, 0.0},
      {10, "reproducibility", reproducibility, 0.0},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + num(c.budget_s) + " s budget";
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %-28s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
