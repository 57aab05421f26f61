#include "blowup/harness.h"

#include "blowup/csv.h"
#include "blowup/errors.h"
#include "blowup/probability.h"
#include "blowup/special_functions.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#ifndef BLOWUP_VERSION
#define BLOWUP_VERSION "unknown"
#endif

namespace blowup::harness {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) { return csv::format_double(x); }

bool same_exponents(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

void log_line(const RunOptions& opt, const std::string& s) {
  if (opt.log) *opt.log << s << '\n';
}

class OutputDir {
public:
  explicit OutputDir(const std::string& dir) : root_(dir) { fs::create_directories(root_); }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = root_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    f << content;
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& root() const { return root_; }

private:
  fs::path root_;
  std::vector<std::string> files_;
};

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> geometric(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

std::vector<std::array<double, 2>> interior_points(const spectral::DomainSpec& d, std::size_t per_axis) {
  std::vector<std::array<double, 2>> pts;
  auto coord = [&](double len, std::size_t i) { return len * (static_cast<double>(i) + 0.5) / static_cast<double>(per_axis); };
  if (d.shape == spectral::Shape::interval) {
    for (std::size_t i = 0; i < per_axis; ++i) pts.push_back({coord(d.lx, i), 0.0});
  } else {
    for (std::size_t j = 0; j < per_axis; ++j)
      for (std::size_t i = 0; i < per_axis; ++i) pts.push_back({coord(d.lx, i), coord(d.ly, j)});
  }
  return pts;
}

rpde::SolverControls controls_for(const Setup& s) {
  auto c = s.cfg.solver;
  if (c.horizon == 0.0) c.horizon = s.cfg.t_max;
  return c;
}

}  // namespace

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint64_t> replicate_seeds(std::uint64_t master, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = fbm::replicate_seed(master, i);
  return s;
}

Setup prepare(const config::ExperimentConfig& cfg) {
  const auto& dom = cfg.domain;
  Setup s{cfg,
          spectral::SpectralBasis(dom, cfg.modes ? cfg.modes : dom.max_modes()),
          fbm::TimeGrid(cfg.t_max, cfg.n_steps),
          nullptr,
          {},
          0.0,
          0.0,
          0.0,
          false,
          std::nullopt,
          std::nullopt,
          {},
          {}};
  s.sampler = std::make_shared<fbm::PathSampler>(cfg.model.hurst, s.grid, cfg.sampling);
  if (s.sampler->method() != cfg.sampling) s.notes.push_back("circulant embedding not PSD; fell back to Cholesky");

  double b = cfg.datum_b;
  if (b == 0.0) {
    const double bmin = bounds::minimal_admissible_b(0.0, cfg.model, s.basis);
    if (std::isfinite(bmin)) {
      b = cfg.datum_b_factor * bmin;
    } else {
      b = cfg.datum_b_factor;
      s.notes.push_back("no admissible b exists at t = 0; datum_b set to datum_b_factor");
    }
  }
  s.datum = rpde::InitialDatum::multiple_of_phi(s.basis, b);
  s.f_sup = b * s.basis.phi_sup();
  s.c0 = cfg.c0 > 0.0 ? cfg.c0 : b;

  if (cfg.experiment == config::Experiment::bounds || cfg.experiment == config::Experiment::validate) {
    const auto times = geometric(1e-3, 1.0, cfg.kernel_times);
    const auto pts = interior_points(dom, cfg.kernel_points);
    const auto fit = spectral::fit_kernel_bound(s.basis, times, pts);
    s.kernel_c = fit.c;
    s.kernel_feasible = fit.feasible;
    if (!fit.feasible) s.notes.push_back("kernel bound fit infeasible: " + fit.violation->message);
  }
  s.envelope.emplace(s.basis, cfg.model.effective_gamma(), s.grid);
  if (cfg.model.q > cfg.model.p) s.upper = bounds::upper_bound_inputs(cfg.model, s.basis, s.datum, cfg.eps0_fraction);
  if (s.upper && s.upper->eps_coef <= 0.0)
    s.notes.push_back("eps0 bracket is not positive (eps_coef = " + std::to_string(s.upper->eps_coef) +
                      "); the printed eps0 cap exceeds the bracket's positive range");
  s.seeds = replicate_seeds(cfg.master_seed, cfg.ensemble_size);
  return s;
}

BoundsRow bounds_row(const Setup& s, std::size_t replicate) {
  const auto& P = s.cfg.model;
  const auto& basis = s.basis;
  BoundsRow r;
  r.replicate = replicate;
  r.seed = s.seeds.at(replicate);
  const auto path = s.sampler->sample(r.seed);
  const bool d_gt_k = basis.domain().volume() > P.k;
  const double nan = kNaN;
  const double tol = s.cfg.solver.output_dt;

  r.tau_lower = nan;
  if (d_gt_k) {
    r.tau_lower = bounds::tau_lower_star(path, P, basis, s.f_sup, &*s.envelope).value;
    r.certificates = bounds::global_certificate_b2(path, P, basis, s.f_sup, s.c0, s.kernel_c, &*s.envelope);
  }
  r.tau_upper_printed = r.tau_upper_mirrored = nan;
  r.sigma_star = r.sigma_star_star = r.sigma_star_star_variant = nan;
  std::string notes;
  if (s.upper) {
    const bool case1 = same_exponents(P.m + P.n, P.q);
    try {
      const auto u = case1 ? bounds::tau_upper_case1(path, *s.upper, P, basis)
                           : bounds::tau_upper_case2(path, *s.upper, P, basis);
      r.upper_case = case1 ? 1 : 2;
      r.tau_upper_printed = u.printed.value;
      r.tau_upper_mirrored = u.mirrored.value;
      r.admissible_until = u.valid_until;
    } catch (const ConfigError& e) {
      notes += std::string("upper bound not applicable: ") + e.what() + ";";
    }
    if (P.hurst.is_brownian() && d_gt_k) {
      const auto sb = bounds::sigma_bounds_h_half(path, P, basis, s.f_sup, *s.upper);
      r.sigma_star = sb.sigma_star.value;
      r.sigma_star_star = sb.sigma_star_star.value;
      r.sigma_star_star_variant = sb.sigma_star_star_variant.value;
    }
  }

  try {
    const auto tr = rpde::solve(P, basis, s.datum, path, controls_for(s));
    r.verdict = tr.verdict;
    r.tau_num = tr.tau_num;
    r.end_time = tr.end_time;
  } catch (const rpde::SolverFault& e) {
    r.verdict = rpde::Verdict::step_collapse;
    r.tau_num = e.last_finite().t;
    r.end_time = e.last_finite().t;
    notes += std::string("solver fault: ") + e.what() + ";";
  }

  const bool blew = r.verdict != rpde::Verdict::global_until_horizon;
  if (blew) {
    const double tn = *r.tau_num;
    for (double lower : {r.tau_lower, r.sigma_star}) {
      if (std::isnan(lower)) continue;
      r.lower_checked = true;
      if (lower > tn + tol) {
        r.lower_ok = false;
        notes += "lower bound " + num(lower) + " exceeds tau_num " + num(tn) + ";";
      }
    }
  }
  if (r.upper_case != 0 && r.admissible_until >= 0.0) {
    const bool mirrored = r.upper_case == 1 ? s.cfg.variants.st1_mirrored : s.cfg.variants.st2_mirrored;
    const double up = mirrored ? r.tau_upper_mirrored : r.tau_upper_printed;
    if (blew) {
      const double tn = *r.tau_num;
      if (r.admissible_until >= std::min(tn, up)) {
        r.upper_checked = true;
        if (tn > up + tol) {
          r.upper_ok = false;
          notes += "tau_num " + num(tn) + " exceeds upper bound " + num(up) + ";";
        }
      }
    } else if (std::isfinite(up) && up + tol <= r.end_time && r.admissible_until >= up) {
      r.upper_checked = true;
      r.upper_ok = false;
      notes += "no blow-up by the upper bound " + num(up) + ";";
    }
  }
  if (blew && (r.certificates.b2.granted || r.certificates.K.granted)) {
    r.certificate_ok = false;
    notes += "global existence certified but the solver blew up;";
  }
  r.violation = notes;
  return r;
}

void write_bounds_csv(const std::vector<BoundsRow>& rows, std::ostream& out) {
  csv::Writer w(out);
  w.header({"replicate", "seed", "tau_lower", "tau_upper_printed", "tau_upper_mirrored", "upper_case",
            "admissible_until", "sigma_star", "sigma_star_star", "sigma_star_star_variant", "tau_num", "verdict",
            "end_time", "cert_b2", "margin_b2", "cert_K", "margin_K", "K_clean_truncation", "lower_ok", "upper_ok",
            "certificate_ok", "notes"});
  for (const auto& r : rows) {
    w.field(r.replicate).field(static_cast<unsigned long long>(r.seed));
    w.field(r.tau_lower).field(r.tau_upper_printed).field(r.tau_upper_mirrored).field(r.upper_case);
    w.field(r.admissible_until).field(r.sigma_star).field(r.sigma_star_star).field(r.sigma_star_star_variant);
    w.field(r.tau_num ? *r.tau_num : kNaN).field(rpde::to_string(r.verdict)).field(r.end_time);
    w.field(bounds::to_string(r.certificates.b2.kind)).field(r.certificates.b2.margin);
    w.field(bounds::to_string(r.certificates.K.kind)).field(r.certificates.K.margin);
    w.field(r.certificates.K.clean_truncation ? 1 : 0);
    w.field(r.lower_ok ? 1 : 0).field(r.upper_ok ? 1 : 0).field(r.certificate_ok ? 1 : 0).field(r.violation);
    w.end_row();
  }
}

config::ExperimentConfig apply_overrides(config::ExperimentConfig cfg, const RunOptions& opt) {
  if (opt.seed_override) cfg.master_seed = *opt.seed_override;
  if (opt.horizon) {
    const double h = *opt.horizon;
    if (!(h > 0.0)) throw ConfigError("--horizon must be positive");
    if (h > cfg.t_max) {
      // Keep the path step and extend the grid.
      const double dt = cfg.t_max / static_cast<double>(cfg.n_steps);
      cfg.n_steps = static_cast<std::size_t>(std::ceil(h / dt));
      cfg.t_max = dt * static_cast<double>(cfg.n_steps);
    }
    cfg.solver.horizon = h;
  }
  return cfg;
}

namespace {

void run_simulate(const Setup& s, const RunOptions& opt, OutputDir& out, RunResult&) {
  const std::size_t n = s.cfg.ensemble_size;
  std::vector<rpde::SolutionTrace> traces(n);
  std::vector<std::string> faults(n);
  auto controls = controls_for(s);
  controls.snapshot_times = {0.0, 0.5 * controls.horizon};
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    const auto path = s.sampler->sample(s.seeds[i]);
    try {
      traces[i] = rpde::solve(s.cfg.model, s.basis, s.datum, path, controls);
    } catch (const rpde::SolverFault& e) {
      traces[i].verdict = rpde::Verdict::step_collapse;
      traces[i].tau_num = e.last_finite().t;
      traces[i].end_time = e.last_finite().t;
      traces[i].final_state = e.last_finite().v;
      faults[i] = e.what();
    }
  });

  std::ostringstream summary;
  csv::Writer w(summary);
  w.header({"replicate", "seed", "verdict", "tau_num", "end_time", "steps", "clipped", "min_before_clip", "final_J",
            "final_sup", "fault"});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = traces[i];
    w.field(i).field(static_cast<unsigned long long>(s.seeds[i])).field(rpde::to_string(t.verdict));
    w.field(t.tau_num ? *t.tau_num : kNaN).field(t.end_time).field(t.steps).field(t.clipped).field(t.min_before_clip);
    w.field(t.J.empty() ? kNaN : t.J.back()).field(t.sup_norm.empty() ? kNaN : t.sup_norm.back()).field(faults[i]);
    w.end_row();
  }
  out.write("simulate.csv", summary.str());

  char name[64];
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream tr;
    rpde::write_trace_csv(traces[i], tr);
    std::snprintf(name, sizeof name, "traces/trace_%05zu.csv", i);
    out.write(name, tr.str());
  }
  // Snapshots and the driving path of the first replicate.
  const auto& t0 = traces.front();
  for (std::size_t k = 0; k < t0.snapshots.size(); ++k) {
    std::ostringstream ss;
    rpde::write_snapshot_csv(t0.snapshots[k], s.basis, ss);
    std::snprintf(name, sizeof name, "snapshots/snapshot_00000_%zu.csv", k);
    out.write(name, ss.str());
  }
  if (!t0.final_state.empty()) {
    std::ostringstream ss;
    rpde::write_snapshot_csv({t0.end_time, t0.final_state}, s.basis, ss);
    out.write("snapshots/snapshot_00000_final.csv", ss.str());
  }
  std::ostringstream ps;
  fbm::write_path_csv(s.sampler->sample(s.seeds.front()), ps);
  out.write("paths/path_00000.csv", ps.str());
  std::ostringstream bs;
  spectral::write_basis_csv(s.basis, bs);
  out.write("basis.csv", bs.str());
}

void run_bounds(const Setup& s, const RunOptions& opt, OutputDir& out, RunResult& res) {
  const std::size_t n = s.cfg.ensemble_size;
  std::vector<BoundsRow> rows(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) { rows[i] = bounds_row(s, i); });
  std::ostringstream csv_out;
  write_bounds_csv(rows, csv_out);
  out.write("bounds.csv", csv_out.str());

  std::size_t blowups = 0, lower_checked = 0, lower_bad = 0, upper_checked = 0, upper_bad = 0, cert_bad = 0;
  for (const auto& r : rows) {
    if (r.verdict != rpde::Verdict::global_until_horizon) ++blowups;
    lower_checked += r.lower_checked;
    upper_checked += r.upper_checked;
    if (!r.lower_ok) ++lower_bad;
    if (!r.upper_ok) ++upper_bad;
    if (!r.certificate_ok) ++cert_bad;
    if (!r.lower_ok || !r.upper_ok || !r.certificate_ok)
      res.findings.push_back({"ordering", "replicate " + std::to_string(r.replicate) + ": " + r.violation, false});
  }
  std::ostringstream sm;
  csv::Writer w(sm);
  w.header({"paths", "blowups", "lower_checked", "lower_violations", "upper_checked", "upper_violations",
            "certificate_violations", "ordering_violations", "kernel_c", "kernel_feasible", "b", "c0"});
  w.field(n).field(blowups).field(lower_checked).field(lower_bad).field(upper_checked).field(upper_bad);
  w.field(cert_bad).field(lower_bad + upper_bad + cert_bad).field(s.kernel_c).field(s.kernel_feasible ? 1 : 0);
  w.field(s.datum.b).field(s.c0);
  w.end_row();
  out.write("bounds_summary.csv", sm.str());
  log_line(opt, "bounds: " + std::to_string(n) + " paths, " + std::to_string(blowups) + " blow-ups, " +
                    std::to_string(lower_bad + upper_bad + cert_bad) + " ordering violations");
}

struct ProbRow {
  std::string name, kind, variant;
  double value = kNaN;
  bool primary = true;
  std::string detail;
  std::string verdict;
};

void run_probability(const Setup& s, const RunOptions& opt, OutputDir& out, RunResult& res) {
  const auto& P = s.cfg.model;
  const std::size_t n = s.cfg.ensemble_size;
  if (n < 30) throw ConfigError("probability experiment needs ensemble_size >= 30");
  std::vector<rpde::Verdict> verdicts(n);
  std::vector<double> tau(n, kNaN);
  const bool need_paths = !P.hurst.is_brownian();
  std::vector<fbm::FbmPath> paths;
  if (need_paths) paths.resize(n, fbm::FbmPath{s.grid, {}, P.hurst, 0, s.sampler->method()});
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    auto path = s.sampler->sample(s.seeds[i]);
    try {
      const auto tr = rpde::solve(P, s.basis, s.datum, path, controls_for(s));
      verdicts[i] = tr.verdict;
      if (tr.tau_num) tau[i] = *tr.tau_num;
    } catch (const rpde::SolverFault& e) {
      verdicts[i] = rpde::Verdict::step_collapse;
      tau[i] = e.last_finite().t;
    }
    if (need_paths) paths[i] = std::move(path);
  });
  const auto mc = prob::mc_blowup_probability(std::span<const rpde::Verdict>(verdicts));

  std::vector<ProbRow> rows;
  const bool case1 = same_exponents(P.m + P.n, P.q);
  auto guarded = [&](ProbRow row, auto&& eval) {
    try {
      eval(row);
    } catch (const std::exception& e) {
      row.value = kNaN;
      row.verdict = "not_applicable";
      row.detail = e.what();
    }
    rows.push_back(std::move(row));
  };
  if (!s.upper) {
    rows.push_back({"upper_inputs", "none", "-", kNaN, true, "bounds need q > p", "not_applicable"});
  } else if (P.hurst.is_brownian()) {
    if (case1)
      guarded({"gamma_law_case1", "lower", "printed", kNaN, true, "", ""}, [&](ProbRow& r) {
        const auto g = prob::gamma_law_inputs(P, s.basis, *s.upper);
        r.value = prob::gamma_law_case1(g);
        r.detail = "theta1=" + num(g.theta1) + " threshold=" + num(g.threshold);
      });
    for (bool printed : {true, false})
      guarded({"bessel_series_case2", "lower", printed ? "a1_printed" : "a1_shifted", kNaN,
               printed == s.cfg.variants.a1_printed, "", ""},
              [&](ProbRow& r) {
                auto b = prob::bessel_series_inputs(P, s.basis, *s.upper, printed);
                r.detail = "order=" + num(b.order) + " a1=" + num(b.a1);
                const auto sr = prob::bessel_series_case2(b);
                r.value = sr.value;
                r.detail += " terms=" + std::to_string(sr.terms) + " tail<=" + num(sr.truncation_bound);
              });
    for (bool printed : {true, false})
      guarded({"density_upper_bound", "upper", printed ? "ntilde1_printed" : "ntilde1_proof", kNaN,
               printed == s.cfg.variants.ntilde1_printed, "", ""},
              [&](ProbRow& r) {
                const auto d = prob::density_bound_inputs(P, s.basis, s.f_sup, printed);
                const auto db = prob::density_upper_bound(d);
                r.value = db.value;
                r.detail = "Ntilde1=" + num(d.Ntilde1) + " shape=" + num(d.shape) + " scale=" + num(d.scale) +
                           " quadrature=" + num(db.quadrature) + (db.vacuous ? " vacuous" : "");
              });
  } else if (case1) {
    const double thr_arg = std::pow(s.upper->J0, 1.0 - P.q) / ((P.q - 1.0) * s.upper->Ntilde);
    for (bool bracket : {true, false}) {
      const double arg = bracket ? s.upper->Ntilde : thr_arg;
      prob::NhEstimate nh;
      try {
        nh = prob::estimate_nh(paths, P, s.basis, s.cfg.alpha, arg);
      } catch (const std::exception&) {
      }
      for (bool printed : {true, false}) {
        const std::string variant = std::string(bracket ? "arg_bracket" : "arg_threshold") + "/" +
                                    (printed ? "printed" : "corrected");
        const bool primary = bracket == s.cfg.variants.ntilde_arg_bracket && printed == s.cfg.variants.malliavin_printed;
        guarded({"malliavin_lower_bound", "lower", variant, kNaN, primary, "", ""}, [&](ProbRow& r) {
          prob::MalliavinBoundInputs in{s.cfg.alpha, P.eta * (P.q - 1.0), P.q, s.upper->Ntilde, arg, nh.mean, 0.0};
          in.M_H = prob::m_h_printed(P.hurst.value(), in.alpha, arg);
          const auto m = prob::malliavin_lower_bound(in, P, s.basis);
          r.value = printed ? m.value : m.value_corrected;
          r.detail = "N_H=" + num(nh.mean) + " se=" + num(nh.std_error) + " T=" + num(nh.t_max) +
                     " M_H=" + num(in.M_H) + (m.note.empty() ? "" : " " + m.note);
        });
      }
    }
  } else {
    rows.push_back({"malliavin_lower_bound", "lower", "-", kNaN, true, "needs m + n = q", "not_applicable"});
  }

  for (auto& r : rows) {
    if (!r.verdict.empty()) continue;
    if (!(r.value >= 0.0 && r.value <= 1.0))
      r.verdict = "falsification";
    else if (r.kind == "lower")
      r.verdict = r.value <= mc.ci.high ? "consistent" : "violation";
    else
      r.verdict = r.value >= mc.ci.low ? "consistent" : "violation";
  }
  for (const auto& r : rows) {
    if (r.verdict != "violation" && r.verdict != "falsification") continue;
    bool explained = false;
    for (const auto& o : rows)
      if (&o != &r && o.name == r.name && o.verdict == "consistent") explained = true;
    res.findings.push_back({"probability", r.name + " [" + r.variant + "] = " + num(r.value) + " vs MC [" +
                                               num(mc.ci.low) + ", " + num(mc.ci.high) + "]: " + r.verdict,
                            explained});
  }

  std::ostringstream po;
  csv::Writer w(po);
  w.header({"bound_name", "kind", "variant", "analytic_value", "mc_estimate", "ci_low", "ci_high", "verdict",
            "variant_flags", "detail"});
  for (const auto& r : rows) {
    w.field(r.name).field(r.kind).field(r.variant).field(r.value).field(mc.estimate).field(mc.ci.low);
    w.field(mc.ci.high).field(r.verdict).field(r.primary ? "primary" : "alternate").field(r.detail);
    w.end_row();
  }
  out.write("probability.csv", po.str());

  std::ostringstream eo;
  csv::Writer e(eo);
  e.header({"replicate", "seed", "verdict", "tau_num"});
  for (std::size_t i = 0; i < n; ++i) {
    e.field(i).field(static_cast<unsigned long long>(s.seeds[i])).field(rpde::to_string(verdicts[i])).field(tau[i]);
    e.end_row();
  }
  out.write("probability_ensemble.csv", eo.str());
  log_line(opt, "probability: MC estimate " + num(mc.estimate) + " [" + num(mc.ci.low) + ", " + num(mc.ci.high) +
                    "], censored " + num(mc.censored_fraction));
}

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SuiteResult> validation_suites(const Setup& s, const RunOptions& opt) {
  std::vector<SuiteResult> out;
  auto suite = [&](const std::string& name, auto&& body) {
    SuiteResult r{name, false, ""};
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    log_line(opt, std::string(r.passed ? "pass " : "FAIL ") + name + ": " + r.detail);
    out.push_back(std::move(r));
  };
  const auto& P = s.cfg.model;
  const auto& basis = s.basis;

  suite("fbm_covariance", [&](SuiteResult& r) {
    const fbm::TimeGrid g(1.0, 64);
    const fbm::PathSampler sampler(P.hurst, g);
    const std::size_t n = 4000;
    const std::size_t idx[4] = {16, 32, 48, 64};
    double worst = 0.0;
    std::vector<std::vector<double>> vals(n);
    for (std::size_t p = 0; p < n; ++p) {
      const auto path = sampler.sample(fbm::replicate_seed(s.cfg.master_seed ^ 0x5eedULL, p));
      for (auto i : idx) vals[p].push_back(path.values[i]);
    }
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a; b < 4; ++b) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
          const double x = vals[p][a] * vals[p][b];
          m += x;
          m2 += x * x;
        }
        m /= static_cast<double>(n);
        const double se = std::sqrt((m2 / static_cast<double>(n) - m * m) / static_cast<double>(n));
        const double ref = fbm::covariance(P.hurst, g.node(idx[a]), g.node(idx[b]));
        worst = std::max(worst, std::abs(m - ref) / se);
      }
    r.passed = worst < 4.0;
    r.detail = "max deviation " + num(worst) + " standard errors";
  });

  suite("volterra_normalization", [&](SuiteResult& r) {
    double worst = 0.0;
    for (double h : {0.6, 0.75, 0.9})
      for (double t : {0.5, 1.0, 2.0}) {
        const double v = fbm::kernel_square_integral(fbm::HurstParameter(h), t);
        worst = std::max(worst, std::abs(v / std::pow(t, 2.0 * h) - 1.0));
      }
    r.passed = worst < 1e-6;
    r.detail = "max relative error " + num(worst);
  });

  suite("semigroup_eigen_identity", [&](SuiteResult& r) {
    const auto& phi = basis.phi();
    const double sup = *std::max_element(phi.begin(), phi.end());
    double worst = 0.0;
    for (double t : {0.01, 0.1, 1.0}) {
      const auto tf = spectral::apply_semigroup(basis, phi, t);
      const double e = std::exp(-basis.lambda1() * t);
      for (std::size_t i = 0; i < phi.size(); ++i) worst = std::max(worst, std::abs(tf[i] - e * phi[i]) / sup);
    }
    r.passed = worst <= 1e-8;
    r.detail = "max relative deviation " + num(worst);
  });

  suite("kernel_bound_fit", [&](SuiteResult& r) {
    r.passed = s.kernel_feasible && std::isfinite(s.kernel_c);
    r.detail = "c = " + num(s.kernel_c);
  });

  const bool d_gt_k = basis.domain().volume() > P.k;
  const auto path = s.sampler->sample(s.seeds.front());

  suite("tau_lower_no_lookahead", [&](SuiteResult& r) {
    if (!d_gt_k) {
      r.passed = true;
      r.detail = "skipped: |D| <= k";
      return;
    }
    const auto full = bounds::tau_lower_star(path, P, basis, s.f_sup, &*s.envelope);
    if (!full.finite()) {
      r.passed = true;
      r.detail = "tau* beyond the horizon";
      return;
    }
    const std::size_t cut = std::min(s.grid.n_steps(),
                                     static_cast<std::size_t>(std::ceil(full.value / s.grid.dt())) + 1);
    const fbm::TimeGrid g2(s.grid.dt() * static_cast<double>(cut), cut);
    fbm::FbmPath p2{g2, std::vector<double>(path.values.begin(), path.values.begin() + cut + 1), path.hurst,
                    path.seed, path.method};
    const auto part = bounds::tau_lower_star(p2, P, basis, s.f_sup);
    r.passed = std::abs(part.value - full.value) <= 1e-12 * std::max(1.0, full.value);
    r.detail = "full " + num(full.value) + ", restricted " + num(part.value);
  });

  suite("tau_lower_monotone", [&](SuiteResult& r) {
    if (!d_gt_k) {
      r.passed = true;
      r.detail = "skipped: |D| <= k";
      return;
    }
    double prev = bounds::kInfinity;
    bool ok = true;
    for (double scale : {0.5, 1.0, 2.0, 4.0}) {
      const double v = bounds::tau_lower_star(path, P, basis, s.f_sup * scale, &*s.envelope).value;
      if (v > prev) ok = false;
      prev = v;
    }
    r.passed = ok;
    r.detail = ok ? "non-increasing in sup f" : "increase detected";
  });

  suite("case1_ode_consistency", [&](SuiteResult& r) {
    if (!s.upper || !same_exponents(P.m + P.n, P.q)) {
      r.passed = true;
      r.detail = "skipped: needs q > p and m + n = q";
      return;
    }
    const auto u = bounds::tau_upper_case1(path, *s.upper, P, basis);
    const std::vector<double> times{0.0};
    const auto ode = bounds::comparison_ode(path, *s.upper, P, basis, times);
    const double sing = ode.singularity_time.value_or(bounds::kInfinity);
    const double tau1 = u.printed.value;
    r.passed = (std::isinf(sing) && std::isinf(tau1)) || std::abs(sing - tau1) <= s.grid.dt();
    r.detail = "singularity " + num(sing) + ", tau1 " + num(tau1);
  });

  suite("phi_integral_convergence", [&](SuiteResult& r) {
    if (!s.upper) {
      r.passed = true;
      r.detail = "skipped: needs q > p";
      return;
    }
    const double exps[3] = {P.q / (P.q - P.p), P.n / (P.n - 1.0), P.p + 1.0};
    double worst = bounds::kInfinity;
    std::string d;
    for (double e : exps) {
      double v[3];
      for (int k = 0; k < 3; ++k) {
        auto dom = s.cfg.domain;
        dom.nx = 32u << k;
        if (dom.shape == spectral::Shape::rectangle) dom.ny = 32u << k;
        v[k] = spectral::SpectralBasis(dom, 1).integrate_phi_power(e);
      }
      const double d1 = std::abs(v[0] - v[1]), d2 = std::abs(v[1] - v[2]);
      const double order = d2 < 1e-13 * std::abs(v[2]) ? bounds::kInfinity : std::log2(d1 / d2);
      worst = std::min(worst, order);
      d += "r=" + num(e) + ": order " + num(order) + "; ";
    }
    r.passed = worst >= 1.9;
    r.detail = d;
  });

  suite("gamma_cdf", [&](SuiteResult& r) {
    const double a = special::gamma_p(1.0, std::log(2.0));
    const double b = special::gamma_p(3.0, 2.0);
    const double b_ref = 1.0 - std::exp(-2.0) * (1.0 + 2.0 + 2.0);
    r.passed = std::abs(a - 0.5) < 1e-12 && std::abs(b - b_ref) < 1e-12;
    r.detail = "P(1, ln 2) = " + num(a) + ", P(3, 2) error " + num(b - b_ref);
  });

  suite("bessel_zero_count", [&](SuiteResult& r) {
    bool ok = true;
    for (double nu : {0.0, 0.5, 2.5}) {
      const auto z = special::bessel_j_zeros(nu, 50);
      for (std::size_t k = 10; k < 50; k += 10)
        if (std::abs(z[k - 1] - special::mcmahon_zero(nu, k)) > 0.5) ok = false;
    }
    r.passed = ok;
    r.detail = "zeros 10..40 within half a spacing of McMahon";
  });

  suite("seed_independence", [&](SuiteResult& r) {
    const std::set<std::uint64_t> u(s.seeds.begin(), s.seeds.end());
    r.passed = u.size() == s.seeds.size();
    r.detail = std::to_string(u.size()) + " distinct of " + std::to_string(s.seeds.size());
  });

  suite("probability_range", [&](SuiteResult& r) {
    std::vector<double> vals;
    if (s.upper && P.hurst.is_brownian() && P.eta > 0.0) {
      if (same_exponents(P.m + P.n, P.q)) vals.push_back(prob::gamma_law_case1(prob::gamma_law_inputs(P, basis, *s.upper)));
      for (bool printed : {true, false})
        vals.push_back(prob::density_upper_bound(prob::density_bound_inputs(P, basis, s.f_sup, printed)).value);
    }
    for (double x : {0.01, 0.1, 1.0, 10.0}) vals.push_back(special::gamma_p(2.0, x));
    bool ok = true;
    for (double v : vals)
      if (!(v >= 0.0 && v <= 1.0)) ok = false;
    r.passed = ok;
    r.detail = std::to_string(vals.size()) + " values checked";
  });

  suite("bounds_reproducible", [&](SuiteResult& r) {
    auto cfg = s.cfg;
    cfg.ensemble_size = std::min<std::size_t>(cfg.ensemble_size, 4);
    cfg.experiment = config::Experiment::bounds;
    const auto s2 = prepare(cfg);
    std::string text[2];
    for (int k = 0; k < 2; ++k) {
      std::vector<BoundsRow> rows(cfg.ensemble_size);
      parallel_for(rows.size(), k == 0 ? 1 : std::max<std::size_t>(2, opt.jobs),
                   [&](std::size_t i) { rows[i] = bounds_row(s2, i); });
      std::ostringstream o;
      write_bounds_csv(rows, o);
      text[k] = o.str();
    }
    r.passed = text[0] == text[1];
    r.detail = "serial and parallel bounds CSV " + std::string(r.passed ? "identical" : "differ");
  });
  return out;
}

void run_validate(const Setup& s, const RunOptions& opt, OutputDir& out, RunResult& res) {
  const auto suites = validation_suites(s, opt);
  std::ostringstream o;
  csv::Writer w(o);
  w.header({"suite", "passed", "detail"});
  bool all = true;
  for (const auto& r : suites) {
    w.field(r.name).field(r.passed ? 1 : 0).field(r.detail);
    w.end_row();
    if (!r.passed) {
      all = false;
      res.findings.push_back({"validate", r.name + ": " + r.detail, false});
    }
  }
  out.write("validate.csv", o.str());
  if (!all) res.exit_code = 1;
}

void append_ledger(const Setup& s, const OutputDir& out, const RunResult& res, const std::string& started) {
  const fs::path p = out.root() / "run_ledger.txt";
  std::ofstream f(p, std::ios::app);
  if (!f) return;
  const auto canon = s.cfg.canonical();
  f << "[run]\n";
  f << "started = " << started << "\n";
  f << "software_version = " << BLOWUP_VERSION << "\n";
  f << "experiment = " << config::to_string(s.cfg.experiment) << "\n";
  f << "config_hash = fnv1a64:" << hex64(fnv1a(canon)) << "\n";
  f << "master_seed = " << s.cfg.master_seed << "\n";
  f << "replicate_seeds = ";
  for (std::size_t i = 0; i < s.seeds.size(); ++i) f << (i ? "," : "") << s.seeds[i];
  f << "\n";
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", res.wall_seconds);
  f << "wall_seconds = " << wall << "\n";
  f << "exit_code = " << res.exit_code << "\n";
  f << "findings = " << res.findings.size() << "\n";
  for (const auto& n : s.notes) f << "note = " << n << "\n";
  for (const auto& w : s.cfg.warnings) f << "warning = " << w << "\n";
  for (const auto& file : out.files()) f << "file = " << file << "\n";
  f << "\n";
}

}  // namespace

RunResult run(const config::ExperimentConfig& cfg_in, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const std::string started = timestamp();
  const auto cfg = apply_overrides(cfg_in, opt);
  RunResult res;
  const auto s = prepare(cfg);
  for (const auto& n : s.notes) log_line(opt, "note: " + n);
  OutputDir out(cfg.output_dir);
  out.write("config_echo.txt", cfg.canonical());
  try {
    switch (cfg.experiment) {
      case config::Experiment::simulate: run_simulate(s, opt, out, res); break;
      case config::Experiment::bounds: run_bounds(s, opt, out, res); break;
      case config::Experiment::probability: run_probability(s, opt, out, res); break;
      case config::Experiment::validate: run_validate(s, opt, out, res); break;
    }
  } catch (const NumericalError& e) {
    log_line(opt, std::string("numerical failure: ") + e.what());
    res.exit_code = 3;
  }
  if (!res.findings.empty()) {
    std::ostringstream fo;
    csv::Writer w(fo);
    w.header({"suite", "message", "explained"});
    for (const auto& f : res.findings) {
      w.field(f.suite).field(f.message).field(f.explained ? 1 : 0);
      w.end_row();
    }
    out.write("findings.csv", fo.str());
  }
  if (opt.strict && res.exit_code == 0)
    for (const auto& f : res.findings)
      if (!f.explained) res.exit_code = 1;
  res.files = out.files();
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (opt.write_ledger) append_ledger(s, out, res, started);
  return res;
}

}  // namespace blowup::harness
