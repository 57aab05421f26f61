#include "blowup/config.h"

#include "blowup/csv.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace blowup::config {

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::simulate: return "simulate";
    case Experiment::bounds: return "bounds";
    case Experiment::probability: return "probability";
    case Experiment::validate: return "validate";
  }
  return "bounds";
}

ParseError::ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
    : ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

const std::map<std::string, std::string>& known_keys() {
  static const std::map<std::string, std::string> keys = {
      {"experiment", "simulate | bounds | probability | validate"},
      {"output_dir", "directory for CSV output and the run ledger"},
      {"ensemble_size", "number of sampled paths (>= 1)"},
      {"master_seed", "unsigned 64-bit master seed"},
      {"hurst", "Hurst index in [0.5, 1)"},
      {"gamma", "linear growth coefficient (>= 0)"},
      {"k", "absorption coefficient (> 0)"},
      {"delta", "weight of the product non-local term (>= 0)"},
      {"eta", "noise intensity (>= 0)"},
      {"p", "absorption exponent"},
      {"q", "non-local source exponent"},
      {"m", "local factor exponent of the product term"},
      {"n", "non-local factor exponent of the product term"},
      {"domain", "interval | rectangle"},
      {"lx", "interval length or rectangle side"},
      {"ly", "rectangle side"},
      {"nx", "cells along x"},
      {"ny", "cells along y"},
      {"modes", "retained Dirichlet modes (0: all resolvable)"},
      {"datum_b", "f = b phi (0: datum_b_factor times the smallest admissible b)"},
      {"datum_b_factor", "multiplier used when datum_b = 0"},
      {"t_max", "path horizon"},
      {"n_steps", "path grid steps"},
      {"sampling", "circulant | cholesky"},
      {"solver.output_dt", "output spacing of traces"},
      {"solver.v_max", "blow-up threshold on sup v"},
      {"solver.dt_min", "step-collapse threshold"},
      {"solver.cfl", "fraction of the explicit diffusion limit"},
      {"solver.safety", "max relative change per step"},
      {"solver.horizon", "solver horizon (0: t_max)"},
      {"c0", "constant with f <= C0 phi for the infinite-horizon certificate (0: smallest valid)"},
      {"eps0_fraction", "eps0 as a fraction of its cap"},
      {"alpha", "t^alpha weight of the Malliavin bound"},
      {"kernel_points", "spatial samples per axis for the kernel-bound fit"},
      {"kernel_times", "time samples for the kernel-bound fit"},
      {"variant.st1", "printed | mirrored"},
      {"variant.st2", "printed | mirrored"},
      {"variant.a1", "printed | shifted"},
      {"variant.ntilde1", "printed | proof"},
      {"variant.malliavin", "printed | corrected"},
      {"variant.ntilde_arg", "bracket | threshold"},
  };
  return keys;
}

namespace {

std::string trim(const std::string& s, std::size_t& offset) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  offset = b;
  return s.substr(b, e - b);
}

struct Entry {
  std::string value;
  std::size_t line = 0, column = 0;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::vector<std::string> warnings;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto hash = raw.find('#');
    const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::size_t off = 0;
    if (trim(body, off).empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, off + 1, "expected 'key = value'");
    std::size_t koff = 0, voff = 0;
    const std::string key = trim(body.substr(0, eq), koff);
    const std::string value = trim(body.substr(eq + 1), voff);
    if (key.empty()) throw ParseError(source, lineno, eq + 1, "missing key before '='");
    for (std::size_t i = 0; i < key.size(); ++i) {
      const char c = key[i];
      if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_' ||
            c == '.'))
        throw ParseError(source, lineno, koff + i + 1, std::string("invalid character '") + c + "' in key");
    }
    if (value.empty()) throw ParseError(source, lineno, eq + 2, "missing value for '" + key + "'");
    if (entries.count(key)) throw ParseError(source, lineno, koff + 1, "duplicate key '" + key + "'");
    if (!known_keys().count(key)) {
      warnings.push_back(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "' ignored");
      continue;
    }
    entries[key] = {value, lineno, eq + 1 + voff + 1};
  }

  std::vector<std::string> violations;
  auto number = [&](const char* key, double& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    const auto& v = it->second.value;
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw ParseError(source, it->second.line, it->second.column, "'" + v + "' is not a number");
    out = x;
  };
  auto integer = [&](const char* key, auto& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    const auto& v = it->second.value;
    unsigned long long x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw ParseError(source, it->second.line, it->second.column, "'" + v + "' is not a non-negative integer");
    out = static_cast<std::remove_reference_t<decltype(out)>>(x);
  };
  auto choice = [&](const char* key, std::initializer_list<const char*> options,
                    const std::function<void(const std::string&)>& apply) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    for (const char* o : options)
      if (it->second.value == o) {
        apply(it->second.value);
        return;
      }
    std::string list;
    for (const char* o : options) list += (list.empty() ? "" : " | ") + std::string(o);
    throw ParseError(source, it->second.line, it->second.column,
                     "'" + it->second.value + "' is not one of " + list);
  };

  ExperimentConfig c;
  c.warnings = warnings;
  choice("experiment", {"simulate", "bounds", "probability", "validate"}, [&](const std::string& v) {
    c.experiment = v == "simulate" ? Experiment::simulate
                   : v == "bounds" ? Experiment::bounds
                   : v == "probability" ? Experiment::probability
                                        : Experiment::validate;
  });
  if (entries.count("output_dir")) c.output_dir = entries["output_dir"].value;
  integer("ensemble_size", c.ensemble_size);
  integer("master_seed", c.master_seed);

  double hurst = 0.75;
  number("hurst", hurst);
  try {
    c.model.hurst = fbm::HurstParameter(hurst);
  } catch (const DomainError&) {
    violations.push_back("hurst must lie in [0.5, 1) (got " + csv::format_double(hurst) + ")");
  }
  number("gamma", c.model.gamma);
  number("k", c.model.k);
  number("delta", c.model.delta);
  number("eta", c.model.eta);
  number("p", c.model.p);
  number("q", c.model.q);
  number("m", c.model.m);
  number("n", c.model.n);
  for (auto& v : c.model.violations()) {
    const bool exponent = !v.empty() && std::string("pqnm").find(v[0]) != std::string::npos && v[1] == ' ';
    violations.push_back(exponent ? v + " (requires p,q,n>1, m>=0, m+n>=q>=p>1)" : v);
  }

  bool rect = false;
  choice("domain", {"interval", "rectangle"}, [&](const std::string& v) { rect = v == "rectangle"; });
  double lx = rect ? 1.0 : 4.0, ly = 1.0;
  std::size_t nx = 64, ny = 32;
  number("lx", lx);
  number("ly", ly);
  integer("nx", nx);
  integer("ny", ny);
  try {
    c.domain = rect ? spectral::DomainSpec::rectangle(lx, ly, nx, ny) : spectral::DomainSpec::interval(lx, nx);
    integer("modes", c.modes);
    if (c.modes > c.domain.max_modes())
      violations.push_back("modes must not exceed " + std::to_string(c.domain.max_modes()) + " on this grid");
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) violations.push_back(v);
  }

  number("datum_b", c.datum_b);
  number("datum_b_factor", c.datum_b_factor);
  if (c.datum_b < 0.0) violations.push_back("datum_b must be >= 0");
  if (c.datum_b == 0.0 && !(c.datum_b_factor > 1.0)) violations.push_back("datum_b_factor must be > 1");
  number("t_max", c.t_max);
  integer("n_steps", c.n_steps);
  if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) violations.push_back("t_max must be positive");
  if (c.n_steps < 2) violations.push_back("n_steps must be >= 2");
  choice("sampling", {"circulant", "cholesky"}, [&](const std::string& v) {
    c.sampling = v == "cholesky" ? fbm::SamplingMethod::cholesky : fbm::SamplingMethod::circulant;
  });
  if (c.ensemble_size < 1) violations.push_back("ensemble_size must be >= 1");

  number("solver.output_dt", c.solver.output_dt);
  number("solver.v_max", c.solver.v_max);
  number("solver.dt_min", c.solver.dt_min);
  number("solver.cfl", c.solver.cfl);
  number("solver.safety", c.solver.safety);
  number("solver.horizon", c.solver.horizon);
  if (!(c.solver.output_dt > 0.0)) violations.push_back("solver.output_dt must be positive");
  if (!(c.solver.v_max > 0.0)) violations.push_back("solver.v_max must be positive");
  if (!(c.solver.dt_min > 0.0)) violations.push_back("solver.dt_min must be positive");
  if (!(c.solver.cfl > 0.0 && c.solver.cfl <= 1.0)) violations.push_back("solver.cfl must lie in (0, 1]");
  if (!(c.solver.safety > 0.0 && c.solver.safety < 1.0)) violations.push_back("solver.safety must lie in (0, 1)");
  if (c.solver.horizon < 0.0 || c.solver.horizon > c.t_max)
    violations.push_back("solver.horizon must lie in [0, t_max]");
  if (c.n_steps >= 2 && c.t_max > 0.0 && c.solver.output_dt > 0.0 &&
      c.t_max / static_cast<double>(c.n_steps) > 4.0 * c.solver.output_dt)
    violations.push_back("path step t_max/n_steps must not exceed 4 * solver.output_dt");

  number("c0", c.c0);
  number("eps0_fraction", c.eps0_fraction);
  number("alpha", c.alpha);
  integer("kernel_points", c.kernel_points);
  integer("kernel_times", c.kernel_times);
  if (c.c0 < 0.0) violations.push_back("c0 must be >= 0");
  if (!(c.eps0_fraction > 0.0 && c.eps0_fraction <= 1.0)) violations.push_back("eps0_fraction must lie in (0, 1]");
  if (!(c.alpha > 0.0)) violations.push_back("alpha must be positive");
  if (c.kernel_points < 2) violations.push_back("kernel_points must be >= 2");
  if (c.kernel_times < 1) violations.push_back("kernel_times must be >= 1");

  choice("variant.st1", {"printed", "mirrored"}, [&](const std::string& v) { c.variants.st1_mirrored = v == "mirrored"; });
  choice("variant.st2", {"printed", "mirrored"}, [&](const std::string& v) { c.variants.st2_mirrored = v == "mirrored"; });
  choice("variant.a1", {"printed", "shifted"}, [&](const std::string& v) { c.variants.a1_printed = v == "printed"; });
  choice("variant.ntilde1", {"printed", "proof"},
         [&](const std::string& v) { c.variants.ntilde1_printed = v == "printed"; });
  choice("variant.malliavin", {"printed", "corrected"},
         [&](const std::string& v) { c.variants.malliavin_printed = v == "printed"; });
  choice("variant.ntilde_arg", {"bracket", "threshold"},
         [&](const std::string& v) { c.variants.ntilde_arg_bracket = v == "bracket"; });

  if (!violations.empty()) throw ConfigError(std::move(violations));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string ExperimentConfig::canonical() const {
  using csv::format_double;
  std::map<std::string, std::string> kv;
  kv["experiment"] = to_string(experiment);
  kv["output_dir"] = output_dir;
  kv["ensemble_size"] = std::to_string(ensemble_size);
  kv["master_seed"] = std::to_string(master_seed);
  kv["hurst"] = format_double(model.hurst.value());
  kv["gamma"] = format_double(model.gamma);
  kv["k"] = format_double(model.k);
  kv["delta"] = format_double(model.delta);
  kv["eta"] = format_double(model.eta);
  kv["p"] = format_double(model.p);
  kv["q"] = format_double(model.q);
  kv["m"] = format_double(model.m);
  kv["n"] = format_double(model.n);
  const bool rect = domain.shape == spectral::Shape::rectangle;
  kv["domain"] = rect ? "rectangle" : "interval";
  kv["lx"] = format_double(domain.lx);
  kv["nx"] = std::to_string(domain.nx);
  if (rect) {
    kv["ly"] = format_double(domain.ly);
    kv["ny"] = std::to_string(domain.ny);
  }
  kv["modes"] = std::to_string(modes);
  kv["datum_b"] = format_double(datum_b);
  kv["datum_b_factor"] = format_double(datum_b_factor);
  kv["t_max"] = format_double(t_max);
  kv["n_steps"] = std::to_string(n_steps);
  kv["sampling"] = fbm::to_string(sampling);
  kv["solver.output_dt"] = format_double(solver.output_dt);
  kv["solver.v_max"] = format_double(solver.v_max);
  kv["solver.dt_min"] = format_double(solver.dt_min);
  kv["solver.cfl"] = format_double(solver.cfl);
  kv["solver.safety"] = format_double(solver.safety);
  kv["solver.horizon"] = format_double(solver.horizon);
  kv["c0"] = format_double(c0);
  kv["eps0_fraction"] = format_double(eps0_fraction);
  kv["alpha"] = format_double(alpha);
  kv["kernel_points"] = std::to_string(kernel_points);
  kv["kernel_times"] = std::to_string(kernel_times);
  kv["variant.st1"] = variants.st1_mirrored ? "mirrored" : "printed";
  kv["variant.st2"] = variants.st2_mirrored ? "mirrored" : "printed";
  kv["variant.a1"] = variants.a1_printed ? "printed" : "shifted";
  kv["variant.ntilde1"] = variants.ntilde1_printed ? "printed" : "proof";
  kv["variant.malliavin"] = variants.malliavin_printed ? "printed" : "corrected";
  kv["variant.ntilde_arg"] = variants.ntilde_arg_bracket ? "bracket" : "threshold";
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace blowup::config
