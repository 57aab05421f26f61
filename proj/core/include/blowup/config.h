#pragma once

#include "blowup/errors.h"
#include "blowup/fbm.h"
#include "blowup/rpde.h"
#include "blowup/spectral.h"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace blowup::config {

enum class Experiment { simulate, bounds, probability, validate };
const char* to_string(Experiment e);

/// Which reading of each ambiguous printed formula drives verdicts. Both readings are always reported.
struct VariantFlags {
  bool st1_mirrored = false;       // sign of the s-exponent in the case-1 upper bound
  bool st2_mirrored = false;       // sign of the s-exponent in the case-2 upper bound
  bool a1_printed = true;          // (-lambda1 + gamma) in a1, else (lambda1 + Lambda)
  bool ntilde1_printed = true;     // 1/((lambda1 + Lambda)(q-1)) in Ntilde1, else 1/(Lambda (m+n-1))
  bool malliavin_printed = true;   // multiply by M_H as printed, else divide by the exact supremum
  bool ntilde_arg_bracket = true;  // log(Ntilde + 1), else log(threshold + 1)
};

struct ExperimentConfig {
  Experiment experiment = Experiment::bounds;
  rpde::ModelParams model;
  spectral::DomainSpec domain = spectral::DomainSpec::interval(4.0, 64);
  std::size_t modes = 0;  // 0: every grid-resolvable mode
  double datum_b = 0.0;   // f = b phi; 0 picks b_factor times the smallest admissible b at t = 0
  double datum_b_factor = 2.0;
  double t_max = 0.5;
  std::size_t n_steps = 1024;
  fbm::SamplingMethod sampling = fbm::SamplingMethod::circulant;
  std::size_t ensemble_size = 100;
  std::uint64_t master_seed = 20240601;
  std::string output_dir = "out";
  rpde::SolverControls solver;
  double c0 = 0.0;             // f <= C0 phi for the infinite-horizon certificate (0: smallest valid)
  double eps0_fraction = 0.5;  // eps0 as a fraction of its printed cap
  double alpha = 1.0;          // weight t^alpha of the Malliavin bound
  std::size_t kernel_points = 10;
  std::size_t kernel_times = 20;
  VariantFlags variants;
  std::vector<std::string> warnings;

  /// Sorted key = value lines; identical for identical effective configurations.
  std::string canonical() const;
};

/// Raised for malformed lines; carries line and column.
class ParseError : public ConfigError {
public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t line_, column_;
};

/// Flat `key = value` text, `#` starts a comment. Unknown keys become warnings. Every violated
/// constraint is collected before throwing.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Keys understood by the parser with a one-line description each.
const std::map<std::string, std::string>& known_keys();

}  // namespace blowup::config
