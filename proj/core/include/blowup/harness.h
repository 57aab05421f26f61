#pragma once

#include "blowup/bounds.h"
#include "blowup/config.h"
#include "blowup/fbm.h"
#include "blowup/rpde.h"
#include "blowup/spectral.h"

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace blowup::harness {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

/// Seeds of replicates 0..n-1 split from the master seed.
std::vector<std::uint64_t> replicate_seeds(std::uint64_t master, std::size_t n);

/// Runs fn(i) for i in [0, n) on `jobs` workers. The first exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      while (!stop.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          stop = true;
        }
      }
    });
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

/// Everything derived once from a configuration and shared read-only by the workers.
struct Setup {
  config::ExperimentConfig cfg;
  spectral::SpectralBasis basis;
  fbm::TimeGrid grid;
  std::shared_ptr<const fbm::PathSampler> sampler;
  rpde::InitialDatum datum;
  double f_sup = 0.0;
  double c0 = 0.0;
  double kernel_c = 0.0;
  bool kernel_feasible = false;
  std::optional<bounds::SemigroupEnvelope> envelope;
  std::optional<bounds::UpperBoundInputs> upper;  // when q > p
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> notes;
};

Setup prepare(const config::ExperimentConfig& cfg);

struct BoundsRow {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double tau_lower = bounds::kInfinity;
  double tau_upper_printed = bounds::kInfinity;
  double tau_upper_mirrored = bounds::kInfinity;
  int upper_case = 0;  // 0: not applicable, 1: m+n = q, 2: m+n > q
  double admissible_until = -1.0;
  double sigma_star = bounds::kInfinity;
  double sigma_star_star = bounds::kInfinity;
  double sigma_star_star_variant = bounds::kInfinity;
  std::optional<double> tau_num;
  rpde::Verdict verdict = rpde::Verdict::global_until_horizon;
  double end_time = 0.0;
  bounds::GlobalCertificates certificates;
  bool lower_checked = false, lower_ok = true;
  bool upper_checked = false, upper_ok = true;
  bool certificate_ok = true;
  std::string violation;
};

/// All bounds on one path plus the solver's verdict and the ordering checks.
BoundsRow bounds_row(const Setup& s, std::size_t replicate);

void write_bounds_csv(const std::vector<BoundsRow>& rows, std::ostream& out);

struct Finding {
  std::string suite;
  std::string message;
  bool explained = false;  // accounted for by a printed-formula variant
};

struct RunOptions {
  std::size_t jobs = 1;
  bool strict = false;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> horizon;
  std::ostream* log = nullptr;
  bool write_ledger = true;
};

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> files;
  std::vector<Finding> findings;
  double wall_seconds = 0.0;
};

/// Applies the command-line overrides to a parsed configuration.
config::ExperimentConfig apply_overrides(config::ExperimentConfig cfg, const RunOptions& opt);

/// Runs the configured experiment and writes CSVs into cfg.output_dir.
/// Exit codes: 0 ok, 1 failed validation or findings under strict, 3 numerical failure.
RunResult run(const config::ExperimentConfig& cfg, const RunOptions& opt);

}  // namespace blowup::harness
