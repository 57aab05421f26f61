#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

/// Argument outside the mathematical domain of an operation (negative time, H out of range, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Invalid configuration or violated standing assumption. Carries every violation found.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what)
      : std::invalid_argument(what), violations_{what} {}
  explicit ConfigError(std::vector<std::string> violations)
      : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

/// Numerical breakdown (non-PD covariance, failed bracketing, ...).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace blowup
