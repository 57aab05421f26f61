#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace blowup::csv {

/// Shortest round-trip decimal form ("%.17g"); "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double x);

/// Minimal CSV row writer. Fields containing a comma or quote are quoted.
class Writer {
public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void header(std::initializer_list<std::string_view> names);

  Writer& field(std::string_view text);
  Writer& field(double x);
  Writer& field(long long x);
  Writer& field(unsigned long long x);
  Writer& field(std::size_t x) { return field(static_cast<unsigned long long>(x)); }
  Writer& field(int x) { return field(static_cast<long long>(x)); }
  void end_row();

private:
  void separator();
  std::ostream& out_;
  bool row_started_ = false;
};

}  // namespace blowup::csv
