#include "blowup/csv.h"

#include <cmath>
#include <cstdio>

namespace blowup::csv {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void Writer::header(std::initializer_list<std::string_view> names) {
  for (auto n : names) field(n);
  end_row();
}

void Writer::separator() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

Writer& Writer::field(std::string_view text) {
  separator();
  if (text.find_first_of(",\"\n") == std::string_view::npos) {
    out_ << text;
    return *this;
  }
  out_ << '"';
  for (char c : text) {
    if (c == '"') out_ << '"';
    out_ << c;
  }
  out_ << '"';
  return *this;
}

Writer& Writer::field(double x) { return field(std::string_view(format_double(x))); }

Writer& Writer::field(long long x) {
  separator();
  out_ << x;
  return *this;
}

Writer& Writer::field(unsigned long long x) {
  separator();
  out_ << x;
  return *this;
}

void Writer::end_row() {
  out_ << '\n';
  row_started_ = false;
}

}  // namespace blowup::csv
