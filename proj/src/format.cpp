// SPDX-License-Identifier: Apache-2.0
#include "flexibit/format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "flexibit/errors.hpp"

namespace flexibit {

FormatSpec FormatSpec::fp(int exp_bits, int man_bits) {
  return fp(exp_bits, man_bits, default_bias(exp_bits));
}

FormatSpec FormatSpec::fp(int exp_bits, int man_bits, int bias) {
  FormatSpec f{FormatKind::Float, exp_bits, man_bits, true, bias};
  f.validate();
  return f;
}

FormatSpec FormatSpec::integer(int bits, bool is_signed) {
  FormatSpec f{FormatKind::Int, 0, bits - (is_signed ? 1 : 0), is_signed, 0};
  f.validate();
  return f;
}

void FormatSpec::validate() const {
  if (man_bits < 0 || exp_bits < 0) throw FormatError("negative field width");
  if (is_float()) {
    if (exp_bits < 1) throw FormatError("float formats need at least one exponent bit");
    if (exp_bits > 30) throw FormatError("exponent field wider than 30 bits");
    if (!is_signed) throw FormatError("float formats are always signed");
  } else if (exp_bits != 0) {
    throw FormatError("integer formats have no exponent field");
  }
  if (total_bits() < 2) throw FormatError("formats need at least 2 bits");
  if (total_bits() > 64) throw FormatError("formats wider than 64 bits are not supported");
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError("malformed format string '" + std::string(whole) + "'");
  }
  return v;
}

FormatSpec parse_exmy(std::string_view s, std::string_view whole) {
  // s = "e<X>m<Y>"
  auto m = s.find('m');
  if (s.size() < 4 || s[0] != 'e' || m == std::string_view::npos) {
    throw FormatError("malformed format string '" + std::string(whole) + "'");
  }
  return FormatSpec::fp(parse_int(s.substr(1, m - 1), whole), parse_int(s.substr(m + 1), whole));
}

}  // namespace

FormatSpec parse_format(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  std::string_view v = s;
  if (v.starts_with("uint")) return FormatSpec::integer(parse_int(v.substr(4), text), false);
  if (v.starts_with("int")) return FormatSpec::integer(parse_int(v.substr(3), text), true);
  if (v.starts_with("fp")) {
    auto colon = v.find(':');
    if (colon == std::string_view::npos) {
      throw FormatError("'" + std::string(text) + "' needs an explicit layout, e.g. fp6:e2m3");
    }
    int total = parse_int(v.substr(2, colon - 2), text);
    FormatSpec f = parse_exmy(v.substr(colon + 1), text);
    if (f.total_bits() != total) {
      throw FormatError("'" + std::string(text) + "': layout has " + std::to_string(f.total_bits()) +
                        " bits, not " + std::to_string(total));
    }
    return f;
  }
  return parse_exmy(v, text);
}

std::string to_string(const FormatSpec& fmt) {
  if (fmt.is_int()) return (fmt.is_signed ? "int" : "uint") + std::to_string(fmt.total_bits());
  std::string s = "e" + std::to_string(fmt.exp_bits) + "m" + std::to_string(fmt.man_bits);
  if (fmt.bias != default_bias(fmt.exp_bits)) s += "/bias" + std::to_string(fmt.bias);
  return s;
}

FormatSpec product_format(const FormatSpec& a, const FormatSpec& w) {
  if (a.is_float() != w.is_float()) throw FormatError("mixed float/int products have no product format");
  if (a.is_int()) return FormatSpec::integer(a.total_bits() + w.total_bits(), a.is_signed || w.is_signed);
  return FormatSpec::fp(std::max(a.exp_bits, w.exp_bits), a.man_bits + w.man_bits + 1);
}

int padded_container_bits(const FormatSpec& fmt) {
  int c = 8;
  while (c < fmt.total_bits()) c *= 2;
  return c;
}

}  // namespace flexibit
