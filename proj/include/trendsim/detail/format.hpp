#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace trendsim::detail {

// Shortest round-trip decimal representation ("0.5", "0.015625", "0").
inline std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf, ptr);
}

inline std::string format_fixed(double value, int digits) {
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  if (std::isnan(value)) return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  std::string out(buf);
  // avoid "-0.000"
  if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
  return out;
}

// Renders a weight as a reduced fraction when one with a small denominator
// reproduces it to within 1e-12, otherwise as a decimal.
inline std::string format_rational(double value, std::int64_t max_denominator = 10000) {
  if (value == 0.0) return "0";
  const double x = std::fabs(value);
  // continued fraction convergents
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double rest = x;
  for (int iter = 0; iter < 40; ++iter) {
    const double a_d = std::floor(rest);
    if (a_d > 1e12) break;
    const auto a = static_cast<std::int64_t>(a_d);
    const std::int64_t h2 = a * h1 + h0;
    const std::int64_t k2 = a * k1 + k0;
    if (k2 > max_denominator) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (std::fabs(static_cast<double>(h1) / static_cast<double>(k1) - x) <= 1e-12 * std::fmax(1.0, x)) {
      std::string s = value < 0 ? "-" : "";
      s += std::to_string(h1);
      if (k1 != 1) s += "/" + std::to_string(k1);
      return s;
    }
    const double frac = rest - a_d;
    if (frac < 1e-15) break;
    rest = 1.0 / frac;
  }
  return format_number(value);
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace trendsim::detail
