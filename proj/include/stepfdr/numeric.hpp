#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace stepfdr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Absolute tolerance for comparing rejection volumes.
inline constexpr double kVolumeTol = 1e-9;

// Relative slack on inclusive p <= threshold comparisons. Decimal inputs such
// as 0.01 / 0.2 round below the exact threshold; a few ulps absorbs that.
inline constexpr double kThresholdRelTol = 1e-12;

inline bool below_threshold(double value, double threshold) {
  if (threshold == kInf) return true;
  return value <= threshold + std::abs(threshold) * kThresholdRelTol;
}

inline bool volume_at_least(double volume, double r) {
  return volume >= r - kVolumeTol;
}

// Standard normal CDF and density. erfc keeps full relative accuracy in the
// tails, well under 1e-12 absolute everywhere.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// One-sided p-value of a N(0,1) statistic: P(Z >= z).
inline double upper_tail_pvalue(double z) {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

// gamma_m = 1 + 1/2 + ... + 1/m
inline double harmonic_number(std::size_t m) {
  double s = 0.0;
  for (std::size_t i = m; i >= 1; --i) s += 1.0 / static_cast<double>(i);
  return s;
}

// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && *first == ' ') ++first;
  while (last != first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || first == last) {
    throw std::invalid_argument(std::string(what) + ": cannot parse number '" +
                                std::string(s) + "'");
  }
  return v;
}

// splitmix64 finalizer; used to derive independent per-trial seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_trial_rng(std::uint64_t master, std::uint64_t index) {
  return Rng(trial_seed(master, index));
}

// Uniform on [0,1) with 53 random bits; independent of the standard library's
// distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// CSV field, quoted only when it contains a comma or a quote.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace stepfdr
