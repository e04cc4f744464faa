#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hcap {

using Complex = std::complex<double>;

/// |z| without hypot's overflow guard.
inline double magnitude(Complex z) { return std::sqrt(z.real() * z.real() + z.imag() * z.imag()); }

/// Base error for everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data or run configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure the caller asked to be fatal (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Phase set as a bitmask over {A, B, C}.
class Phases {
 public:
  static constexpr std::uint8_t kA = 1, kB = 2, kC = 4, kAll = 7;

  constexpr Phases() = default;
  constexpr explicit Phases(std::uint8_t mask) : mask_(mask & kAll) {}

  static Phases parse(std::string_view s) {
    std::uint8_t m = 0;
    for (char c : s) {
      switch (c) {
        case 'A': case 'a': m |= kA; break;
        case 'B': case 'b': m |= kB; break;
        case 'C': case 'c': m |= kC; break;
        default: throw ConfigError("invalid phase letter '" + std::string(1, c) + "' in \"" + std::string(s) + "\"");
      }
    }
    return Phases(m);
  }

  constexpr std::uint8_t mask() const { return mask_; }
  constexpr bool has(int phase) const { return (mask_ >> phase) & 1U; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr int count() const { return (mask_ & 1) + ((mask_ >> 1) & 1) + ((mask_ >> 2) & 1); }
  constexpr bool subset_of(Phases other) const { return (mask_ & ~other.mask_) == 0; }
  constexpr Phases operator&(Phases o) const { return Phases(mask_ & o.mask_); }
  constexpr bool operator==(const Phases&) const = default;

  std::string str() const {
    std::string s;
    if (has(0)) s += 'A';
    if (has(1)) s += 'B';
    if (has(2)) s += 'C';
    return s;
  }

 private:
  std::uint8_t mask_ = 0;
};

template <typename T>
using PerPhase = std::array<T, 3>;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Fixed-precision decimal, locale independent. Used for every CSV number so
/// bundles are byte-stable across runs.
inline std::string fmt_fixed(double v, int precision = 3) {
  if (v == 0.0) v = 0.0;  // squash -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s(buf);
  if (s.size() > 1 && s[0] == '-') {
    bool all_zero = true;
    for (char c : s.substr(1))
      if (c != '0' && c != '.') all_zero = false;
    if (all_zero) s.erase(0, 1);
  }
  return s;
}

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace hcap
