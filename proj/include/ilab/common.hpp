#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ilab {

using cplx = std::complex<double>;

inline constexpr std::string_view kVersion = "intermittency-lab 0.1.0";

// Bad user input or config; the CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Finite-size limits made the result unusable; the CLI maps this to exit code 3.
class InconclusiveError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a over raw bytes, used for config and operator fingerprints.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t h);

// Log-spaced time grid: t_min * 10^(i / points_per_decade).
struct LogGrid {
  double t_min = 1.0;
  double decades = 2.0;
  int points_per_decade = 32;

  std::vector<double> times() const;
  double t_max() const { return times().back(); }
};

// Parses "A:B" (log10 endpoints) into a LogGrid, e.g. "1:3" -> t in [10, 1000].
LogGrid parse_decades(const std::string& spec, int points_per_decade);

}  // namespace ilab
