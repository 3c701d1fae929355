#include "ilab/common.hpp"

#include <cmath>
#include <cstdio>

namespace ilab {

std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> LogGrid::times() const {
  if (t_min <= 0.0) throw ValidationError("LogGrid: t_min must be positive");
  if (decades <= 0.0) throw ValidationError("LogGrid: decades must be positive");
  if (points_per_decade < 1) throw ValidationError("LogGrid: points_per_decade must be >= 1");
  const int n = static_cast<int>(std::floor(decades * points_per_decade + 1e-9)) + 1;
  std::vector<double> ts(n);
  for (int i = 0; i < n; ++i)
    ts[i] = t_min * std::pow(10.0, static_cast<double>(i) / points_per_decade);
  return ts;
}

LogGrid parse_decades(const std::string& spec, int points_per_decade) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ValidationError("decade spec must look like A:B, got '" + spec + "'");
  double a = 0, b = 0;
  try {
    a = std::stod(spec.substr(0, colon));
    b = std::stod(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("decade spec must look like A:B, got '" + spec + "'");
  }
  if (b <= a) throw ValidationError("decade spec needs B > A");
  return LogGrid{std::pow(10.0, a), b - a, points_per_decade};
}

}  // namespace ilab
