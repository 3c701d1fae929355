#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ilab/common.hpp"
#include "ilab/eigensystem.hpp"
#include "ilab/observables.hpp"

namespace ilab {

// Envelope of local log-log slopes: the finite-data stand-in for liminf and
// limsup exponents. lower/upper are the extreme window slopes.
struct ScalingEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double window_decades = 0.0;
  std::vector<std::pair<double, double>> window_slopes;  // (t_center, slope)
  std::vector<double> residuals;                         // rms per window
  std::string quantity;
  std::uint64_t config_hash = 0;

  nlohmann::json to_json() const;
};

// Least-squares slopes of log10(value) against log10(t) over sliding windows
// of `window_decades`. Requires positive values and a span of at least one
// window; times must be log-spaced.
ScalingEstimate slope_envelope(const TimeAverageSeries& series, double window_decades);

struct D2Options {
  double window_decades = 1.0;
  bool subtract_wiener_floor = false;
};

// Correlation-dimension proxies from the decay of the time-averaged return
// probability: (lower, upper) = (-upper_slope, -lower_slope). Both standard
// window settings are reported; `envelope` is the requested one.
struct D2Estimate {
  double lower = 0.0;
  double upper = 0.0;
  ScalingEstimate envelope;
  ScalingEstimate envelope_alt;  // the other of {0.5, 1.0} decades
  double wiener_floor = 0.0;
  bool floor_subtracted = false;
  TimeAverageSeries series;
};

D2Estimate d2_estimate(const EigenSystem& es, const Eigen::VectorXcd& xi,
                       const std::vector<double>& ts, const D2Options& opts = {});

// Transport-exponent proxies: window slopes of log moment / (q log t).
struct BetaEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double q = 0.0;
  ScalingEstimate envelope;      // slopes already divided by q
  ScalingEstimate envelope_alt;
  TimeAverageSeries series;
};

BetaEstimate beta_estimate(const EigenSystem& es, const Eigen::VectorXcd& xi, double q,
                           const std::vector<double>& ts, double window_decades = 1.0);

// Direct estimator: slopes of log sum_k w_k mu(B(lambda_k, eps)) vs log eps.
// Cross-checks the dynamical route through the measure itself.
ScalingEstimate correlation_dimension_direct(const SpectralMeasure& mu,
                                             const std::vector<double>& eps_grid,
                                             double window_decades = 1.0);

// ---------------------------------------------------------------------------
// alpha scans

class AlphaFunction {
 public:
  enum class Kind { power, log_power, iterated_log, table };

  static AlphaFunction power(double p);
  static AlphaFunction log_power(double p);
  static AlphaFunction iterated_log();
  static AlphaFunction table(std::vector<double> ts, std::vector<double> values);
  // "power:1.5", "log", "log:2", "iterlog"
  static AlphaFunction parse(const std::string& spec);

  double operator()(double t) const;
  Kind kind() const { return kind_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::power;
  double p_ = 1.0;
  std::vector<double> ts_, values_;  // table kind, log-linear interpolation
};

struct AlphaScan {
  double sup_value = 0.0;
  double argmax_t = 0.0;
  // running max over the last decade exceeded the previous decade's: the
  // finite-t proxy for alpha(t) <A>_t growing without bound
  bool growth_flag = false;
};

AlphaScan alpha_scan(const AlphaFunction& alpha, const TimeAverageSeries& series);

}  // namespace ilab
