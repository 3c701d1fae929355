#include "ilab/scaling.hpp"

#include <algorithm>
#include <cmath>

namespace ilab {

nlohmann::json ScalingEstimate::to_json() const {
  nlohmann::json j;
  j["quantity"] = quantity;
  j["lower"] = lower;
  j["upper"] = upper;
  j["window_decades"] = window_decades;
  nlohmann::json slopes = nlohmann::json::array();
  for (const auto& [tc, sl] : window_slopes) slopes.push_back({tc, sl});
  j["slopes"] = slopes;
  j["residuals"] = residuals;
  j["config_hash"] = to_hex(config_hash);
  return j;
}

namespace {

// simple least squares y = a + b x; returns (b, rms residual)
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y,
                                   std::size_t begin, std::size_t len) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = begin; i < begin + len; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double n = static_cast<double>(len);
  const double denom = n * sxx - sx * sx;
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  double rss = 0;
  for (std::size_t i = begin; i < begin + len; ++i) {
    const double r = y[i] - (a + b * x[i]);
    rss += r * r;
  }
  return {b, std::sqrt(rss / n)};
}

int infer_points_per_decade(const std::vector<double>& ts) {
  const double dlog = std::log10(ts[1]) - std::log10(ts[0]);
  if (dlog <= 0) throw ValidationError("slope_envelope: times not increasing");
  for (std::size_t i = 2; i < ts.size(); ++i) {
    const double d = std::log10(ts[i]) - std::log10(ts[i - 1]);
    if (std::abs(d - dlog) > 1e-6 * dlog + 1e-12)
      throw ValidationError("slope_envelope: time grid must be log-spaced");
  }
  return static_cast<int>(std::lround(1.0 / dlog));
}

}  // namespace

ScalingEstimate slope_envelope(const TimeAverageSeries& series, double window_decades) {
  series.validate();
  if (window_decades <= 0) throw ValidationError("slope_envelope: window must be positive");
  const auto& ts = series.times;
  const auto& vs = series.values;
  if (ts.size() < 3) throw ValidationError("slope_envelope: series too short");
  for (double v : vs)
    if (v <= 0) throw ValidationError("slope_envelope: values must be positive");

  const double span = std::log10(ts.back() / ts.front());
  if (span + 1e-9 < window_decades)
    throw ValidationError("slope_envelope: series shorter than one window");

  const int ppd = infer_points_per_decade(ts);
  const std::size_t len =
      static_cast<std::size_t>(std::lround(window_decades * ppd)) + 1;

  std::vector<double> x(ts.size()), y(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    x[i] = std::log10(ts[i]);
    y[i] = std::log10(vs[i]);
  }

  ScalingEstimate est;
  est.window_decades = window_decades;
  est.quantity = quantity_name(series.quantity);
  est.lower = std::numeric_limits<double>::infinity();
  est.upper = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + len <= ts.size(); ++i) {
    const auto [slope, rms] = fit_line(x, y, i, len);
    const double tc = std::pow(10.0, (x[i] + x[i + len - 1]) / 2.0);
    est.window_slopes.emplace_back(tc, slope);
    est.residuals.push_back(rms);
    est.lower = std::min(est.lower, slope);
    est.upper = std::max(est.upper, slope);
  }
  return est;
}

namespace {
double other_window(double w) { return w == 0.5 ? 1.0 : 0.5; }

// envelope at the alternate standard window; degrades to the primary when the
// series is too short for the wider one
ScalingEstimate alt_envelope(const TimeAverageSeries& s, double primary,
                             const ScalingEstimate& fallback) {
  try {
    return slope_envelope(s, other_window(primary));
  } catch (const ValidationError&) {
    return fallback;
  }
}
}  // namespace

D2Estimate d2_estimate(const EigenSystem& es, const Eigen::VectorXcd& xi,
                       const std::vector<double>& ts, const D2Options& opts) {
  D2Estimate out;
  out.series = return_probability_series(es, xi, ts, "");
  out.wiener_floor = spectral_measure(es, xi).wiener_limit();
  out.floor_subtracted = opts.subtract_wiener_floor;
  TimeAverageSeries fitted = out.series;
  if (opts.subtract_wiener_floor) {
    for (auto& v : fitted.values) {
      v -= out.wiener_floor;
      if (v <= 0)
        throw InconclusiveError(
            "d2_estimate: series reaches its Wiener floor; grid exceeds the resolution horizon");
    }
  }
  out.envelope = slope_envelope(fitted, opts.window_decades);
  out.envelope_alt = alt_envelope(fitted, opts.window_decades, out.envelope);
  out.lower = -out.envelope.upper;
  out.upper = -out.envelope.lower;
  return out;
}

BetaEstimate beta_estimate(const EigenSystem& es, const Eigen::VectorXcd& xi, double q,
                           const std::vector<double>& ts, double window_decades) {
  BetaEstimate out;
  out.q = q;
  out.series = moment_q_series(es, xi, ts, q, "");
  out.envelope = slope_envelope(out.series, window_decades);
  out.envelope_alt = alt_envelope(out.series, window_decades, out.envelope);
  for (auto& [tc, sl] : out.envelope.window_slopes) sl /= q;
  for (auto& [tc, sl] : out.envelope_alt.window_slopes) sl /= q;
  out.envelope.lower /= q;
  out.envelope.upper /= q;
  out.envelope_alt.lower /= q;
  out.envelope_alt.upper /= q;
  out.lower = out.envelope.lower;
  out.upper = out.envelope.upper;
  return out;
}

ScalingEstimate correlation_dimension_direct(const SpectralMeasure& mu,
                                             const std::vector<double>& eps_grid,
                                             double window_decades) {
  if (mu.locations.size() == 0) throw ValidationError("correlation_dimension_direct: empty measure");
  // S(eps) = sum_k w_k mu(B(lambda_k, eps)), two-pointer over the sorted atoms
  TimeAverageSeries s;
  s.quantity = Quantity::return_prob;
  const auto n = mu.locations.size();
  for (double eps : eps_grid) {
    double acc = 0.0;
    Eigen::Index lo = 0, hi = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      while (lo < n && mu.locations[lo] <= mu.locations[k] - eps) ++lo;
      while (hi < n && mu.locations[hi] < mu.locations[k] + eps) ++hi;
      double ball = 0.0;
      for (Eigen::Index j = lo; j < hi; ++j) ball += mu.weights[j];
      acc += mu.weights[k] * ball;
    }
    s.times.push_back(eps);
    s.values.push_back(acc);
  }
  return slope_envelope(s, window_decades);
}

// ---------------------------------------------------------------------------
// alpha functions

AlphaFunction AlphaFunction::power(double p) {
  AlphaFunction a;
  a.kind_ = Kind::power;
  a.p_ = p;
  return a;
}

AlphaFunction AlphaFunction::log_power(double p) {
  AlphaFunction a;
  a.kind_ = Kind::log_power;
  a.p_ = p;
  return a;
}

AlphaFunction AlphaFunction::iterated_log() {
  AlphaFunction a;
  a.kind_ = Kind::iterated_log;
  return a;
}

AlphaFunction AlphaFunction::table(std::vector<double> ts, std::vector<double> values) {
  if (ts.size() != values.size() || ts.size() < 2)
    throw ValidationError("alpha table needs at least two rows");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (ts[i] <= ts[i - 1]) throw ValidationError("alpha table times must increase");
  AlphaFunction a;
  a.kind_ = Kind::table;
  a.ts_ = std::move(ts);
  a.values_ = std::move(values);
  return a;
}

AlphaFunction AlphaFunction::parse(const std::string& spec) {
  if (spec == "log") return log_power(1.0);
  if (spec == "iterlog") return iterated_log();
  const auto colon = spec.find(':');
  const std::string head = colon == std::string::npos ? spec : spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (head == "power") return power(std::stod(arg));
    if (head == "log") return log_power(std::stod(arg));
  } catch (const std::exception&) {
  }
  throw ValidationError("bad alpha spec '" + spec + "' (use power:P, log, log:P, iterlog)");
}

double AlphaFunction::operator()(double t) const {
  if (t <= 0) throw ValidationError("alpha: t must be positive");
  switch (kind_) {
    case Kind::power: return std::pow(t, p_);
    case Kind::log_power: return std::pow(std::log1p(t), p_);
    case Kind::iterated_log: return std::log1p(std::log1p(t));
    case Kind::table: {
      if (t <= ts_.front()) return values_.front();
      if (t >= ts_.back()) return values_.back();
      const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
      const auto i = static_cast<std::size_t>(it - ts_.begin());
      const double u = (std::log(t) - std::log(ts_[i - 1])) / (std::log(ts_[i]) - std::log(ts_[i - 1]));
      return values_[i - 1] + u * (values_[i] - values_[i - 1]);
    }
  }
  return 0.0;
}

std::string AlphaFunction::describe() const {
  switch (kind_) {
    case Kind::power: return "power:" + std::to_string(p_);
    case Kind::log_power: return "log:" + std::to_string(p_);
    case Kind::iterated_log: return "iterlog";
    case Kind::table: return "table[" + std::to_string(ts_.size()) + "]";
  }
  return "?";
}

AlphaScan alpha_scan(const AlphaFunction& alpha, const TimeAverageSeries& series) {
  series.validate();
  AlphaScan scan;
  std::vector<double> prod(series.times.size());
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    prod[i] = alpha(series.times[i]) * series.values[i];
    if (!std::isfinite(prod[i])) throw ValidationError("alpha_scan: alpha undefined on grid");
    if (prod[i] >= scan.sup_value) {
      if (prod[i] > scan.sup_value || scan.argmax_t == 0.0) {
        scan.sup_value = prod[i];
        scan.argmax_t = series.times[i];
      }
    }
  }
  // compare running maxima of the last two whole decades on the grid
  const double log_end = std::log10(series.times.back());
  double last = 0, prev = 0;
  bool has_last = false, has_prev = false;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double lg = std::log10(series.times[i]);
    if (lg > log_end - 1.0) {
      last = std::max(last, prod[i]);
      has_last = true;
    } else if (lg > log_end - 2.0) {
      prev = std::max(prev, prod[i]);
      has_prev = true;
    }
  }
  scan.growth_flag = has_last && has_prev && last > prev;
  return scan;
}

}  // namespace ilab
