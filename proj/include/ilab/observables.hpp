#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ilab/common.hpp"
#include "ilab/eigensystem.hpp"

namespace ilab {

// Finite-rank observable, stored either as singular triples
// A = sum_r sigma_r |u_r><v_r| or as a dense block.
class CompactObservable {
 public:
  static CompactObservable projector(const Eigen::VectorXcd& u);
  static CompactObservable from_triples(const Eigen::VectorXd& sigma,
                                        const Eigen::MatrixXcd& left,
                                        const Eigen::MatrixXcd& right, bool positive);
  static CompactObservable from_dense(const Eigen::MatrixXcd& a);

  int rank() const;
  int dim() const;
  bool positive() const { return positive_; }
  bool factored() const { return !dense_.has_value(); }

  const Eigen::VectorXd& sigma() const { return sigma_; }
  const Eigen::MatrixXcd& left() const { return left_; }
  const Eigen::MatrixXcd& right() const { return right_; }
  const Eigen::MatrixXcd& dense() const;

  double trace_norm() const;     // sum of singular values
  double operator_norm() const;  // largest singular value

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

  // sigma descending, orthonormal vector families (1e-10)
  void validate() const;

 private:
  Eigen::VectorXd sigma_;
  Eigen::MatrixXcd left_, right_;
  std::optional<Eigen::MatrixXcd> dense_;
  bool positive_ = false;
};

double trace_norm(const CompactObservable& a);

enum class Quantity { expectation, return_prob, moment_q };

std::string quantity_name(Quantity q);

struct TimeAverageSeries {
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;  // finite
  Quantity quantity = Quantity::expectation;
  std::uint64_t operator_hash = 0;
  std::string xi_label;
  double q = 0.0;  // moment order, when quantity == moment_q

  void validate() const;
};

// CSV with columns (t, value, quantity, operator_hash, xi_label)
void write_series_csv(const TimeAverageSeries& s, const std::string& path);
TimeAverageSeries read_series_csv(const std::string& path);

// ---------------------------------------------------------------------------
// expectation values and time averages

// <xi(t), A xi(t)>
double expectation(const CompactObservable& a, const EigenSystem& es,
                   const Eigen::VectorXcd& xi, double t);

// Exact time average (1/t) int_0^t <xi(s), A xi(s)> ds via the double sum
// over eigenvalue pairs. Requires positive A, for which the theorems'
// absolute value is redundant.
double time_average_closed(const CompactObservable& a, const EigenSystem& es,
                           const Eigen::VectorXcd& xi, double t);

TimeAverageSeries time_average_closed_series(const CompactObservable& a,
                                             const EigenSystem& es,
                                             const Eigen::VectorXcd& xi,
                                             const std::vector<double>& ts,
                                             const std::string& xi_label = "");

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;  // Richardson, from the half-point rule
  int points = 0;
};

// Composite trapezoid of |<xi(s), A xi(s)>| on [0, t].
QuadratureResult time_average_quadrature(const CompactObservable& a, const EigenSystem& es,
                                         const Eigen::VectorXcd& xi, double t, int n_points);

// (1/t) int_0^t |<xi, e^{-isT} xi>|^2 ds, exact via the spectral weights.
double return_probability_avg(const EigenSystem& es, const Eigen::VectorXcd& xi, double t);

TimeAverageSeries return_probability_series(const EigenSystem& es, const Eigen::VectorXcd& xi,
                                            const std::vector<double>& ts,
                                            const std::string& xi_label = "");

// Time-averaged q-moment of the position operator, site basis required.
TimeAverageSeries moment_q_series(const EigenSystem& es, const Eigen::VectorXcd& xi,
                                  const std::vector<double>& ts, double q,
                                  const std::string& xi_label = "");

// ---------------------------------------------------------------------------
// measure continuity

struct LipschitzReport {
  double constant = 0.0;   // best C with mu(I) <= C l(I) on l in [ell_min, 1]
  double ell_min = 0.0;
  double worst_left = 0.0;  // left end of the maximizing interval
  double worst_length = 0.0;
  int atoms = 0;
};

// Sliding-window sweep over the sorted atoms. Atoms force a blow-up below
// their own scale, hence the resolution floor ell_min.
LipschitzReport lipschitz_constant(const SpectralMeasure& mu, double ell_min);

struct LastBoundReport {
  double c_empirical = 0.0;   // max over valid grid of t * value / ||A||_1
  double c_lipschitz = 0.0;
  double t_max_valid = 0.0;   // 1 / ell_min
  int points_used = 0;
  int points_clipped = 0;
  bool holds = false;         // bound held with c_empirical <= 50 * c_lipschitz
  double trace_norm = 0.0;
};

// Checks <A>_t <= C ||A||_1 / t on the grid restricted to t <= 1/ell_min.
LastBoundReport last_bound_check(const CompactObservable& a, const EigenSystem& es,
                                 const Eigen::VectorXcd& xi, const std::vector<double>& ts,
                                 double ell_min);

}  // namespace ilab
