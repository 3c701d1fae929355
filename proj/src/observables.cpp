#include "ilab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ilab/kernels.hpp"

namespace ilab {

namespace {
constexpr double kOrthoTol = 1e-10;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

// ---------------------------------------------------------------------------
// CompactObservable

CompactObservable CompactObservable::projector(const Eigen::VectorXcd& u) {
  const double nrm = u.norm();
  if (nrm == 0.0) throw ValidationError("projector: zero vector");
  CompactObservable a;
  a.sigma_ = Eigen::VectorXd::Ones(1);
  a.left_ = u / nrm;
  a.right_ = a.left_;
  a.positive_ = true;
  return a;
}

CompactObservable CompactObservable::from_triples(const Eigen::VectorXd& sigma,
                                                  const Eigen::MatrixXcd& left,
                                                  const Eigen::MatrixXcd& right,
                                                  bool positive) {
  CompactObservable a;
  a.sigma_ = sigma;
  a.left_ = left;
  a.right_ = right;
  a.positive_ = positive;
  a.validate();
  return a;
}

CompactObservable CompactObservable::from_dense(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw ValidationError("CompactObservable: dense block must be square");
  CompactObservable a;
  a.dense_ = m;
  const bool hermitian = (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12;
  if (hermitian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> s(m, Eigen::EigenvaluesOnly);
    a.positive_ = s.eigenvalues().minCoeff() >= -1e-12;
  }
  return a;
}

int CompactObservable::rank() const {
  if (dense_) return static_cast<int>(dense_->rows());
  return static_cast<int>(sigma_.size());
}

int CompactObservable::dim() const {
  if (dense_) return static_cast<int>(dense_->rows());
  return static_cast<int>(left_.rows());
}

const Eigen::MatrixXcd& CompactObservable::dense() const {
  if (!dense_) throw std::logic_error("CompactObservable: factored form has no dense block");
  return *dense_;
}

double CompactObservable::trace_norm() const {
  if (!dense_) return sigma_.sum();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(*dense_);
  return svd.singularValues().sum();
}

double CompactObservable::operator_norm() const {
  if (!dense_) return sigma_.size() ? sigma_.maxCoeff() : 0.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(*dense_);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

Eigen::VectorXcd CompactObservable::apply(const Eigen::VectorXcd& x) const {
  if (x.size() != dim()) throw ValidationError("CompactObservable: dimension mismatch");
  if (dense_) return *dense_ * x;
  return left_ * (sigma_.asDiagonal() * (right_.adjoint() * x));
}

void CompactObservable::validate() const {
  if (dense_) return;
  const auto r = sigma_.size();
  if (left_.cols() != r || right_.cols() != r || left_.rows() != right_.rows())
    throw ValidationError("CompactObservable: triple shape mismatch");
  for (Eigen::Index i = 0; i < r; ++i) {
    if (sigma_[i] < 0) throw ValidationError("CompactObservable: negative singular value");
    if (i + 1 < r && sigma_[i] < sigma_[i + 1])
      throw ValidationError("CompactObservable: singular values must be descending");
  }
  if (r > 0) {
    Eigen::MatrixXcd gl = left_.adjoint() * left_;
    Eigen::MatrixXcd gr = right_.adjoint() * right_;
    gl.diagonal().array() -= 1.0;
    gr.diagonal().array() -= 1.0;
    if (gl.cwiseAbs().maxCoeff() > kOrthoTol || gr.cwiseAbs().maxCoeff() > kOrthoTol)
      throw ValidationError("CompactObservable: vector families are not orthonormal");
  }
  if (positive_ && (left_ - right_).cwiseAbs().maxCoeff() > kOrthoTol)
    throw ValidationError("CompactObservable: positive flag requires left == right");
}

double trace_norm(const CompactObservable& a) { return a.trace_norm(); }

std::string quantity_name(Quantity q) {
  switch (q) {
    case Quantity::expectation: return "expectation";
    case Quantity::return_prob: return "return_prob";
    case Quantity::moment_q: return "moment_q";
  }
  return "unknown";
}

void TimeAverageSeries::validate() const {
  if (times.size() != values.size() || times.empty())
    throw ValidationError("TimeAverageSeries: times/values mismatch or empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && times[i] <= times[i - 1])
      throw ValidationError("TimeAverageSeries: times must be strictly increasing");
    if (!std::isfinite(values[i]) || !std::isfinite(times[i]) || times[i] <= 0)
      throw ValidationError("TimeAverageSeries: nonfinite entries");
  }
}

void write_series_csv(const TimeAverageSeries& s, const std::string& path) {
  s.validate();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write series file " + tmp);
    out << "t,value,quantity,operator_hash,xi_label\n";
    const std::string qn = quantity_name(s.quantity);
    const std::string oh = to_hex(s.operator_hash);
    for (std::size_t i = 0; i < s.times.size(); ++i)
      out << fmt17(s.times[i]) << ',' << fmt17(s.values[i]) << ',' << qn << ',' << oh
          << ',' << s.xi_label << '\n';
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move series file into place: " + path);
}

TimeAverageSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open series file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty series file '" + path + "'");
  TimeAverageSeries s;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tf, vf, qf, hf, lf;
    if (!std::getline(ss, tf, ',') || !std::getline(ss, vf, ','))
      throw ValidationError("bad series row in '" + path + "'");
    std::getline(ss, qf, ',');
    std::getline(ss, hf, ',');
    std::getline(ss, lf, ',');
    s.times.push_back(std::stod(tf));
    s.values.push_back(std::stod(vf));
    if (first) {
      if (qf == "return_prob") s.quantity = Quantity::return_prob;
      else if (qf == "moment_q") s.quantity = Quantity::moment_q;
      else s.quantity = Quantity::expectation;
      if (!hf.empty()) s.operator_hash = std::stoull(hf, nullptr, 16);
      s.xi_label = lf;
      first = false;
    }
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// expectation values and time averages

double expectation(const CompactObservable& a, const EigenSystem& es,
                   const Eigen::VectorXcd& xi, double t) {
  if (xi.size() != es.dim() || a.dim() != es.dim())
    throw ValidationError("expectation: dimension mismatch");
  const Eigen::VectorXcd xt = evolve(es, xi, t);
  return std::real(xt.dot(a.apply(xt)));
}

namespace {

// Observable transported to the eigenbasis, plus the state coefficients.
struct EigenbasisForm {
  Eigen::VectorXcd coeff;
  Eigen::VectorXd sigma;     // factored form
  Eigen::MatrixXcd u_eig, v_eig;
  bool factored = true;
  Eigen::MatrixXcd dense_eig;
};

EigenbasisForm to_eigenbasis(const CompactObservable& a, const EigenSystem& es,
                             const Eigen::VectorXcd& xi) {
  if (xi.size() != es.dim() || a.dim() != es.dim())
    throw ValidationError("time average: dimension mismatch");
  EigenbasisForm f;
  f.coeff = es.coefficients(xi);
  if (a.factored()) {
    const auto r = a.sigma().size();
    f.sigma = a.sigma();
    f.u_eig.resize(es.dim(), r);
    f.v_eig.resize(es.dim(), r);
    for (Eigen::Index q = 0; q < r; ++q) {
      f.u_eig.col(q) = es.coefficients(a.left().col(q));
      f.v_eig.col(q) = es.coefficients(a.right().col(q));
    }
  } else {
    f.factored = false;
    Eigen::MatrixXcd cols(es.dim(), es.dim());
    for (int k = 0; k < es.dim(); ++k) cols.col(k) = es.coefficients(a.dense().col(k));
    // second pass applies the basis change on the right
    f.dense_eig.resize(es.dim(), es.dim());
    for (int k = 0; k < es.dim(); ++k)
      f.dense_eig.row(k) = es.coefficients(cols.row(k).adjoint()).adjoint();
  }
  return f;
}

std::vector<double> closed_series_values(const CompactObservable& a, const EigenSystem& es,
                                         const Eigen::VectorXcd& xi,
                                         const std::vector<double>& ts) {
  if (!a.positive())
    throw ValidationError("time_average_closed: the closed form requires a positive observable");
  const EigenbasisForm f = to_eigenbasis(a, es, xi);
  std::vector<double> out(ts.size(), 0.0);
  if (f.factored) {
    // A = sum_r sigma_r |u_r><u_r| gives M = sum_r sigma_r a_r a_r^* with
    // a_r = conj(coeff) .* u_r in the eigenbasis
    std::vector<double> tmp(ts.size());
    for (Eigen::Index q = 0; q < f.sigma.size(); ++q) {
      const Eigen::VectorXcd ar = f.coeff.conjugate().cwiseProduct(f.u_eig.col(q));
      kernels::rank_one_hermitian_phi_grid(ts, ar, es.eigenvalues(), tmp);
      for (std::size_t i = 0; i < ts.size(); ++i) out[i] += f.sigma[q] * tmp[i];
    }
  } else {
    const Eigen::MatrixXcd m =
        f.coeff.conjugate() * f.coeff.transpose();  // conj(c_j) c_k
    const Eigen::MatrixXcd full = m.cwiseProduct(f.dense_eig);
    const Eigen::MatrixXd re = full.real();
    const Eigen::MatrixXd im = full.imag();
    kernels::hermitian_phi_grid(ts, re, &im, es.eigenvalues(), out);
  }
  return out;
}

}  // namespace

double time_average_closed(const CompactObservable& a, const EigenSystem& es,
                           const Eigen::VectorXcd& xi, double t) {
  return closed_series_values(a, es, xi, {t})[0];
}

TimeAverageSeries time_average_closed_series(const CompactObservable& a,
                                             const EigenSystem& es,
                                             const Eigen::VectorXcd& xi,
                                             const std::vector<double>& ts,
                                             const std::string& xi_label) {
  TimeAverageSeries s;
  s.times = ts;
  s.values = closed_series_values(a, es, xi, ts);
  s.quantity = Quantity::expectation;
  s.operator_hash = es.source_hash();
  s.xi_label = xi_label;
  return s;
}

QuadratureResult time_average_quadrature(const CompactObservable& a, const EigenSystem& es,
                                         const Eigen::VectorXcd& xi, double t, int n_points) {
  if (n_points < 64) throw ValidationError("time_average_quadrature: need n_points >= 64");
  if (t <= 0) throw ValidationError("time_average_quadrature: t must be positive");
  const EigenbasisForm f = to_eigenbasis(a, es, xi);
  const int n = n_points;
  std::vector<double> ss(n + 1), g(n + 1);
  for (int i = 0; i <= n; ++i) ss[i] = t * i / n;
  if (f.factored) {
    kernels::abs_expectation_grid(ss, f.coeff, es.eigenvalues(), f.sigma, f.u_eig, f.v_eig, g);
  } else {
    const auto dim = es.dim();
#pragma omp parallel for schedule(static)
    for (int i = 0; i <= n; ++i) {
      Eigen::VectorXcd cs(dim);
      for (int k = 0; k < dim; ++k) {
        const double ph = -ss[i] * es.eigenvalues()[k];
        cs[k] = f.coeff[k] * cplx(std::cos(ph), std::sin(ph));
      }
      g[i] = std::abs(cs.dot(f.dense_eig * cs));
    }
  }
  auto trapezoid = [&](int stride) {
    double acc = 0.5 * (g[0] + g[n]);
    for (int i = stride; i < n; i += stride) acc += g[i];
    // careful: with stride 2 the endpoints weights stay 1/2 of the coarse rule
    return acc * (t * stride / n) / t;
  };
  const double fine = trapezoid(1);
  const double coarse = (n % 2 == 0) ? trapezoid(2) : fine;
  QuadratureResult r;
  r.value = fine;
  r.error_estimate = std::abs(fine - coarse) / 3.0;
  r.points = n;
  return r;
}

double return_probability_avg(const EigenSystem& es, const Eigen::VectorXcd& xi, double t) {
  const SpectralMeasure mu = spectral_measure(es, xi);
  std::vector<double> out(1);
  kernels::rank_one_phi_grid({&t, 1}, mu.weights, mu.locations, out);
  return out[0];
}

TimeAverageSeries return_probability_series(const EigenSystem& es, const Eigen::VectorXcd& xi,
                                            const std::vector<double>& ts,
                                            const std::string& xi_label) {
  const SpectralMeasure mu = spectral_measure(es, xi);
  TimeAverageSeries s;
  s.times = ts;
  s.values.resize(ts.size());
  kernels::rank_one_phi_grid(ts, mu.weights, mu.locations, s.values);
  s.quantity = Quantity::return_prob;
  s.operator_hash = es.source_hash();
  s.xi_label = xi_label;
  return s;
}

TimeAverageSeries moment_q_series(const EigenSystem& es, const Eigen::VectorXcd& xi,
                                  const std::vector<double>& ts, double q,
                                  const std::string& xi_label) {
  if (es.basis() != SourceBasis::lattice_sites)
    throw ValidationError("moment_q: site-labeled basis required");
  if (q <= 0) throw ValidationError("moment_q: q must be positive");
  if (xi.size() != es.dim()) throw ValidationError("moment_q: dimension mismatch");
  const int n = es.dim();
  const int half = es.half_width();

  Eigen::VectorXd site_weight(n);
  for (int i = 0; i < n; ++i)
    site_weight[i] = std::pow(std::abs(static_cast<double>(i - half)), q);

  // G = Psi^T diag(|n|^q) Psi, then M = (conj(c) c^T) .* G
  const Eigen::MatrixXd& psi = es.vectors_real();
  const Eigen::MatrixXd g = psi.transpose() * site_weight.asDiagonal() * psi;
  const Eigen::VectorXcd c = es.coefficients(xi);
  const Eigen::VectorXd cr = c.real(), ci = c.imag();

  TimeAverageSeries s;
  s.times = ts;
  s.values.resize(ts.size());
  if (ci.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, cr.cwiseAbs().maxCoeff())) {
    const Eigen::MatrixXd m = (cr * cr.transpose()).cwiseProduct(g);
    kernels::hermitian_phi_grid(ts, m, nullptr, es.eigenvalues(), s.values);
  } else {
    const Eigen::MatrixXd re = (cr * cr.transpose() + ci * ci.transpose()).cwiseProduct(g);
    const Eigen::MatrixXd im = (cr * ci.transpose() - ci * cr.transpose()).cwiseProduct(g);
    kernels::hermitian_phi_grid(ts, re, &im, es.eigenvalues(), s.values);
  }
  s.quantity = Quantity::moment_q;
  s.operator_hash = es.source_hash();
  s.xi_label = xi_label;
  s.q = q;
  return s;
}

// ---------------------------------------------------------------------------
// measure continuity

LipschitzReport lipschitz_constant(const SpectralMeasure& mu, double ell_min) {
  if (ell_min <= 0) throw ValidationError("lipschitz_constant: ell_min must be positive");
  const auto n = mu.locations.size();
  if (n == 0) throw ValidationError("lipschitz_constant: empty measure");
  LipschitzReport rep;
  rep.ell_min = ell_min;
  rep.atoms = static_cast<int>(n);
  // Any maximizing interval can be shrunk to the tightest one containing a
  // contiguous run of atoms, clamped below by ell_min and above by length 1.
  for (Eigen::Index i = 0; i < n; ++i) {
    double mass = 0.0;
    for (Eigen::Index j = i; j < n; ++j) {
      const double span = mu.locations[j] - mu.locations[i];
      if (span > 1.0) break;
      mass += mu.weights[j];
      const double ell = std::max(span, ell_min);
      if (ell > 1.0) break;
      const double ratio = mass / ell;
      if (ratio > rep.constant) {
        rep.constant = ratio;
        rep.worst_left = mu.locations[i];
        rep.worst_length = ell;
      }
    }
  }
  return rep;
}

LastBoundReport last_bound_check(const CompactObservable& a, const EigenSystem& es,
                                 const Eigen::VectorXcd& xi, const std::vector<double>& ts,
                                 double ell_min) {
  if (ts.empty()) throw ValidationError("last_bound_check: empty grid");
  LastBoundReport rep;
  rep.t_max_valid = 1.0 / ell_min;
  rep.trace_norm = a.trace_norm();
  if (rep.trace_norm <= 0) throw ValidationError("last_bound_check: zero observable");

  std::vector<double> valid;
  for (double t : ts)
    if (t <= rep.t_max_valid) valid.push_back(t);
  rep.points_used = static_cast<int>(valid.size());
  rep.points_clipped = static_cast<int>(ts.size() - valid.size());
  if (valid.empty())
    throw InconclusiveError("last_bound_check: grid lies entirely past the resolution horizon");

  std::vector<double> vals;
  if (a.positive()) {
    vals = closed_series_values(a, es, xi, valid);
  } else {
    vals.reserve(valid.size());
    for (double t : valid) vals.push_back(time_average_quadrature(a, es, xi, t, 4096).value);
  }
  for (std::size_t i = 0; i < valid.size(); ++i)
    rep.c_empirical = std::max(rep.c_empirical, valid[i] * vals[i] / rep.trace_norm);

  rep.c_lipschitz = lipschitz_constant(spectral_measure(es, xi), ell_min).constant;
  rep.holds = rep.c_empirical <= 50.0 * rep.c_lipschitz;
  return rep;
}

}  // namespace ilab
