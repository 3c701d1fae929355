#include "ilab/eigensystem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "ilab/kernels.hpp"

namespace ilab {

namespace {

// MRRR first (uniformly fast here), divide & conquer as fallback.
void tridiag_eig(Eigen::VectorXd diag, Eigen::VectorXd off, Eigen::VectorXd& w,
                 Eigen::MatrixXd& z) {
  const auto n = static_cast<lapack_int>(diag.size());
  w.resize(n);
  z.resize(n, n);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  lapack_int m = 0;
  Eigen::VectorXd d = diag, e = off;
  lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', n, d.data(), e.data(),
                                   0.0, 0.0, 0, 0, 0.0, &m, w.data(), z.data(), n,
                                   isuppz.data());
  if (info == 0 && m == n) return;
  d = diag;
  e = off;
  info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, d.data(), e.data(), z.data(), n);
  if (info != 0) throw std::runtime_error("tridiagonal eigensolver failed, info=" + std::to_string(info));
  w = d;
}

void apply_tridiag(const SymTridiagonal& t, const Eigen::MatrixXd& x, Eigen::MatrixXd& out) {
  const auto n = t.diag.size();
  out = t.diag.asDiagonal() * x;
  out.topRows(n - 1) += t.off.asDiagonal() * x.bottomRows(n - 1);
  out.bottomRows(n - 1) += t.off.asDiagonal() * x.topRows(n - 1);
}

Eigen::VectorXcd tridiag_resolvent(const SymTridiagonal& t, cplx z, const Eigen::VectorXcd& u) {
  if (z.imag() == 0.0) throw ValidationError("resolvent_apply: Im z must be nonzero");
  const auto n = static_cast<lapack_int>(t.diag.size());
  if (u.size() != n) throw ValidationError("resolvent_apply: dimension mismatch");
  Eigen::VectorXcd d = (t.diag.array() - z).matrix().cast<cplx>();
  Eigen::VectorXcd dl = t.off.cast<cplx>();
  Eigen::VectorXcd du = t.off.cast<cplx>();
  Eigen::VectorXcd w = u;
  const lapack_int info = LAPACKE_zgtsv(LAPACK_COL_MAJOR, n, 1, dl.data(), d.data(),
                                        du.data(), w.data(), n);
  if (info != 0) throw std::runtime_error("zgtsv failed, info=" + std::to_string(info));
  return w;
}

}  // namespace

EigenSystem EigenSystem::from_tridiagonal(const SymTridiagonal& t, SourceBasis basis,
                                          std::uint64_t source_hash) {
  if (t.diag.size() < 1 || t.off.size() != t.diag.size() - 1)
    throw ValidationError("EigenSystem: malformed tridiagonal");
  EigenSystem es;
  tridiag_eig(t.diag, t.off, es.eigenvalues_, es.vec_real_);
  es.is_real_ = true;
  es.basis_ = basis;
  es.source_hash_ = source_hash;
  return es;
}

EigenSystem EigenSystem::from_dense(const Eigen::MatrixXcd& h, std::uint64_t source_hash) {
  if (h.rows() != h.cols() || h.rows() < 1)
    throw ValidationError("EigenSystem: matrix must be square");
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw ValidationError("EigenSystem: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("dense eigensolver did not converge");
  EigenSystem es;
  es.eigenvalues_ = solver.eigenvalues();
  es.vec_cplx_ = solver.eigenvectors();
  es.is_real_ = false;
  es.basis_ = SourceBasis::abstract;
  es.source_hash_ = source_hash;
  return es;
}

int EigenSystem::half_width() const {
  if (basis_ != SourceBasis::lattice_sites) return -1;
  return (dim() - 1) / 2;
}

Eigen::VectorXcd EigenSystem::coefficients(const Eigen::VectorXcd& xi) const {
  if (xi.size() != dim()) throw ValidationError("coefficients: dimension mismatch");
  if (is_real_) {
    const Eigen::VectorXd re = vec_real_.transpose() * xi.real();
    const Eigen::VectorXd im = vec_real_.transpose() * xi.imag();
    return re + cplx(0, 1) * im;
  }
  return vec_cplx_.adjoint() * xi;
}

Eigen::VectorXcd EigenSystem::synthesize(const Eigen::VectorXcd& coeff) const {
  if (coeff.size() != dim()) throw ValidationError("synthesize: dimension mismatch");
  if (is_real_) {
    const Eigen::VectorXd re = vec_real_ * coeff.real();
    const Eigen::VectorXd im = vec_real_ * coeff.imag();
    return re + cplx(0, 1) * im;
  }
  return vec_cplx_ * coeff;
}

Eigen::VectorXcd EigenSystem::eigenvector(int k) const {
  if (k < 0 || k >= dim()) throw ValidationError("eigenvector: index out of range");
  if (is_real_) return vec_real_.col(k).cast<cplx>();
  return vec_cplx_.col(k);
}

const Eigen::MatrixXd& EigenSystem::vectors_real() const {
  if (!is_real_) throw std::logic_error("EigenSystem: no real vectors for a complex source");
  return vec_real_;
}

const Eigen::MatrixXcd& EigenSystem::vectors_complex() const {
  if (is_real_) throw std::logic_error("EigenSystem: source is real, use vectors_real");
  return vec_cplx_;
}

double EigenSystem::max_gram_deviation() const {
  const int n = dim();
  if (is_real_) {
    Eigen::MatrixXd g = vec_real_.transpose() * vec_real_;
    g.diagonal().array() -= 1.0;
    return g.cwiseAbs().maxCoeff();
  }
  Eigen::MatrixXcd g = vec_cplx_.adjoint() * vec_cplx_;
  g.diagonal().array() -= 1.0;
  (void)n;
  return g.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// cache: little-endian raw doubles behind a small header

namespace {
constexpr char kCacheMagic[8] = {'I', 'L', 'A', 'B', 'E', 'I', 'G', '1'};
}

void EigenSystem::save_cache(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cache file " + tmp);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    const std::uint8_t little_endian = 1;
    out.write(reinterpret_cast<const char*>(&little_endian), 1);
    const std::uint8_t real_flag = is_real_ ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&real_flag), 1);
    const std::int32_t basis = static_cast<std::int32_t>(basis_);
    out.write(reinterpret_cast<const char*>(&basis), sizeof(basis));
    const std::int64_t n = dim();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&source_hash_), sizeof(source_hash_));
    out.write(reinterpret_cast<const char*>(eigenvalues_.data()), n * sizeof(double));
    if (is_real_)
      out.write(reinterpret_cast<const char*>(vec_real_.data()), n * n * sizeof(double));
    else
      out.write(reinterpret_cast<const char*>(vec_cplx_.data()), n * n * sizeof(cplx));
    if (!out) throw std::runtime_error("short write to cache file " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move cache file into place: " + path);
}

EigenSystem EigenSystem::load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cache file " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
    throw std::runtime_error("bad cache header in " + path);
  std::uint8_t little_endian = 0, real_flag = 0;
  in.read(reinterpret_cast<char*>(&little_endian), 1);
  in.read(reinterpret_cast<char*>(&real_flag), 1);
  if (little_endian != 1) throw std::runtime_error("cache endianness mismatch in " + path);
  std::int32_t basis = 0;
  std::int64_t n = 0;
  in.read(reinterpret_cast<char*>(&basis), sizeof(basis));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  EigenSystem es;
  in.read(reinterpret_cast<char*>(&es.source_hash_), sizeof(es.source_hash_));
  if (n < 1) throw std::runtime_error("bad cache dimension in " + path);
  es.eigenvalues_.resize(n);
  in.read(reinterpret_cast<char*>(es.eigenvalues_.data()), n * sizeof(double));
  es.is_real_ = real_flag == 1;
  es.basis_ = static_cast<SourceBasis>(basis);
  if (es.is_real_) {
    es.vec_real_.resize(n, n);
    in.read(reinterpret_cast<char*>(es.vec_real_.data()), n * n * sizeof(double));
  } else {
    es.vec_cplx_.resize(n, n);
    in.read(reinterpret_cast<char*>(es.vec_cplx_.data()), n * n * sizeof(cplx));
  }
  if (!in) throw std::runtime_error("truncated cache file " + path);
  return es;
}

// ---------------------------------------------------------------------------

EigenSystem eigendecompose(const JacobiOperator& op) {
  op.validate();
  return EigenSystem::from_tridiagonal(tridiagonal_of(op), SourceBasis::lattice_sites,
                                       operator_hash(op));
}

EigenSystem eigendecompose(const ContinuumSchrodinger& op) {
  op.validate();
  return EigenSystem::from_tridiagonal(tridiagonal_of(op), SourceBasis::grid_points,
                                       operator_hash(op));
}

EigenSystem eigendecompose(const DenseHermitian& op) {
  op.validate();
  return EigenSystem::from_dense(op.entries, operator_hash(op));
}

EigenSystem eigendecompose(const OperatorVariant& op) {
  return std::visit([](const auto& o) { return eigendecompose(o); }, op);
}

double max_eigen_residual(const SymTridiagonal& t, const EigenSystem& es) {
  Eigen::MatrixXd hpsi;
  apply_tridiag(t, es.vectors_real(), hpsi);
  hpsi -= es.vectors_real() * es.eigenvalues().asDiagonal();
  return hpsi.colwise().norm().maxCoeff();
}

double max_eigen_residual(const Eigen::MatrixXcd& h, const EigenSystem& es) {
  Eigen::MatrixXcd hpsi = h * es.vectors_complex();
  hpsi -= es.vectors_complex() * es.eigenvalues().asDiagonal();
  return hpsi.colwise().norm().maxCoeff();
}

Eigen::VectorXcd evolve(const EigenSystem& es, const Eigen::VectorXcd& xi, double t) {
  Eigen::VectorXcd c = es.coefficients(xi);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const double ph = -t * es.eigenvalues()[k];
    c[k] *= cplx(std::cos(ph), std::sin(ph));
  }
  return es.synthesize(c);
}

double SpectralMeasure::wiener_limit() const {
  double sum = 0.0;
  for (const auto& [first, last] : degeneracy_groups) {
    double mass = 0.0;
    for (int k = first; k <= last; ++k) mass += weights[k];
    sum += mass * mass;
  }
  return sum;
}

double SpectralMeasure::mass_near(double lambda, double tol) const {
  double mass = 0.0;
  for (Eigen::Index k = 0; k < locations.size(); ++k)
    if (std::abs(locations[k] - lambda) <= tol) mass += weights[k];
  return mass;
}

SpectralMeasure spectral_measure(const EigenSystem& es, const Eigen::VectorXcd& xi,
                                 double gap_tol) {
  const Eigen::VectorXcd c = es.coefficients(xi);
  SpectralMeasure mu;
  mu.locations = es.eigenvalues();
  mu.weights = c.cwiseAbs2();
  int start = 0;
  for (int k = 1; k <= es.dim(); ++k) {
    if (k == es.dim() || mu.locations[k] - mu.locations[k - 1] > gap_tol) {
      mu.degeneracy_groups.emplace_back(start, k - 1);
      start = k;
    }
  }
  return mu;
}

Eigen::VectorXd eigenvalues_only(const SymTridiagonal& t) {
  Eigen::VectorXd d = t.diag, e = t.off;
  const auto n = static_cast<lapack_int>(d.size());
  const lapack_int info = LAPACKE_dsterf(n, d.data(), e.data());
  if (info != 0) throw std::runtime_error("dsterf failed, info=" + std::to_string(info));
  return d;
}

Eigen::VectorXd eigenvalues_only(const JacobiOperator& op) {
  op.validate();
  return eigenvalues_only(tridiagonal_of(op));
}

Eigen::VectorXd eigenvalues_only(const ContinuumSchrodinger& op) {
  op.validate();
  return eigenvalues_only(tridiagonal_of(op));
}

SpectralMeasure central_spectral_measure(const JacobiOperator& op) {
  op.validate();
  const int n = op.half_width;
  bool symmetric = true;
  for (int j = 1; j <= n && symmetric; ++j)
    symmetric = op.potential[op.index_of(j)] == op.potential[op.index_of(-j)];
  if (!symmetric) {
    const EigenSystem es = eigendecompose(op);
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(op.dim());
    e0[op.index_of(0)] = 1.0;
    return spectral_measure(es, e0);
  }
  // even sector in the basis f_0 = e_0, f_j = (e_j + e_{-j})/sqrt(2):
  // half-chain with hopping sqrt(2) on the first link, 1 elsewhere
  SymTridiagonal t;
  t.diag = op.potential.segment(op.index_of(0), n + 1);
  t.off = Eigen::VectorXd::Ones(n);
  t.off[0] = std::sqrt(2.0);
  const EigenSystem es = EigenSystem::from_tridiagonal(t, SourceBasis::abstract,
                                                       operator_hash(op));
  Eigen::VectorXcd f0 = Eigen::VectorXcd::Zero(n + 1);
  f0[0] = 1.0;
  return spectral_measure(es, f0);
}

Eigen::VectorXcd resolvent_apply(const JacobiOperator& op, cplx z, const Eigen::VectorXcd& u) {
  return tridiag_resolvent(tridiagonal_of(op), z, u);
}

Eigen::VectorXcd resolvent_apply(const ContinuumSchrodinger& op, cplx z,
                                 const Eigen::VectorXcd& u) {
  return tridiag_resolvent(tridiagonal_of(op), z, u);
}

Eigen::VectorXcd resolvent_apply(const DenseHermitian& op, cplx z, const Eigen::VectorXcd& u) {
  if (z.imag() == 0.0) throw ValidationError("resolvent_apply: Im z must be nonzero");
  if (u.size() != op.dim()) throw ValidationError("resolvent_apply: dimension mismatch");
  Eigen::MatrixXcd shifted = op.entries;
  shifted.diagonal().array() -= z;
  return shifted.partialPivLu().solve(u);
}

double horizon(int half_width, int support_radius, double safety) {
  if (safety <= 0.0 || safety >= 1.0) throw ValidationError("horizon: safety must be in (0,1)");
  if (support_radius < 0 || support_radius >= half_width)
    throw ValidationError("horizon: need 0 <= r0 < N");
  return safety * (half_width - support_radius) / 2.0;
}

double mass_beyond(const Eigen::VectorXcd& xi, int half_width, int radius) {
  double mass = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    const int site = static_cast<int>(i) - half_width;
    if (std::abs(site) > radius) mass += std::norm(xi[i]);
  }
  return mass;
}

std::vector<SrSdRow> sr_sd_check(const std::vector<JacobiOperator>& ladder,
                                 const JacobiOperator& limit,
                                 const Eigen::VectorXcd& u, double t) {
  if (u.size() != limit.dim()) throw ValidationError("sr_sd_check: state/limit dimension mismatch");
  const cplx z(0.0, 1.0);
  const Eigen::VectorXcd ref_res = resolvent_apply(limit, z, u);
  const EigenSystem ref_es = eigendecompose(limit);
  const Eigen::VectorXcd ref_dyn = evolve(ref_es, u, t);

  std::vector<SrSdRow> rows;
  rows.reserve(ladder.size());
  for (const auto& op : ladder) {
    if (op.half_width > limit.half_width)
      throw ValidationError("sr_sd_check: ladder member larger than the limit");
    const int lo = limit.half_width - op.half_width;
    const int n = op.dim();
    const Eigen::VectorXcd u_in = u.segment(lo, n);

    // padded operator T_n (+) 0: trivial action outside the window
    Eigen::VectorXcd res = -u / z;
    res.segment(lo, n) = resolvent_apply(op, z, u_in);

    Eigen::VectorXcd dyn = u;
    const EigenSystem es = eigendecompose(op);
    dyn.segment(lo, n) = evolve(es, u_in, t);

    rows.push_back({op.half_width, (res - ref_res).norm(), (dyn - ref_dyn).norm()});
  }
  return rows;
}

}  // namespace ilab
