#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ilab/common.hpp"
#include "ilab/operators.hpp"

namespace ilab {

enum class SourceBasis { lattice_sites, grid_points, abstract };

// Full spectral decomposition of a finite self-adjoint operator. Immutable
// after construction; propagation and spectral measures are derived from it.
class EigenSystem {
 public:
  static EigenSystem from_tridiagonal(const SymTridiagonal& t, SourceBasis basis,
                                      std::uint64_t source_hash);
  static EigenSystem from_dense(const Eigen::MatrixXcd& h, std::uint64_t source_hash);

  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  bool real_vectors() const { return is_real_; }
  SourceBasis basis() const { return basis_; }
  std::uint64_t source_hash() const { return source_hash_; }

  // half-width N when the source is a lattice operator (site = index - N)
  int half_width() const;

  // coefficients c_k = <psi_k, xi>
  Eigen::VectorXcd coefficients(const Eigen::VectorXcd& xi) const;
  // sum_k c_k psi_k
  Eigen::VectorXcd synthesize(const Eigen::VectorXcd& coeff) const;
  Eigen::VectorXcd eigenvector(int k) const;

  const Eigen::MatrixXd& vectors_real() const;
  const Eigen::MatrixXcd& vectors_complex() const;

  double max_gram_deviation() const;  // || Psi* Psi - I ||_max

  // Disk cache, little-endian raw doubles; an optimization only.
  void save_cache(const std::string& path) const;
  static EigenSystem load_cache(const std::string& path);

 private:
  EigenSystem() = default;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd vec_real_;
  Eigen::MatrixXcd vec_cplx_;
  bool is_real_ = true;
  SourceBasis basis_ = SourceBasis::abstract;
  std::uint64_t source_hash_ = 0;
};

EigenSystem eigendecompose(const JacobiOperator& op);
EigenSystem eigendecompose(const ContinuumSchrodinger& op);
EigenSystem eigendecompose(const DenseHermitian& op);
EigenSystem eigendecompose(const OperatorVariant& op);

// Eigenvalues without vectors (much cheaper; spectrum scans, ground energies).
Eigen::VectorXd eigenvalues_only(const SymTridiagonal& t);
Eigen::VectorXd eigenvalues_only(const JacobiOperator& op);
Eigen::VectorXd eigenvalues_only(const ContinuumSchrodinger& op);

// || H psi_k - lambda_k psi_k || maximized over k, for the residual invariant.
double max_eigen_residual(const SymTridiagonal& t, const EigenSystem& es);
double max_eigen_residual(const Eigen::MatrixXcd& h, const EigenSystem& es);

// xi(t) = sum_k e^{-i t lambda_k} <psi_k, xi> psi_k
Eigen::VectorXcd evolve(const EigenSystem& es, const Eigen::VectorXcd& xi, double t);

// Atomic spectral measure of xi against the operator, atoms grouped by a
// degeneracy gap tolerance (needed for the large-time Wiener limits).
struct SpectralMeasure {
  Eigen::VectorXd locations;  // ascending
  Eigen::VectorXd weights;    // |<psi_k, xi>|^2
  std::vector<std::pair<int, int>> degeneracy_groups;  // inclusive index ranges

  double total() const { return weights.sum(); }
  double wiener_limit() const;                 // sum over groups of (group mass)^2
  double mass_near(double lambda, double tol) const;
};

SpectralMeasure spectral_measure(const EigenSystem& es, const Eigen::VectorXcd& xi,
                                 double gap_tol = 1e-10);

// Spectral measure of the center site e_0. For a reflection-symmetric
// potential e_0 lives entirely in the even-parity sector, whose folded
// half-chain has dimension N+1; this halves the eigensolve. Falls back to
// the full decomposition otherwise.
SpectralMeasure central_spectral_measure(const JacobiOperator& op);

// Solves (H - z) w = u for Im z != 0.
Eigen::VectorXcd resolvent_apply(const JacobiOperator& op, cplx z, const Eigen::VectorXcd& u);
Eigen::VectorXcd resolvent_apply(const ContinuumSchrodinger& op, cplx z, const Eigen::VectorXcd& u);
Eigen::VectorXcd resolvent_apply(const DenseHermitian& op, cplx z, const Eigen::VectorXcd& u);

// Largest time the central window is trusted: safety * (N - r0) / 2, from the
// ballistic bound (group speed 2) for unit-hopping lattice operators.
double horizon(int half_width, int support_radius, double safety);

// Mass of xi outside |site| > radius; cheap a-posteriori leakage check.
double mass_beyond(const Eigen::VectorXcd& xi, int half_width, int radius);

// Strong-resolvent vs strong-dynamical convergence table for a truncation
// ladder against a reference operator. Smaller truncations are embedded by
// zero padding (T_n (+) 0 on the complement of the window).
struct SrSdRow {
  int half_width = 0;
  double resolvent_error = 0.0;
  double dynamical_error = 0.0;
};

std::vector<SrSdRow> sr_sd_check(const std::vector<JacobiOperator>& ladder,
                                 const JacobiOperator& limit,
                                 const Eigen::VectorXcd& u, double t);

}  // namespace ilab
