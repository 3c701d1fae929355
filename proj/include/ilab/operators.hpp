#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ilab/common.hpp"

namespace ilab {

struct Provenance {
  std::optional<std::uint64_t> seed;
  std::optional<int> truncated_from;
};

// Dense self-adjoint block with an operator-norm cap.
struct DenseHermitian {
  Eigen::MatrixXcd entries;
  double norm_cap = 1.0;
  Provenance provenance;

  int dim() const { return static_cast<int>(entries.rows()); }
  // Hermiticity to 1e-12 and spectral radius <= norm_cap + 1e-9.
  void validate() const;
};

// Discrete Schrodinger operator on sites -N..N: unit hopping plus a bounded
// diagonal potential, Dirichlet truncation.
struct JacobiOperator {
  int half_width = 0;
  Eigen::VectorXd potential;  // v_{-N} .. v_N
  double bound = 0.0;         // |v_j| <= bound
  bool dirichlet = true;
  Provenance provenance;

  int dim() const { return 2 * half_width + 1; }
  int site_of(int index) const { return index - half_width; }
  int index_of(int site) const { return site + half_width; }
  void validate() const;
};

// -u'' + V u on [-L, L], uniform grid, 3-point Laplacian, Dirichlet ends.
struct ContinuumSchrodinger {
  double box_half_width = 0.0;  // L
  double spacing = 0.0;         // h
  Eigen::VectorXd potential;    // V(x_i), x_i = -L + i h
  double cap = 0.0;             // |V| <= cap
  Provenance provenance;

  int dim() const { return static_cast<int>(potential.size()); }
  double x_of(int index) const { return -box_half_width + index * spacing; }
  void validate() const;
};

// i.i.d. diagonal disorder. Empty `values` means uniform on [-b, b];
// otherwise a finite-support distribution with the given probabilities.
struct AndersonSpec {
  int half_width = 0;
  double disorder_bound = 0.0;
  std::vector<double> values;
  std::vector<double> probabilities;
  std::uint64_t seed = 0;

  void validate() const;
};

using OperatorVariant = std::variant<JacobiOperator, ContinuumSchrodinger, DenseHermitian>;

// ---------------------------------------------------------------------------
// constructors

JacobiOperator build_free_laplacian(int half_width);

JacobiOperator sample_anderson(const AndersonSpec& spec);
// Realization `index` of the ensemble keyed by spec.seed.
JacobiOperator sample_anderson(const AndersonSpec& spec, std::uint64_t realization_index);

// V_k(x) = k/(k+1) * 1_{|x|<k} V(x) - C / ((k+1)(|x|+1)), evaluated on `x`.
Eigen::VectorXd vk_potential(const Eigen::VectorXd& V, double cap, int k,
                             const Eigen::VectorXd& x);
// Same, applied to an existing continuum operator.
ContinuumSchrodinger with_vk_potential(const ContinuumSchrodinger& base, int k);

ContinuumSchrodinger make_continuum(double box_half_width, double spacing,
                                    const Eigen::VectorXd& potential, double cap);

// Central-window truncation (Dirichlet); truncation provenance is recorded.
JacobiOperator truncate(const JacobiOperator& op, int new_half_width);
ContinuumSchrodinger truncate(const ContinuumSchrodinger& op, double new_half_width);

// ---------------------------------------------------------------------------
// operator-space metrics

struct MetricResult {
  double value = 0.0;
  double tail_bound = 0.0;  // analytic bound on the truncated series tail
};

// d(T,T') = sum_j min(2^-j, ||(T-T') e_j||), truncated at basis_order terms.
MetricResult metric_xa(const DenseHermitian& a, const DenseHermitian& b, int basis_order);

// Product metric for pointwise convergence of potentials on sites -N..N:
// sum_j 2^{-|j|} min(1, |v_j - u_j|). Inputs must share the window.
double metric_xb(const Eigen::VectorXd& v, const Eigen::VectorXd& u);
double metric_xb(const JacobiOperator& a, const JacobiOperator& b);

// sum_{j=0..j_max} min(2^-j, sup_{|x|<j} |V-U|), plus tail bound 2^-j_max.
MetricResult metric_xc(const ContinuumSchrodinger& a, const ContinuumSchrodinger& b,
                       int j_max);

// ---------------------------------------------------------------------------
// tridiagonal form and serialization

struct SymTridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;
};

SymTridiagonal tridiagonal_of(const JacobiOperator& op);
SymTridiagonal tridiagonal_of(const ContinuumSchrodinger& op);

nlohmann::json to_json(const JacobiOperator& op);
nlohmann::json to_json(const ContinuumSchrodinger& op);
nlohmann::json to_json(const DenseHermitian& op);
nlohmann::json to_json(const OperatorVariant& op);

OperatorVariant operator_from_json(const nlohmann::json& j);
OperatorVariant load_operator(const std::string& path);
void save_operator(const OperatorVariant& op, const std::string& path);

std::uint64_t operator_hash(const OperatorVariant& op);
std::string operator_kind(const OperatorVariant& op);

}  // namespace ilab
