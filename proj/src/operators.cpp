#include "ilab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ilab/rng.hpp"

namespace ilab {

namespace {

constexpr double kHermTol = 1e-12;

void check_positive(int v, const char* what) {
  if (v < 1) throw ValidationError(std::string(what) + " must be >= 1");
}

nlohmann::json provenance_json(const Provenance& p) {
  nlohmann::json j;
  j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
  j["truncated_from"] = p.truncated_from ? nlohmann::json(*p.truncated_from) : nlohmann::json(nullptr);
  return j;
}

Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("truncated_from") && !j["truncated_from"].is_null())
    p.truncated_from = j["truncated_from"].get<int>();
  return p;
}

}  // namespace

void DenseHermitian::validate() const {
  if (entries.rows() != entries.cols() || entries.rows() < 1)
    throw ValidationError("DenseHermitian: entries must be square and nonempty");
  const double herm = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermTol)
    throw ValidationError("DenseHermitian: not conjugate-symmetric (deviation " +
                          std::to_string(herm) + ")");
  if (norm_cap <= 0) throw ValidationError("DenseHermitian: norm_cap must be positive");
  // spectral radius via the selfadjoint eigensolver; dims here are small
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(entries, Eigen::EigenvaluesOnly);
  const double radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > norm_cap + 1e-9)
    throw ValidationError("DenseHermitian: spectral radius " + std::to_string(radius) +
                          " exceeds cap " + std::to_string(norm_cap));
}

void JacobiOperator::validate() const {
  check_positive(half_width, "JacobiOperator: half_width");
  if (potential.size() != dim())
    throw ValidationError("JacobiOperator: potential must have 2N+1 entries");
  if (bound < 0) throw ValidationError("JacobiOperator: bound must be nonnegative");
  if (potential.size() > 0 && potential.cwiseAbs().maxCoeff() > bound + kHermTol)
    throw ValidationError("JacobiOperator: potential exceeds bound");
}

void ContinuumSchrodinger::validate() const {
  if (box_half_width <= 0) throw ValidationError("ContinuumSchrodinger: box_half_width must be positive");
  if (spacing <= 0) throw ValidationError("ContinuumSchrodinger: spacing must be positive");
  if (cap <= 0) throw ValidationError("ContinuumSchrodinger: cap must be positive");
  const int n = dim();
  if (n < 3) throw ValidationError("ContinuumSchrodinger: grid too small");
  const double L_back = x_of(n - 1);
  if (std::abs(L_back - box_half_width) > spacing / 2 + 1e-12)
    throw ValidationError("ContinuumSchrodinger: grid does not span [-L, L]");
  if (potential.cwiseAbs().maxCoeff() > cap + kHermTol)
    throw ValidationError("ContinuumSchrodinger: potential exceeds cap");
}

void AndersonSpec::validate() const {
  check_positive(half_width, "AndersonSpec: half_width");
  if (disorder_bound < 0) throw ValidationError("AndersonSpec: disorder_bound must be nonnegative");
  if (values.empty() != probabilities.empty())
    throw ValidationError("AndersonSpec: values and probabilities must come together");
  if (!values.empty()) {
    if (values.size() != probabilities.size())
      throw ValidationError("AndersonSpec: values/probabilities length mismatch");
    double total = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::abs(values[i]) > disorder_bound + kHermTol)
        throw ValidationError("AndersonSpec: support point outside [-b, b]");
      if (probabilities[i] < 0) throw ValidationError("AndersonSpec: negative probability");
      total += probabilities[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("AndersonSpec: probabilities must sum to 1");
  }
}

// ---------------------------------------------------------------------------

JacobiOperator build_free_laplacian(int half_width) {
  check_positive(half_width, "build_free_laplacian: half_width");
  JacobiOperator op;
  op.half_width = half_width;
  op.potential = Eigen::VectorXd::Zero(2 * half_width + 1);
  op.bound = 0.0;
  return op;
}

JacobiOperator sample_anderson(const AndersonSpec& spec) {
  return sample_anderson(spec, 0);
}

JacobiOperator sample_anderson(const AndersonSpec& spec, std::uint64_t realization_index) {
  spec.validate();
  SplitMix64 gen(substream_seed(spec.seed, realization_index));
  JacobiOperator op;
  op.half_width = spec.half_width;
  op.bound = spec.disorder_bound;
  op.potential.resize(op.dim());
  if (spec.values.empty()) {
    for (int i = 0; i < op.dim(); ++i)
      op.potential[i] = gen.uniform(-spec.disorder_bound, spec.disorder_bound);
  } else {
    std::vector<double> cum(spec.probabilities.size());
    double acc = 0;
    for (std::size_t i = 0; i < cum.size(); ++i) {
      acc += spec.probabilities[i];
      cum[i] = acc;
    }
    cum.back() = 1.0;
    for (int i = 0; i < op.dim(); ++i) {
      const double u = gen.uniform01();
      const auto it = std::upper_bound(cum.begin(), cum.end(), u);
      op.potential[i] = spec.values[std::min<std::size_t>(it - cum.begin(), cum.size() - 1)];
    }
  }
  op.provenance.seed = substream_seed(spec.seed, realization_index);
  return op;
}

Eigen::VectorXd vk_potential(const Eigen::VectorXd& V, double cap, int k,
                             const Eigen::VectorXd& x) {
  if (k < 1) throw ValidationError("vk_potential: k must be >= 1");
  if (cap <= 0) throw ValidationError("vk_potential: cap must be positive");
  if (V.size() != x.size()) throw ValidationError("vk_potential: V and grid size mismatch");
  if (V.size() > 0 && V.cwiseAbs().maxCoeff() > cap + kHermTol)
    throw ValidationError("vk_potential: |V| exceeds cap");
  const double shrink = static_cast<double>(k) / (k + 1);
  Eigen::VectorXd out(V.size());
  for (Eigen::Index i = 0; i < V.size(); ++i) {
    const double ax = std::abs(x[i]);
    const double inside = ax < k ? shrink * V[i] : 0.0;
    out[i] = inside - cap / ((k + 1) * (ax + 1.0));
  }
  return out;
}

ContinuumSchrodinger with_vk_potential(const ContinuumSchrodinger& base, int k) {
  base.validate();
  Eigen::VectorXd x(base.dim());
  for (int i = 0; i < base.dim(); ++i) x[i] = base.x_of(i);
  ContinuumSchrodinger out = base;
  out.potential = vk_potential(base.potential, base.cap, k, x);
  return out;
}

ContinuumSchrodinger make_continuum(double box_half_width, double spacing,
                                    const Eigen::VectorXd& potential, double cap) {
  ContinuumSchrodinger op;
  op.box_half_width = box_half_width;
  op.spacing = spacing;
  op.potential = potential;
  op.cap = cap;
  op.validate();
  return op;
}

JacobiOperator truncate(const JacobiOperator& op, int new_half_width) {
  if (new_half_width > op.half_width)
    throw ValidationError("truncate: new size exceeds current");
  if (new_half_width == op.half_width) return op;
  JacobiOperator out;
  out.half_width = new_half_width;
  out.bound = op.bound;
  const int shift = op.half_width - new_half_width;
  out.potential = op.potential.segment(shift, 2 * new_half_width + 1);
  out.provenance = op.provenance;
  out.provenance.truncated_from = op.half_width;
  return out;
}

ContinuumSchrodinger truncate(const ContinuumSchrodinger& op, double new_half_width) {
  if (new_half_width > op.box_half_width + 1e-12)
    throw ValidationError("truncate: new size exceeds current");
  // keep the grid points with |x| <= L'; snap L' to the grid
  const int keep = static_cast<int>(std::floor(new_half_width / op.spacing + 1e-9));
  const int center = (op.dim() - 1) / 2;
  const int n = 2 * keep + 1;
  if (n > op.dim()) return op;
  ContinuumSchrodinger out;
  out.box_half_width = keep * op.spacing;
  out.spacing = op.spacing;
  out.cap = op.cap;
  out.potential = op.potential.segment(center - keep, n);
  out.provenance = op.provenance;
  out.provenance.truncated_from = op.dim();
  return out;
}

// ---------------------------------------------------------------------------

MetricResult metric_xa(const DenseHermitian& a, const DenseHermitian& b, int basis_order) {
  if (a.dim() != b.dim()) throw ValidationError("metric_xa: dimension mismatch");
  if (basis_order < 1 || basis_order > a.dim())
    throw ValidationError("metric_xa: basis_order must be in [1, dim]");
  const Eigen::MatrixXcd diff = a.entries - b.entries;
  double sum = 0.0;
  for (int j = 0; j < basis_order; ++j)
    sum += std::min(std::pow(2.0, -j), diff.col(j).norm());
  return {sum, std::pow(2.0, -(basis_order - 1))};
}

double metric_xb(const Eigen::VectorXd& v, const Eigen::VectorXd& u) {
  if (v.size() != u.size() || v.size() % 2 == 0)
    throw ValidationError("metric_xb: windows must match and have odd length");
  const int half = static_cast<int>(v.size()) / 2;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const int j = static_cast<int>(i) - half;
    sum += std::pow(2.0, -std::abs(j)) * std::min(1.0, std::abs(v[i] - u[i]));
  }
  return sum;
}

double metric_xb(const JacobiOperator& a, const JacobiOperator& b) {
  if (a.half_width != b.half_width) throw ValidationError("metric_xb: window mismatch");
  return metric_xb(a.potential, b.potential);
}

MetricResult metric_xc(const ContinuumSchrodinger& a, const ContinuumSchrodinger& b,
                       int j_max) {
  if (a.dim() != b.dim() || std::abs(a.spacing - b.spacing) > 1e-12 ||
      std::abs(a.box_half_width - b.box_half_width) > 1e-12)
    throw ValidationError("metric_xc: operators must share the grid");
  if (j_max < 0) throw ValidationError("metric_xc: j_max must be >= 0");
  if (a.box_half_width + 1e-12 < j_max)
    throw ValidationError("metric_xc: grid does not cover B(0, j_max)");
  // seminorm over B(0,0) is a sup over the empty set, hence 0
  double sum = 0.0;
  for (int j = 1; j <= j_max; ++j) {
    double sup = 0.0;
    for (int i = 0; i < a.dim(); ++i)
      if (std::abs(a.x_of(i)) < j)
        sup = std::max(sup, std::abs(a.potential[i] - b.potential[i]));
    sum += std::min(std::pow(2.0, -j), sup);
  }
  return {sum, std::pow(2.0, -j_max)};
}

// ---------------------------------------------------------------------------

SymTridiagonal tridiagonal_of(const JacobiOperator& op) {
  SymTridiagonal t;
  t.diag = op.potential;
  t.off = Eigen::VectorXd::Ones(op.dim() - 1);
  return t;
}

SymTridiagonal tridiagonal_of(const ContinuumSchrodinger& op) {
  const double inv_h2 = 1.0 / (op.spacing * op.spacing);
  SymTridiagonal t;
  t.diag = op.potential.array() + 2.0 * inv_h2;
  t.off = Eigen::VectorXd::Constant(op.dim() - 1, -inv_h2);
  return t;
}

nlohmann::json to_json(const JacobiOperator& op) {
  nlohmann::json j;
  j["kind"] = "jacobi";
  j["half_width"] = op.half_width;
  j["bound"] = op.bound;
  j["potential"] = std::vector<double>(op.potential.data(), op.potential.data() + op.potential.size());
  j["provenance"] = provenance_json(op.provenance);
  return j;
}

nlohmann::json to_json(const ContinuumSchrodinger& op) {
  nlohmann::json j;
  j["kind"] = "continuum";
  j["box_half_width"] = op.box_half_width;
  j["spacing"] = op.spacing;
  j["cap"] = op.cap;
  j["potential"] = std::vector<double>(op.potential.data(), op.potential.data() + op.potential.size());
  j["provenance"] = provenance_json(op.provenance);
  return j;
}

nlohmann::json to_json(const DenseHermitian& op) {
  nlohmann::json j;
  j["kind"] = "dense_hermitian";
  j["dim"] = op.dim();
  j["norm_cap"] = op.norm_cap;
  std::vector<std::array<double, 2>> entries;
  entries.reserve(static_cast<std::size_t>(op.dim()) * op.dim());
  for (int r = 0; r < op.dim(); ++r)
    for (int c = 0; c < op.dim(); ++c)
      entries.push_back({op.entries(r, c).real(), op.entries(r, c).imag()});
  j["entries"] = entries;
  j["provenance"] = provenance_json(op.provenance);
  return j;
}

nlohmann::json to_json(const OperatorVariant& op) {
  return std::visit([](const auto& o) { return to_json(o); }, op);
}

OperatorVariant operator_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "jacobi") {
    JacobiOperator op;
    op.half_width = j.at("half_width").get<int>();
    const auto pot = j.at("potential").get<std::vector<double>>();
    op.potential = Eigen::Map<const Eigen::VectorXd>(pot.data(), pot.size());
    op.bound = j.at("bound").get<double>();
    if (j.contains("provenance")) op.provenance = provenance_from_json(j["provenance"]);
    op.validate();
    return op;
  }
  if (kind == "continuum") {
    ContinuumSchrodinger op;
    op.box_half_width = j.at("box_half_width").get<double>();
    op.spacing = j.at("spacing").get<double>();
    op.cap = j.at("cap").get<double>();
    const auto pot = j.at("potential").get<std::vector<double>>();
    op.potential = Eigen::Map<const Eigen::VectorXd>(pot.data(), pot.size());
    if (j.contains("provenance")) op.provenance = provenance_from_json(j["provenance"]);
    op.validate();
    return op;
  }
  if (kind == "dense_hermitian") {
    const int n = j.at("dim").get<int>();
    const auto entries = j.at("entries").get<std::vector<std::array<double, 2>>>();
    if (static_cast<int>(entries.size()) != n * n)
      throw ValidationError("dense_hermitian: entries length != dim^2");
    DenseHermitian op;
    op.norm_cap = j.at("norm_cap").get<double>();
    op.entries.resize(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const auto& e = entries[static_cast<std::size_t>(r) * n + c];
        op.entries(r, c) = cplx(e[0], e[1]);
      }
    if (j.contains("provenance")) op.provenance = provenance_from_json(j["provenance"]);
    op.validate();
    return op;
  }
  throw ValidationError("unknown operator kind '" + kind + "'");
}

OperatorVariant load_operator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open operator file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad operator JSON in '" + path + "': " + e.what());
  }
  return operator_from_json(j);
}

void save_operator(const OperatorVariant& op, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write operator file '" + path + "'");
  out << to_json(op).dump(2) << '\n';
}

std::uint64_t operator_hash(const OperatorVariant& op) {
  return fnv1a(to_json(op).dump());
}

std::string operator_kind(const OperatorVariant& op) {
  return to_json(op)["kind"].get<std::string>();
}

}  // namespace ilab
