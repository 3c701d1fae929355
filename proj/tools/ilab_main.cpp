// Command-line front end: forge | evolve | observe | exponents | experiment | report.
// Messages go to stderr; data goes to files or stdout. Exit codes: 0 ok,
// 2 validation error, 3 inconclusive experiment, 1 internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "ilab/eigensystem.hpp"
#include "ilab/experiments.hpp"
#include "ilab/kernels.hpp"
#include "ilab/observables.hpp"
#include "ilab/operators.hpp"
#include "ilab/scaling.hpp"

using namespace ilab;

namespace {

struct CommonState {
  int threads = 0;
};

void apply_threads(const CommonState& s) {
  if (s.threads > 0) {
    kernels::set_thread_count(s.threads);
  } else if (const char* env = std::getenv("INTERMITTENCY_LAB_THREADS")) {
    try {
      kernels::set_thread_count(std::stoi(env));
    } catch (const std::exception&) {
      throw ValidationError("INTERMITTENCY_LAB_THREADS must be an integer");
    }
  }
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  return j;
}

// flags override file values: only fill in options the user did not pass
void merge_file_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  const nlohmann::json j = load_json_file(path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + it.key());
    if (!opt) throw ValidationError("config file key '" + it.key() + "' matches no flag");
    if (opt->count() > 0) continue;
    const std::string v =
        it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    opt->add_result(v);
    opt->run_callback();
  }
}

OperatorVariant resolve_operator(const std::string& spec, int size, double bound,
                                 std::uint64_t seed, const std::string& dist) {
  if (spec == "free") {
    if (size < 1) throw ValidationError("--size is required for --operator free");
    return build_free_laplacian(size);
  }
  if (spec == "anderson") {
    if (size < 1) throw ValidationError("--size is required for --operator anderson");
    AndersonSpec a;
    a.half_width = size;
    a.disorder_bound = bound;
    a.seed = seed;
    if (dist == "pm") {
      a.values = {-bound, bound};
      a.probabilities = {0.5, 0.5};
    } else if (dist != "uniform") {
      throw ValidationError("--dist must be uniform or pm");
    }
    return sample_anderson(a);
  }
  return load_operator(spec);
}

Eigen::VectorXcd resolve_state(const std::string& spec, const OperatorVariant& op) {
  const auto* jac = std::get_if<JacobiOperator>(&op);
  const int dim = std::visit([](const auto& o) { return o.dim(); }, op);
  Eigen::VectorXcd xi = Eigen::VectorXcd::Zero(dim);
  if (spec == "e0") {
    xi[jac ? jac->index_of(0) : dim / 2] = 1.0;
    return xi;
  }
  if (spec.rfind("site:", 0) == 0) {
    if (!jac) throw ValidationError("site: states need a lattice operator");
    const int site = std::stoi(spec.substr(5));
    if (std::abs(site) > jac->half_width) throw ValidationError("state site outside window");
    xi[jac->index_of(site)] = 1.0;
    return xi;
  }
  if (spec.rfind("gaussian:", 0) == 0) {
    if (!jac) throw ValidationError("gaussian states need a lattice operator");
    const double width = std::stod(spec.substr(9));
    if (width <= 0) throw ValidationError("gaussian width must be positive");
    for (int i = 0; i < dim; ++i) {
      const double site = jac->site_of(i);
      xi[i] = std::exp(-site * site / (2.0 * width * width));
    }
    xi /= xi.norm();
    return xi;
  }
  throw ValidationError("bad state spec '" + spec + "' (e0, site:K, gaussian:SIGMA)");
}

CompactObservable resolve_observable(const std::string& spec, const OperatorVariant& op) {
  const auto* jac = std::get_if<JacobiOperator>(&op);
  const int dim = std::visit([](const auto& o) { return o.dim(); }, op);
  if (spec == "proj:e0") {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e[jac ? jac->index_of(0) : dim / 2] = 1.0;
    return CompactObservable::projector(e);
  }
  if (spec.rfind("proj:site:", 0) == 0) {
    if (!jac) throw ValidationError("site projectors need a lattice operator");
    const int site = std::stoi(spec.substr(10));
    if (std::abs(site) > jac->half_width) throw ValidationError("observable site outside window");
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e[jac->index_of(site)] = 1.0;
    return CompactObservable::projector(e);
  }
  throw ValidationError("bad observable spec '" + spec + "' (proj:e0, proj:site:K)");
}

void write_csv_or_stdout(const TimeAverageSeries& s, const std::string& out) {
  if (out == "-") {
    std::cout << "t,value,quantity,operator_hash,xi_label\n";
    char buf[64];
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", s.times[i], s.values[i]);
      std::cout << buf << ',' << quantity_name(s.quantity) << ',' << to_hex(s.operator_hash)
                << ',' << s.xi_label << '\n';
    }
    return;
  }
  write_series_csv(s, out);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"desk-scale spectral dynamics laboratory"};
  app.require_subcommand(1);
  CommonState common;
  app.add_option("--threads", common.threads, "worker thread count (default: cores)");

  // ---- forge ----
  auto* forge = app.add_subcommand("forge", "construct an operator and save it as JSON");
  std::string f_kind, f_out, f_dist = "uniform", f_potential_file;
  int f_size = 0;
  std::uint64_t f_seed = 0;
  double f_bound = 2.0, f_box = 200.0, f_spacing = 0.05, f_cap = 1.0, f_barrier = 0.0;
  int f_vk = 0;
  forge->add_option("--kind", f_kind, "free | anderson | jacobi | continuum")->required();
  forge->add_option("--size", f_size, "half-width N (lattice kinds)");
  forge->add_option("--seed", f_seed, "ensemble seed");
  forge->add_option("--out", f_out, "output file")->required();
  forge->add_option("--bound", f_bound, "potential bound b");
  forge->add_option("--dist", f_dist, "anderson distribution: uniform | pm");
  forge->add_option("--potential-file", f_potential_file, "JSON array of potential values");
  forge->add_option("--barrier-height", f_barrier, "sparse barriers at |j| = 2^m");
  forge->add_option("--box", f_box, "continuum half-width L");
  forge->add_option("--spacing", f_spacing, "continuum grid spacing h");
  forge->add_option("--cap", f_cap, "continuum potential cap C");
  forge->add_option("--vk", f_vk, "apply the shallow-well transform with index k");

  // ---- evolve ----
  auto* evolve_cmd = app.add_subcommand("evolve", "propagate a state and dump the snapshot");
  std::string e_operator, e_xi = "e0", e_out = "-";
  double e_t = 0.0;
  int e_size = 0;
  double e_bound = 2.0;
  std::uint64_t e_seed = 0;
  std::string e_dist = "uniform";
  evolve_cmd->add_option("--operator", e_operator, "free | anderson | operator file")->required();
  evolve_cmd->add_option("--size", e_size, "half-width for shorthand operators");
  evolve_cmd->add_option("--bound", e_bound, "disorder bound");
  evolve_cmd->add_option("--seed", e_seed, "disorder seed");
  evolve_cmd->add_option("--dist", e_dist, "anderson distribution");
  evolve_cmd->add_option("--xi", e_xi, "state: e0 | site:K | gaussian:SIGMA");
  evolve_cmd->add_option("--t", e_t, "evolution time")->required();
  evolve_cmd->add_option("--out", e_out, "output CSV ('-' = stdout)");

  // ---- observe ----
  auto* observe = app.add_subcommand("observe", "time-average series for an observable");
  std::string o_operator, o_xi = "e0", o_A = "proj:e0", o_quantity = "expectation";
  std::string o_decades = "1:3", o_out = "-", o_config;
  int o_size = 0, o_ppd = 32;
  double o_bound = 2.0, o_q = 2.0;
  std::uint64_t o_seed = 0;
  std::string o_dist = "uniform";
  observe->add_option("--operator", o_operator, "free | anderson | operator file");
  observe->add_option("--size", o_size, "half-width for shorthand operators");
  observe->add_option("--bound", o_bound, "disorder bound");
  observe->add_option("--seed", o_seed, "disorder seed");
  observe->add_option("--dist", o_dist, "anderson distribution");
  observe->add_option("--xi", o_xi, "state spec");
  observe->add_option("--A", o_A, "observable spec (expectation quantity)");
  observe->add_option("--quantity", o_quantity, "expectation | return-prob | moment");
  observe->add_option("--q", o_q, "moment order");
  observe->add_option("--t-decades", o_decades, "log10 time range A:B");
  observe->add_option("--ppd", o_ppd, "points per decade");
  observe->add_option("--out", o_out, "output CSV ('-' = stdout)");
  observe->add_option("--config", o_config, "JSON config mirroring these flags");

  // ---- exponents ----
  auto* exponents = app.add_subcommand("exponents", "slope envelope of a series CSV");
  std::string x_series, x_out = "-", x_alpha, x_config;
  double x_window = 1.0;
  exponents->add_option("--series", x_series, "input series CSV");
  exponents->add_option("--window-decades", x_window, "sliding window width");
  exponents->add_option("--alpha", x_alpha, "alpha scan: power:P | log | log:P | iterlog");
  exponents->add_option("--out", x_out, "output JSON ('-' = stdout)");
  exponents->add_option("--config", x_config, "JSON config mirroring these flags");

  // ---- experiment ----
  auto* experiment = app.add_subcommand("experiment", "run a named witness experiment");
  std::string p_name, p_config, p_out_dir = "runs";
  std::uint64_t p_seed = 0;
  bool p_seed_given = false;
  experiment->add_option("--name", p_name, "experiment name (see --list)")->required();
  experiment->add_option("--config", p_config, "JSON overrides for the default config");
  auto* seed_opt = experiment->add_option("--seed", p_seed, "run seed");
  experiment->add_option("--out-dir", p_out_dir, "directory for run records");

  // ---- report ----
  auto* report = app.add_subcommand("report", "summarize persisted run records");
  std::string r_dir = "runs";
  report->add_option("--dir", r_dir, "directory of run records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are validation failures
  }
  p_seed_given = seed_opt->count() > 0;
  apply_threads(common);

  if (forge->parsed()) {
    OperatorVariant op;
    if (f_kind == "free") {
      op = build_free_laplacian(f_size);
    } else if (f_kind == "anderson") {
      AndersonSpec a;
      a.half_width = f_size;
      a.disorder_bound = f_bound;
      a.seed = f_seed;
      if (f_dist == "pm") {
        a.values = {-f_bound, f_bound};
        a.probabilities = {0.5, 0.5};
      } else if (f_dist != "uniform") {
        throw ValidationError("--dist must be uniform or pm");
      }
      op = sample_anderson(a);
    } else if (f_kind == "jacobi") {
      if (!f_potential_file.empty()) {
        const nlohmann::json j = load_json_file(f_potential_file);
        const auto vals = j.at("potential").get<std::vector<double>>();
        JacobiOperator jac;
        jac.half_width = static_cast<int>(vals.size() / 2);
        jac.potential = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
        jac.bound = std::max(f_bound, jac.potential.cwiseAbs().maxCoeff());
        jac.validate();
        op = jac;
      } else if (f_barrier > 0) {
        JacobiOperator jac = build_free_laplacian(f_size);
        for (int p = 1; p <= f_size; p *= 2) {
          jac.potential[jac.index_of(p)] = f_barrier;
          jac.potential[jac.index_of(-p)] = f_barrier;
        }
        jac.bound = f_barrier;
        op = jac;
      } else {
        throw ValidationError("jacobi kind needs --potential-file or --barrier-height");
      }
    } else if (f_kind == "continuum") {
      const int n = 2 * static_cast<int>(std::lround(f_box / f_spacing)) + 1;
      ContinuumSchrodinger cs;
      cs.box_half_width = f_box;
      cs.spacing = f_spacing;
      cs.cap = f_cap;
      cs.potential = Eigen::VectorXd::Zero(n);
      if (f_vk > 0) cs = with_vk_potential(cs, f_vk);
      cs.validate();
      op = cs;
    } else {
      throw ValidationError("unknown kind '" + f_kind + "'");
    }
    save_operator(op, f_out);
    std::cerr << "wrote " << f_out << " (" << operator_kind(op) << ", hash "
              << to_hex(operator_hash(op)) << ")\n";
    return 0;
  }

  if (evolve_cmd->parsed()) {
    const OperatorVariant op = resolve_operator(e_operator, e_size, e_bound, e_seed, e_dist);
    const Eigen::VectorXcd xi = resolve_state(e_xi, op);
    const EigenSystem es = eigendecompose(op);
    const Eigen::VectorXcd xt = evolve(es, xi, e_t);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (e_out != "-") {
      file.open(e_out);
      if (!file) throw std::runtime_error("cannot write " + e_out);
      os = &file;
    }
    *os << "index,re,im,abs2\n";
    char buf[96];
    for (Eigen::Index i = 0; i < xt.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g",
                    static_cast<long long>(i), xt[i].real(), xt[i].imag(), std::norm(xt[i]));
      *os << buf << '\n';
    }
    return 0;
  }

  if (observe->parsed()) {
    merge_file_config(observe, o_config);
    if (o_operator.empty()) throw ValidationError("--operator is required");
    const OperatorVariant op = resolve_operator(o_operator, o_size, o_bound, o_seed, o_dist);
    const Eigen::VectorXcd xi = resolve_state(o_xi, op);
    const auto ts = parse_decades(o_decades, o_ppd).times();
    const EigenSystem es = eigendecompose(op);
    TimeAverageSeries s;
    if (o_quantity == "expectation") {
      s = time_average_closed_series(resolve_observable(o_A, op), es, xi, ts, o_xi);
    } else if (o_quantity == "return-prob") {
      s = return_probability_series(es, xi, ts, o_xi);
    } else if (o_quantity == "moment") {
      s = moment_q_series(es, xi, ts, o_q, o_xi);
    } else {
      throw ValidationError("--quantity must be expectation, return-prob, or moment");
    }
    write_csv_or_stdout(s, o_out);
    return 0;
  }

  if (exponents->parsed()) {
    merge_file_config(exponents, x_config);
    if (x_series.empty()) throw ValidationError("--series is required");
    const TimeAverageSeries s = read_series_csv(x_series);
    nlohmann::json out;
    const ScalingEstimate est = slope_envelope(s, x_window);
    out["envelope"] = est.to_json();
    if (!x_alpha.empty()) {
      const AlphaScan scan = alpha_scan(AlphaFunction::parse(x_alpha), s);
      out["alpha"] = {{"spec", x_alpha},
                      {"sup_value", scan.sup_value},
                      {"argmax_t", scan.argmax_t},
                      {"growth_flag", scan.growth_flag}};
    }
    if (x_out == "-") {
      std::cout << out.dump(2) << '\n';
    } else {
      std::ofstream f(x_out);
      if (!f) throw std::runtime_error("cannot write " + x_out);
      f << out.dump(2) << '\n';
    }
    return 0;
  }

  if (experiment->parsed()) {
    nlohmann::json overrides = nlohmann::json::object();
    if (!p_config.empty()) overrides = load_json_file(p_config);
    std::uint64_t seed = p_seed;
    if (!p_seed_given) {
      if (overrides.contains("seed")) {
        seed = overrides["seed"].get<std::uint64_t>();
        overrides.erase("seed");
      } else if (default_experiment_config(p_name).contains("seed")) {
        seed = default_experiment_config(p_name)["seed"].get<std::uint64_t>();
      }
    } else {
      overrides.erase("seed");
    }
    const RunRecord rec = run_experiment(p_name, overrides, seed, p_out_dir);
    std::cerr << rec.experiment << " " << rec.config_hash << " -> "
              << verdict_name(rec.verdict) << " (" << rec.wall_ms << " ms)\n";
    // a recorded fail is still a completed run; only inconclusive is special
    return rec.verdict == Verdict::inconclusive ? 3 : 0;
  }

  if (report->parsed()) {
    const auto rows = report_runs(r_dir);
    bool corrupt = false;
    for (const auto& row : rows) {
      std::cout << row.hash << "  " << row.name << "  " << row.verdict << "  "
                << row.key_numbers << '\n';
      corrupt = corrupt || row.corrupt;
    }
    return corrupt ? 1 : 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const InconclusiveError& e) {
    std::cerr << "inconclusive: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
