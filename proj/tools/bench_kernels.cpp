// Timing comparison of the serial reference kernels against the OpenMP ones,
// plus a bitwise-identity check (the parallel kernels must not change results).

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ilab/kernels.hpp"

using namespace ilab;
using clk = std::chrono::steady_clock;

namespace {

double seconds(clk::time_point a, clk::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct Case {
  int dim;
  int n_times;
};

void bench(const Case& c) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::VectorXd lam(c.dim), w(c.dim);
  Eigen::VectorXcd coeff(c.dim), a(c.dim);
  for (int i = 0; i < c.dim; ++i) {
    lam[i] = u(gen);
    w[i] = std::abs(u(gen)) / c.dim;
    coeff[i] = cplx(u(gen), u(gen)) / std::sqrt(static_cast<double>(c.dim));
    a[i] = cplx(u(gen), u(gen)) / std::sqrt(static_cast<double>(c.dim));
  }
  std::sort(lam.data(), lam.data() + c.dim);
  std::vector<double> ts(c.n_times);
  for (int i = 0; i < c.n_times; ++i) ts[i] = 1.0 + 3.0 * i;

  std::printf("dim=%d grid=%d threads=%d\n", c.dim, c.n_times, kernels::thread_count());

  auto run = [&](const char* name, auto&& fn) {
    const auto t0 = clk::now();
    auto serial = fn(kernels::Exec::serial);
    const auto t1 = clk::now();
    auto parallel = fn(kernels::Exec::parallel);
    const auto t2 = clk::now();
    bool identical = serial.size() == parallel.size();
    for (std::size_t i = 0; identical && i < serial.size(); ++i)
      identical = serial[i] == parallel[i];
    std::printf("  %-24s serial %8.3fs  omp %8.3fs  speedup %5.2fx  bitwise %s\n", name,
                seconds(t0, t1), seconds(t1, t2), seconds(t0, t1) / seconds(t1, t2),
                identical ? "ok" : "MISMATCH");
  };

  run("phase_sum", [&](kernels::Exec e) {
    std::vector<cplx> out(ts.size());
    kernels::phase_sum_grid(ts, coeff, lam, out, e);
    return out;
  });
  run("rank_one_phi", [&](kernels::Exec e) {
    std::vector<double> out(ts.size());
    kernels::rank_one_phi_grid(ts, w, lam, out, e);
    return out;
  });
  run("rank_one_hermitian_phi", [&](kernels::Exec e) {
    std::vector<double> out(ts.size());
    kernels::rank_one_hermitian_phi_grid(ts, a, lam, out, e);
    return out;
  });
}

}  // namespace

int main(int argc, char** argv) {
  int dim = 2048, grid = 64;
  if (argc > 1) dim = std::atoi(argv[1]);
  if (argc > 2) grid = std::atoi(argv[2]);
  bench({dim, grid});
  return 0;
}
