#include "ilab/kernels.hpp"

#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ilab::kernels {

namespace {
std::atomic<int> g_threads{0};  // 0 = OpenMP default
}

int thread_count() {
  int n = g_threads.load();
  if (n > 0) return n;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
  g_threads.store(n > 0 ? n : 0);
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

double versinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return x / 2.0 - x * x2 / 24.0;
  }
  return (1.0 - std::cos(x)) / x;
}

// Each grid point is one task with a fixed serial inner loop, so the result
// does not depend on the thread count.

void phase_sum_grid(std::span<const double> ts, const Eigen::VectorXcd& coeff,
                    const Eigen::VectorXd& lam, std::span<cplx> out, Exec exec) {
  if (coeff.size() != lam.size()) throw ValidationError("phase_sum_grid: size mismatch");
  if (out.size() != ts.size()) throw ValidationError("phase_sum_grid: bad output span");
  const auto n = static_cast<std::ptrdiff_t>(lam.size());
  const auto m = static_cast<std::ptrdiff_t>(ts.size());

#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double t = ts[i];
    double re = 0.0, im = 0.0;
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const double ph = -t * lam[k];
      const double c = std::cos(ph), s = std::sin(ph);
      re += coeff[k].real() * c - coeff[k].imag() * s;
      im += coeff[k].real() * s + coeff[k].imag() * c;
    }
    out[i] = cplx(re, im);
  }
}

void rank_one_phi_grid(std::span<const double> ts, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& lam, std::span<double> out, Exec exec) {
  if (w.size() != lam.size()) throw ValidationError("rank_one_phi_grid: size mismatch");
  if (out.size() != ts.size()) throw ValidationError("rank_one_phi_grid: bad output span");
  const auto n = static_cast<std::ptrdiff_t>(lam.size());
  const auto m = static_cast<std::ptrdiff_t>(ts.size());

#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double t = ts[i];
    double diag = 0.0, cross = 0.0;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      diag += w[j] * w[j];
      double row = 0.0;
      for (std::ptrdiff_t k = j + 1; k < n; ++k)
        row += w[k] * sinc(t * (lam[j] - lam[k]));
      cross += w[j] * row;
    }
    out[i] = diag + 2.0 * cross;
  }
}

void hermitian_phi_grid(std::span<const double> ts, const Eigen::MatrixXd& reM,
                        const Eigen::MatrixXd* imM, const Eigen::VectorXd& lam,
                        std::span<double> out, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(lam.size());
  if (reM.rows() != n || reM.cols() != n)
    throw ValidationError("hermitian_phi_grid: matrix/eigenvalue mismatch");
  if (imM && (imM->rows() != n || imM->cols() != n))
    throw ValidationError("hermitian_phi_grid: imaginary part size mismatch");
  if (out.size() != ts.size()) throw ValidationError("hermitian_phi_grid: bad output span");
  const auto m = static_cast<std::ptrdiff_t>(ts.size());

  // sum_{jk} M_jk phibar(t (lam_j - lam_k)) for Hermitian M is real:
  // diagonal + 2 sum_{j<k} [Re M_jk sinc(x) - Im M_jk versinc(x)].
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double t = ts[i];
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      acc += reM(j, j);
      double rowr = 0.0, rowi = 0.0;
      const double lj = lam[j];
      if (imM) {
        for (std::ptrdiff_t k = j + 1; k < n; ++k) {
          const double x = t * (lj - lam[k]);
          rowr += reM(k, j) * sinc(x);
          rowi += (*imM)(k, j) * versinc(x);
        }
        // column-major lower triangle holds M_jk for k > j via hermiticity:
        // reM(k,j) = Re M_jk, (*imM)(k,j) = -Im M_jk, hence the sign below.
        acc += 2.0 * (rowr + rowi);
      } else {
        for (std::ptrdiff_t k = j + 1; k < n; ++k)
          rowr += reM(k, j) * sinc(t * (lj - lam[k]));
        acc += 2.0 * rowr;
      }
    }
    out[i] = acc;
  }
}

void rank_one_hermitian_phi_grid(std::span<const double> ts, const Eigen::VectorXcd& a,
                                 const Eigen::VectorXd& lam, std::span<double> out,
                                 Exec exec) {
  if (a.size() != lam.size())
    throw ValidationError("rank_one_hermitian_phi_grid: size mismatch");
  if (out.size() != ts.size())
    throw ValidationError("rank_one_hermitian_phi_grid: bad output span");
  const auto n = static_cast<std::ptrdiff_t>(lam.size());
  const auto m = static_cast<std::ptrdiff_t>(ts.size());

  // sum_{jk} a_j conj(a_k) phibar(x_jk)
  //   = sum_j |a_j|^2 + 2 sum_{j<k} [Re(a_j conj(a_k)) sinc - Im(.) versinc]
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double t = ts[i];
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      acc += std::norm(a[j]);
      const double lj = lam[j];
      double cross = 0.0;
      for (std::ptrdiff_t k = j + 1; k < n; ++k) {
        const double x = t * (lj - lam[k]);
        const cplx p = a[j] * std::conj(a[k]);
        cross += p.real() * sinc(x) - p.imag() * versinc(x);
      }
      acc += 2.0 * cross;
    }
    out[i] = acc;
  }
}

void abs_expectation_grid(std::span<const double> ss, const Eigen::VectorXcd& coeff,
                          const Eigen::VectorXd& lam, const Eigen::VectorXd& sigma,
                          const Eigen::MatrixXcd& u_eig, const Eigen::MatrixXcd& v_eig,
                          std::span<double> out, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(lam.size());
  const auto r = static_cast<std::ptrdiff_t>(sigma.size());
  if (coeff.size() != n || u_eig.rows() != n || v_eig.rows() != n ||
      u_eig.cols() != r || v_eig.cols() != r)
    throw ValidationError("abs_expectation_grid: shape mismatch");
  if (out.size() != ss.size()) throw ValidationError("abs_expectation_grid: bad output span");
  const auto m = static_cast<std::ptrdiff_t>(ss.size());

#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double s = ss[i];
    cplx val(0.0, 0.0);
    for (std::ptrdiff_t q = 0; q < r; ++q) {
      // <xi(s), u_q> and <v_q, xi(s)> with xi(s)_k = coeff_k e^{-is lam_k}
      cplx xu(0.0, 0.0), vx(0.0, 0.0);
      for (std::ptrdiff_t k = 0; k < n; ++k) {
        const double ph = -s * lam[k];
        const cplx e(std::cos(ph), std::sin(ph));
        const cplx ck = coeff[k] * e;
        xu += std::conj(ck) * u_eig(k, q);
        vx += std::conj(v_eig(k, q)) * ck;
      }
      val += sigma[q] * xu * vx;
    }
    out[i] = std::abs(val);
  }
}

}  // namespace ilab::kernels
