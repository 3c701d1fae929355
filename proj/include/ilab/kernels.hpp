#pragma once

#include <Eigen/Dense>
#include <span>

#include "ilab/common.hpp"

// Hot inner loops. Every kernel exists in a serial reference form and an
// OpenMP form; results are bitwise identical because parallelism is only
// over independent output elements (one grid point per task, serial inner
// accumulation). tools/ilab_bench compares the two.

namespace ilab::kernels {

enum class Exec { serial, parallel };

int thread_count();
void set_thread_count(int n);  // n <= 0 restores the OpenMP default

// sin(x)/x, continuous at 0
double sinc(double x);
// (1 - cos(x))/x, continuous at 0
double versinc(double x);

// out[i] = sum_k coeff[k] * exp(-i t[i] lam[k])
void phase_sum_grid(std::span<const double> ts, const Eigen::VectorXcd& coeff,
                    const Eigen::VectorXd& lam, std::span<cplx> out,
                    Exec exec = Exec::parallel);

// out[i] = sum_{j,k} w[j] w[k] sinc(t[i] (lam[j] - lam[k]))
// This is the exact time average of |sum_k w_k e^{-is lam_k}|^2 over [0, t].
void rank_one_phi_grid(std::span<const double> ts, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& lam, std::span<double> out,
                       Exec exec = Exec::parallel);

// out[i] = sum_{j,k} M[j,k] * phibar(t[i] (lam[j] - lam[k])) for Hermitian
// M = reM + i imM (pass imM = nullptr when M is real symmetric), where
// phibar(x) = (e^{ix} - 1)/(ix) is the time average of e^{is delta} over [0,t].
void hermitian_phi_grid(std::span<const double> ts, const Eigen::MatrixXd& reM,
                        const Eigen::MatrixXd* imM, const Eigen::VectorXd& lam,
                        std::span<double> out, Exec exec = Exec::parallel);

// Same sum for the Hermitian rank-one matrix M = a a^*, without forming it.
void rank_one_hermitian_phi_grid(std::span<const double> ts, const Eigen::VectorXcd& a,
                                 const Eigen::VectorXd& lam, std::span<double> out,
                                 Exec exec = Exec::parallel);

// out[i] = | sum_r sigma[r] <xi(s_i), u_r> <v_r, xi(s_i)> | with all vectors
// expressed in the eigenbasis: xi(s) has coefficients coeff[k] e^{-is lam[k]}.
// Used by the quadrature path of the time averages.
void abs_expectation_grid(std::span<const double> ss, const Eigen::VectorXcd& coeff,
                          const Eigen::VectorXd& lam, const Eigen::VectorXd& sigma,
                          const Eigen::MatrixXcd& u_eig, const Eigen::MatrixXcd& v_eig,
                          std::span<double> out, Exec exec = Exec::parallel);

}  // namespace ilab::kernels
