#pragma once

#include <cmath>
#include <cstddef>
#include <span>

// Per-backend entry points used only by the dispatcher.

namespace levopt::kernels::detail {

// Arguments below this underflow to exactly 0 in every exp-evaluating kernel
// (Cephes MINLOG); the vector path cannot produce subnormals, so the scalar
// reference adopts the same contract to keep the backends equivalent.
inline constexpr double kExpUnderflow = -7.08396418532264106224e2;

inline double exp_flushed(double x) {
  return x < kExpUnderflow ? 0.0 : std::exp(x);
}

void psd_model_scalar(double s0, double gamma0, double omega0,
                      std::span<const double> freq_hz, std::span<double> out);
void psd_model_logjac_scalar(double s0, double gamma0, double omega0,
                             std::span<const double> freq_hz,
                             std::span<double> model,
                             std::span<double> dln_gamma,
                             std::span<double> dln_omega);
void gauss_pair_scalar(std::span<const double> freq_hz, double c1,
                       double inv_two_sigma1_sq, double c2,
                       double inv_two_sigma2_sq, std::span<double> e1,
                       std::span<double> e2);
void exp_array_scalar(std::span<const double> x, std::span<double> out);
void multiply_scalar(std::span<const double> a, std::span<const double> b,
                     std::span<double> out);
double sum_scalar(std::span<const double> x);
double sum_sq_dev_scalar(std::span<const double> x, double mean);
void accumulate_sq_mag_scalar(std::span<const double> interleaved_complex,
                              double scale, std::span<double> acc);

void psd_model_avx2(double s0, double gamma0, double omega0,
                    std::span<const double> freq_hz, std::span<double> out);
void psd_model_logjac_avx2(double s0, double gamma0, double omega0,
                           std::span<const double> freq_hz,
                           std::span<double> model,
                           std::span<double> dln_gamma,
                           std::span<double> dln_omega);
void gauss_pair_avx2(std::span<const double> freq_hz, double c1,
                     double inv_two_sigma1_sq, double c2,
                     double inv_two_sigma2_sq, std::span<double> e1,
                     std::span<double> e2);
void exp_array_avx2(std::span<const double> x, std::span<double> out);
void multiply_avx2(std::span<const double> a, std::span<const double> b,
                   std::span<double> out);
double sum_avx2(std::span<const double> x);
double sum_sq_dev_avx2(std::span<const double> x, double mean);
void accumulate_sq_mag_avx2(std::span<const double> interleaved_complex,
                            double scale, std::span<double> acc);

}  // namespace levopt::kernels::detail
