#include <cassert>
#include <cmath>
#include <numbers>

#include "kernels_internal.hpp"

namespace levopt::kernels::detail {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void psd_model_scalar(double s0, double gamma0, double omega0,
                      std::span<const double> freq_hz, std::span<double> out) {
  assert(freq_hz.size() == out.size());
  const double w0sq = omega0 * omega0;
  const double gsq = gamma0 * gamma0;
  const double num = s0 * gamma0;
  for (std::size_t i = 0; i < freq_hz.size(); ++i) {
    const double w = kTwoPi * freq_hz[i];
    const double wsq = w * w;
    const double d = w0sq - wsq;
    out[i] = num / (d * d + wsq * gsq);
  }
}

void psd_model_logjac_scalar(double s0, double gamma0, double omega0,
                             std::span<const double> freq_hz,
                             std::span<double> model,
                             std::span<double> dln_gamma,
                             std::span<double> dln_omega) {
  assert(freq_hz.size() == model.size());
  assert(freq_hz.size() == dln_gamma.size());
  assert(freq_hz.size() == dln_omega.size());
  const double w0sq = omega0 * omega0;
  const double gsq = gamma0 * gamma0;
  const double num = s0 * gamma0;
  for (std::size_t i = 0; i < freq_hz.size(); ++i) {
    const double w = kTwoPi * freq_hz[i];
    const double wsq = w * w;
    const double d = w0sq - wsq;
    const double denom = d * d + wsq * gsq;
    const double inv = 1.0 / denom;
    model[i] = num * inv;
    dln_gamma[i] = 1.0 - 2.0 * wsq * gsq * inv;
    dln_omega[i] = -4.0 * w0sq * d * inv;
  }
}

void gauss_pair_scalar(std::span<const double> freq_hz, double c1,
                       double inv_two_sigma1_sq, double c2,
                       double inv_two_sigma2_sq, std::span<double> e1,
                       std::span<double> e2) {
  assert(freq_hz.size() == e1.size());
  assert(freq_hz.size() == e2.size());
  for (std::size_t i = 0; i < freq_hz.size(); ++i) {
    const double t1 = freq_hz[i] - c1;
    const double t2 = freq_hz[i] - c2;
    e1[i] = exp_flushed(-t1 * t1 * inv_two_sigma1_sq);
    e2[i] = exp_flushed(-t2 * t2 * inv_two_sigma2_sq);
  }
}

void exp_array_scalar(std::span<const double> x, std::span<double> out) {
  assert(x.size() == out.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = exp_flushed(x[i]);
}

void multiply_scalar(std::span<const double> a, std::span<const double> b,
                     std::span<double> out) {
  assert(a.size() == b.size());
  assert(a.size() == out.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
}

double sum_scalar(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double sum_sq_dev_scalar(std::span<const double> x, double mean) {
  double acc = 0.0;
  for (double v : x) {
    const double d = v - mean;
    acc += d * d;
  }
  return acc;
}

void accumulate_sq_mag_scalar(std::span<const double> interleaved_complex,
                              double scale, std::span<double> acc) {
  assert(interleaved_complex.size() == 2 * acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const double re = interleaved_complex[2 * k];
    const double im = interleaved_complex[2 * k + 1];
    acc[k] += scale * (re * re + im * im);
  }
}

}  // namespace levopt::kernels::detail
