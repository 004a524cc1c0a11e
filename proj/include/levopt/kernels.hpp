#pragma once

#include <cstddef>
#include <span>
#include <string>

// Data-parallel inner loops behind the spectral and resonance models.
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant. The backend is picked once at runtime
// (cpuid, overridable via force_backend or the LEVOPT_KERNELS env var) and
// the two implementations are equivalence-tested against each other.

namespace levopt::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_supported(Backend b);
void force_backend(Backend b);  // throws std::invalid_argument if unsupported
void reset_backend();           // back to auto-detection
std::string backend_name(Backend b);

// out[i] = s0*g / ((w0^2 - w^2)^2 + w^2 g^2), w = 2*pi*f[i]
void psd_model(double s0, double gamma0, double omega0,
               std::span<const double> freq_hz, std::span<double> out);

// Fused model plus logarithmic sensitivities d(ln m)/d(ln gamma0) and
// d(ln m)/d(ln omega0) used by the spectrum fitter.
void psd_model_logjac(double s0, double gamma0, double omega0,
                      std::span<const double> freq_hz, std::span<double> model,
                      std::span<double> dln_gamma, std::span<double> dln_omega);

// e1[i] = exp(-(f[i]-c1)^2 * inv_two_sigma1_sq), same for e2.
void gauss_pair(std::span<const double> freq_hz, double c1,
                double inv_two_sigma1_sq, double c2, double inv_two_sigma2_sq,
                std::span<double> e1, std::span<double> e2);

// out[i] = exp(x[i]); arguments below -708.3964 underflow to exactly 0 in
// both backends. Exposed so the vector exp can be tested on its own.
void exp_array(std::span<const double> x, std::span<double> out);

// out[i] = a[i] * b[i]            (window application)
void multiply(std::span<const double> a, std::span<const double> b,
              std::span<double> out);

double sum(std::span<const double> x);

// sum over (x[i] - mean)^2
double sum_sq_dev(std::span<const double> x, double mean);

// acc[k] += scale * |z_k|^2 for interleaved re/im pairs (periodogram
// accumulation); z has acc.size() complex entries.
void accumulate_sq_mag(std::span<const double> interleaved_complex,
                       double scale, std::span<double> acc);

}  // namespace levopt::kernels
