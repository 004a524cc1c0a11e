#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"
#include "levopt/kernels.hpp"

namespace levopt::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(LEVOPT_AVX2_BUILD) && defined(__x86_64__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend startup_backend() {
  if (const char* env = std::getenv("LEVOPT_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && cpu_has_avx2()) return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend& state() {
  static Backend b = startup_backend();
  return b;
}

}  // namespace

Backend active_backend() { return state(); }

bool backend_supported(Backend b) {
  return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2());
}

void force_backend(Backend b) {
  if (!backend_supported(b))
    throw std::invalid_argument("kernel backend not supported on this host: " +
                                backend_name(b));
  state() = b;
}

void reset_backend() { state() = startup_backend(); }

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

#if defined(LEVOPT_AVX2_BUILD)
#define LEVOPT_DISPATCH(fn, ...)                                       \
  do {                                                                 \
    if (active_backend() == Backend::avx2) {                           \
      detail::fn##_avx2(__VA_ARGS__);                                  \
      return;                                                          \
    }                                                                  \
    detail::fn##_scalar(__VA_ARGS__);                                  \
  } while (0)
#define LEVOPT_DISPATCH_RET(fn, ...)                                   \
  do {                                                                 \
    if (active_backend() == Backend::avx2)                             \
      return detail::fn##_avx2(__VA_ARGS__);                           \
    return detail::fn##_scalar(__VA_ARGS__);                           \
  } while (0)
#else
#define LEVOPT_DISPATCH(fn, ...)        \
  do {                                  \
    detail::fn##_scalar(__VA_ARGS__);   \
    return;                             \
  } while (0)
#define LEVOPT_DISPATCH_RET(fn, ...) return detail::fn##_scalar(__VA_ARGS__)
#endif

void psd_model(double s0, double gamma0, double omega0,
               std::span<const double> freq_hz, std::span<double> out) {
  LEVOPT_DISPATCH(psd_model, s0, gamma0, omega0, freq_hz, out);
}

void psd_model_logjac(double s0, double gamma0, double omega0,
                      std::span<const double> freq_hz, std::span<double> model,
                      std::span<double> dln_gamma,
                      std::span<double> dln_omega) {
  LEVOPT_DISPATCH(psd_model_logjac, s0, gamma0, omega0, freq_hz, model,
                  dln_gamma, dln_omega);
}

void gauss_pair(std::span<const double> freq_hz, double c1,
                double inv_two_sigma1_sq, double c2, double inv_two_sigma2_sq,
                std::span<double> e1, std::span<double> e2) {
  LEVOPT_DISPATCH(gauss_pair, freq_hz, c1, inv_two_sigma1_sq, c2,
                  inv_two_sigma2_sq, e1, e2);
}

void exp_array(std::span<const double> x, std::span<double> out) {
  LEVOPT_DISPATCH(exp_array, x, out);
}

void multiply(std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
  LEVOPT_DISPATCH(multiply, a, b, out);
}

double sum(std::span<const double> x) { LEVOPT_DISPATCH_RET(sum, x); }

double sum_sq_dev(std::span<const double> x, double mean) {
  LEVOPT_DISPATCH_RET(sum_sq_dev, x, mean);
}

void accumulate_sq_mag(std::span<const double> interleaved_complex,
                       double scale, std::span<double> acc) {
  LEVOPT_DISPATCH(accumulate_sq_mag, interleaved_complex, scale, acc);
}

}  // namespace levopt::kernels
