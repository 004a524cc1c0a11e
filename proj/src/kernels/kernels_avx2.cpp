#include <immintrin.h>

#include <cmath>
#include <numbers>

#include "kernels_internal.hpp"

// AVX2+FMA variants. Compiled only in this translation unit so the rest of
// the library stays runnable on any x86-64 (or non-x86) host; the dispatcher
// routes here after a cpuid check.

namespace levopt::kernels::detail {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Vectorized exp for 4 doubles, Cephes expd reduction: x = n*ln2 + r with
// |r| <= ln2/2, exp(r) from a rational minimax approximation, then scale by
// 2^n through the exponent bits. Arguments below kExpUnderflow produce 0;
// the computation itself is clamped to the normal range.
inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

  const __m256d keep =
      _mm256_cmp_pd(x, _mm256_set1_pd(kExpUnderflow), _CMP_GE_OQ);
  x = _mm256_min_pd(x, _mm256_set1_pd(709.436));
  x = _mm256_max_pd(x, _mm256_set1_pd(-708.395));

  const __m256d n = _mm256_round_pd(
      _mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);
  const __m256d r2 = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.0));

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  const __m256i ni = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  const __m256d pow2n = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52));
  return _mm256_and_pd(_mm256_mul_pd(e, pow2n), keep);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void psd_model_avx2(double s0, double gamma0, double omega0,
                    std::span<const double> freq_hz, std::span<double> out) {
  const std::size_t n = freq_hz.size();
  const __m256d two_pi = _mm256_set1_pd(kTwoPi);
  const __m256d w0sq = _mm256_set1_pd(omega0 * omega0);
  const __m256d gsq = _mm256_set1_pd(gamma0 * gamma0);
  const __m256d num = _mm256_set1_pd(s0 * gamma0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d w = _mm256_mul_pd(two_pi, _mm256_loadu_pd(&freq_hz[i]));
    const __m256d wsq = _mm256_mul_pd(w, w);
    const __m256d d = _mm256_sub_pd(w0sq, wsq);
    const __m256d denom = _mm256_fmadd_pd(d, d, _mm256_mul_pd(wsq, gsq));
    _mm256_storeu_pd(&out[i], _mm256_div_pd(num, denom));
  }
  for (; i < n; ++i) {
    const double w = kTwoPi * freq_hz[i];
    const double wsq = w * w;
    const double d = omega0 * omega0 - wsq;
    out[i] = s0 * gamma0 / (d * d + wsq * gamma0 * gamma0);
  }
}

void psd_model_logjac_avx2(double s0, double gamma0, double omega0,
                           std::span<const double> freq_hz,
                           std::span<double> model, std::span<double> dln_gamma,
                           std::span<double> dln_omega) {
  const std::size_t n = freq_hz.size();
  const __m256d two_pi = _mm256_set1_pd(kTwoPi);
  const __m256d w0sq = _mm256_set1_pd(omega0 * omega0);
  const __m256d gsq = _mm256_set1_pd(gamma0 * gamma0);
  const __m256d num = _mm256_set1_pd(s0 * gamma0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d neg_two = _mm256_set1_pd(-2.0);
  const __m256d neg_four_w0sq = _mm256_set1_pd(-4.0 * omega0 * omega0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d w = _mm256_mul_pd(two_pi, _mm256_loadu_pd(&freq_hz[i]));
    const __m256d wsq = _mm256_mul_pd(w, w);
    const __m256d d = _mm256_sub_pd(w0sq, wsq);
    const __m256d denom = _mm256_fmadd_pd(d, d, _mm256_mul_pd(wsq, gsq));
    const __m256d inv = _mm256_div_pd(one, denom);
    _mm256_storeu_pd(&model[i], _mm256_mul_pd(num, inv));
    const __m256d wg = _mm256_mul_pd(wsq, gsq);
    _mm256_storeu_pd(&dln_gamma[i],
                     _mm256_fmadd_pd(neg_two, _mm256_mul_pd(wg, inv), one));
    _mm256_storeu_pd(&dln_omega[i],
                     _mm256_mul_pd(neg_four_w0sq, _mm256_mul_pd(d, inv)));
  }
  for (; i < n; ++i) {
    const double w = kTwoPi * freq_hz[i];
    const double wsq = w * w;
    const double d = omega0 * omega0 - wsq;
    const double denom = d * d + wsq * gamma0 * gamma0;
    const double inv = 1.0 / denom;
    model[i] = s0 * gamma0 * inv;
    dln_gamma[i] = 1.0 - 2.0 * wsq * gamma0 * gamma0 * inv;
    dln_omega[i] = -4.0 * omega0 * omega0 * d * inv;
  }
}

void gauss_pair_avx2(std::span<const double> freq_hz, double c1,
                     double inv_two_sigma1_sq, double c2,
                     double inv_two_sigma2_sq, std::span<double> e1,
                     std::span<double> e2) {
  const std::size_t n = freq_hz.size();
  const __m256d vc1 = _mm256_set1_pd(c1);
  const __m256d vc2 = _mm256_set1_pd(c2);
  const __m256d vs1 = _mm256_set1_pd(-inv_two_sigma1_sq);
  const __m256d vs2 = _mm256_set1_pd(-inv_two_sigma2_sq);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d f = _mm256_loadu_pd(&freq_hz[i]);
    const __m256d t1 = _mm256_sub_pd(f, vc1);
    const __m256d t2 = _mm256_sub_pd(f, vc2);
    _mm256_storeu_pd(&e1[i], exp4(_mm256_mul_pd(_mm256_mul_pd(t1, t1), vs1)));
    _mm256_storeu_pd(&e2[i], exp4(_mm256_mul_pd(_mm256_mul_pd(t2, t2), vs2)));
  }
  for (; i < n; ++i) {
    const double t1 = freq_hz[i] - c1;
    const double t2 = freq_hz[i] - c2;
    e1[i] = exp_flushed(-t1 * t1 * inv_two_sigma1_sq);
    e2[i] = exp_flushed(-t2 * t2 * inv_two_sigma2_sq);
  }
}

void exp_array_avx2(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(&out[i], exp4(_mm256_loadu_pd(&x[i])));
  for (; i < n; ++i) out[i] = exp_flushed(x[i]);
}

void multiply_avx2(std::span<const double> a, std::span<const double> b,
                   std::span<double> out) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        &out[i], _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

double sum_avx2(std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&x[i]));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double sum_sq_dev_avx2(std::span<const double> x, double mean) {
  const std::size_t n = x.size();
  const __m256d m = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(&x[i]), m);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    total += d * d;
  }
  return total;
}

void accumulate_sq_mag_avx2(std::span<const double> interleaved_complex,
                            double scale, std::span<double> acc) {
  const std::size_t n = acc.size();
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d a = _mm256_loadu_pd(&interleaved_complex[2 * k]);
    const __m256d b = _mm256_loadu_pd(&interleaved_complex[2 * k + 4]);
    // hadd pairs within 128-bit lanes, so the result interleaves the two
    // input registers; permute back to memory order.
    const __m256d mags = _mm256_permute4x64_pd(
        _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b)),
        _MM_SHUFFLE(3, 1, 2, 0));
    _mm256_storeu_pd(&acc[k],
                     _mm256_fmadd_pd(mags, vs, _mm256_loadu_pd(&acc[k])));
  }
  for (; k < n; ++k) {
    const double re = interleaved_complex[2 * k];
    const double im = interleaved_complex[2 * k + 1];
    acc[k] += scale * (re * re + im * im);
  }
}

}  // namespace levopt::kernels::detail
