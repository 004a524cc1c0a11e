#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "levopt/kernels.hpp"

namespace k = levopt::kernels;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> random_vec(std::size_t n, double lo, double hi,
                               unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Sizes around the 4-lane width so remainder handling is exercised.
const std::vector<std::size_t> kSizes = {1, 2, 3, 4, 5, 7, 8, 64, 257, 1000};

struct BackendGuard {
  ~BackendGuard() { k::reset_backend(); }
};

bool have_avx2() { return k::backend_supported(k::Backend::avx2); }

}  // namespace

TEST_CASE("backend selection api") {
  CHECK(k::backend_supported(k::Backend::scalar));
  CHECK(k::backend_name(k::Backend::scalar) == "scalar");
  CHECK(k::backend_name(k::Backend::avx2) == "avx2");

  BackendGuard guard;
  k::force_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  if (have_avx2()) {
    k::force_backend(k::Backend::avx2);
    CHECK(k::active_backend() == k::Backend::avx2);
  } else {
    CHECK_THROWS_AS(k::force_backend(k::Backend::avx2), std::invalid_argument);
  }
  k::reset_backend();
  CHECK(k::backend_supported(k::active_backend()));
}

TEST_CASE("psd_model matches direct formula") {
  const double s0 = 3.2e-18, gamma0 = kTwoPi * 3.7e4, omega0 = kTwoPi * 1.1e5;
  const auto freq = random_vec(513, 0.0, 5e5, 11);
  std::vector<double> out(freq.size());

  BackendGuard guard;
  k::force_backend(k::Backend::scalar);
  k::psd_model(s0, gamma0, omega0, freq, out);
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const double w = kTwoPi * freq[i];
    const double denom = (omega0 * omega0 - w * w) * (omega0 * omega0 - w * w) +
                         w * w * gamma0 * gamma0;
    CHECK(rel_diff(out[i], s0 * gamma0 / denom) < 1e-14);
  }
}

TEST_CASE("psd_model_logjac sensitivities match finite differences") {
  const double s0 = 1.0e-19, gamma0 = kTwoPi * 5e4, omega0 = kTwoPi * 1.25e5;
  const auto freq = random_vec(101, 1e3, 4e5, 12);
  const std::size_t n = freq.size();
  std::vector<double> m(n), dg(n), dw(n), lo(n), hi(n);

  BackendGuard guard;
  k::force_backend(k::Backend::scalar);
  k::psd_model_logjac(s0, gamma0, omega0, freq, m, dg, dw);

  const double h = 1e-6;
  k::psd_model(s0, gamma0 * std::exp(-h), omega0, freq, lo);
  k::psd_model(s0, gamma0 * std::exp(h), omega0, freq, hi);
  for (std::size_t i = 0; i < n; ++i) {
    const double fd = (std::log(hi[i]) - std::log(lo[i])) / (2.0 * h);
    CHECK(std::abs(dg[i] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
  k::psd_model(s0, gamma0, omega0 * std::exp(-h), freq, lo);
  k::psd_model(s0, gamma0, omega0 * std::exp(h), freq, hi);
  for (std::size_t i = 0; i < n; ++i) {
    const double fd = (std::log(hi[i]) - std::log(lo[i])) / (2.0 * h);
    CHECK(std::abs(dw[i] - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("gauss_pair matches direct formula") {
  const auto freq = random_vec(300, 2.85e9, 2.89e9, 13);
  const double c1 = 2.865e9, c2 = 2.875e9;
  const double s1 = 2e6, s2 = 3.1e6;
  std::vector<double> e1(freq.size()), e2(freq.size());

  BackendGuard guard;
  k::force_backend(k::Backend::scalar);
  k::gauss_pair(freq, c1, 1.0 / (2 * s1 * s1), c2, 1.0 / (2 * s2 * s2), e1, e2);
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const double d1 = freq[i] - c1, d2 = freq[i] - c2;
    CHECK(rel_diff(e1[i], std::exp(-d1 * d1 / (2 * s1 * s1))) < 1e-13);
    CHECK(rel_diff(e2[i], std::exp(-d2 * d2 / (2 * s2 * s2))) < 1e-13);
  }
}

TEST_CASE("exp_array accuracy") {
  BackendGuard guard;
  for (k::Backend b : {k::Backend::scalar, k::Backend::avx2}) {
    if (!k::backend_supported(b)) continue;
    k::force_backend(b);
    auto x = random_vec(4099, -700.0, 700.0, 14);
    x.insert(x.end(), {0.0, 1.0, -1.0, 1e-12, 709.0});
    std::vector<double> out(x.size());
    k::exp_array(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(rel_diff(out[i], std::exp(x[i])) < 4e-15);
    }

    // documented underflow contract
    const std::vector<double> deep = {-709.0, -745.0, -1000.0};
    std::vector<double> zero(3);
    k::exp_array(deep, zero);
    CHECK(zero == std::vector<double>{0.0, 0.0, 0.0});
  }
}

TEST_CASE("accumulate_sq_mag hand oracle") {
  // two complex bins: (3,4) and (1,-2), scale 0.5, acc starts at (1, 10)
  const std::vector<double> z = {3.0, 4.0, 1.0, -2.0};
  std::vector<double> acc = {1.0, 10.0};

  BackendGuard guard;
  k::force_backend(k::Backend::scalar);
  k::accumulate_sq_mag(z, 0.5, acc);
  CHECK(acc[0] == doctest::Approx(1.0 + 0.5 * 25.0).epsilon(1e-15));
  CHECK(acc[1] == doctest::Approx(10.0 + 0.5 * 5.0).epsilon(1e-15));
}

TEST_CASE("reductions match naive loops") {
  BackendGuard guard;
  k::force_backend(k::Backend::scalar);
  for (std::size_t n : kSizes) {
    const auto x = random_vec(n, -2.0, 2.0, 20 + n);
    double naive = 0.0;
    for (double v : x) naive += v;
    CHECK(rel_diff(k::sum(x), naive) < 1e-13);

    const double mean = naive / n;
    double dev = 0.0;
    for (double v : x) dev += (v - mean) * (v - mean);
    CHECK(rel_diff(k::sum_sq_dev(x, mean), dev) < 1e-12);
  }
}

TEST_CASE("avx2 variants agree with scalar reference") {
  if (!have_avx2()) {
    MESSAGE("avx2 not supported on this host, equivalence checked elsewhere");
    return;
  }
  BackendGuard guard;

  for (std::size_t n : kSizes) {
    const auto freq = random_vec(n, 0.0, 6e5, 100 + n);
    const double s0 = 2.5e-19, g = kTwoPi * 4.2e4, w0 = kTwoPi * 9.7e4;

    std::vector<double> m_s(n), dg_s(n), dw_s(n), m_v(n), dg_v(n), dw_v(n);
    k::force_backend(k::Backend::scalar);
    k::psd_model_logjac(s0, g, w0, freq, m_s, dg_s, dw_s);
    k::force_backend(k::Backend::avx2);
    k::psd_model_logjac(s0, g, w0, freq, m_v, dg_v, dw_v);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(rel_diff(m_s[i], m_v[i]) < 1e-14);
      CHECK(rel_diff(dg_s[i], dg_v[i]) < 1e-13);
      CHECK(rel_diff(dw_s[i], dw_v[i]) < 1e-13);
    }

    std::vector<double> p_s(n), p_v(n);
    k::force_backend(k::Backend::scalar);
    k::psd_model(s0, g, w0, freq, p_s);
    k::force_backend(k::Backend::avx2);
    k::psd_model(s0, g, w0, freq, p_v);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_diff(p_s[i], p_v[i]) < 1e-14);

    const auto esr = random_vec(n, 2.8e9, 2.94e9, 200 + n);
    std::vector<double> a_s(n), b_s(n), a_v(n), b_v(n);
    k::force_backend(k::Backend::scalar);
    k::gauss_pair(esr, 2.865e9, 1.1e-13, 2.875e9, 0.7e-13, a_s, b_s);
    k::force_backend(k::Backend::avx2);
    k::gauss_pair(esr, 2.865e9, 1.1e-13, 2.875e9, 0.7e-13, a_v, b_v);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(rel_diff(a_s[i], a_v[i]) < 1e-13);
      CHECK(rel_diff(b_s[i], b_v[i]) < 1e-13);
    }

    const auto xs = random_vec(n, -700.0, 700.0, 300 + n);
    std::vector<double> e_s(n), e_v(n);
    k::force_backend(k::Backend::scalar);
    k::exp_array(xs, e_s);
    k::force_backend(k::Backend::avx2);
    k::exp_array(xs, e_v);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_diff(e_s[i], e_v[i]) < 1e-13);

    const auto a = random_vec(n, -3.0, 3.0, 400 + n);
    const auto b = random_vec(n, -3.0, 3.0, 500 + n);
    std::vector<double> mul_s(n), mul_v(n);
    k::force_backend(k::Backend::scalar);
    k::multiply(a, b, mul_s);
    const double sum_s = k::sum(a);
    const double dev_s = k::sum_sq_dev(a, 0.125);
    k::force_backend(k::Backend::avx2);
    k::multiply(a, b, mul_v);
    const double sum_v = k::sum(a);
    const double dev_v = k::sum_sq_dev(a, 0.125);
    CHECK(mul_s == mul_v);  // pure products, no reassociation
    // reductions reassociate, so bound the error by the magnitude sum
    double mag = 0.0;
    for (double v : a) mag += std::abs(v);
    CHECK(std::abs(sum_s - sum_v) < 1e-13 * mag);
    CHECK(rel_diff(dev_s, dev_v) < 1e-13);

    if (n % 2 == 0) {
      std::vector<double> acc_s(n / 2, 0.25), acc_v(n / 2, 0.25);
      k::force_backend(k::Backend::scalar);
      k::accumulate_sq_mag(a, 1.5, acc_s);
      k::force_backend(k::Backend::avx2);
      k::accumulate_sq_mag(a, 1.5, acc_v);
      for (std::size_t i = 0; i < n / 2; ++i)
        CHECK(rel_diff(acc_s[i], acc_v[i]) < 1e-14);
    }
  }
}
