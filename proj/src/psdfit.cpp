#include "levopt/psdfit.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "levopt/fitcore.hpp"
#include "levopt/kernels.hpp"

namespace levopt::psdfit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct FftwPlan {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit FftwPlan(std::size_t n) {
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace

PsdEstimate estimate_psd(const dynamics::Trajectory& traj,
                         std::size_t segment_length, double overlap) {
  const std::vector<double>& x = traj.positions_m;
  if (!(traj.dt_s > 0.0))
    throw std::invalid_argument("trajectory needs a positive dt");
  if (segment_length < 16 || segment_length % 2 != 0)
    throw std::invalid_argument("segment_length must be even and >= 16");
  if (x.size() < segment_length)
    throw std::domain_error("trajectory shorter than one segment");
  if (!(overlap >= 0.0 && overlap <= 0.9))
    throw std::invalid_argument("overlap must lie in [0, 0.9]");

  const std::size_t len = segment_length;
  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(static_cast<double>(len) * (1.0 - overlap))));
  const std::size_t n_seg = (x.size() - len) / hop + 1;
  const double fs = 1.0 / traj.dt_s;
  const std::size_t n_bins = len / 2 + 1;

  std::vector<double> window(len);
  double win_power = 0.0;  // sum of squared window samples
  for (std::size_t j = 0; j < len; ++j) {
    window[j] =
        0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(j) /
                              static_cast<double>(len)));
    win_power += window[j] * window[j];
  }

  FftwPlan fft(len);
  std::vector<double> centered(len);
  std::vector<double> acc(n_bins, 0.0);
  // periodogram scale 1/(fs * sum w^2), averaged over segments
  const double scale = 1.0 / (static_cast<double>(n_seg) * fs * win_power);

  for (std::size_t s = 0; s < n_seg; ++s) {
    const std::span<const double> seg(x.data() + s * hop, len);
    const double mean =
        kernels::sum(seg) / static_cast<double>(len);
    for (std::size_t j = 0; j < len; ++j) centered[j] = seg[j] - mean;
    kernels::multiply(centered, window, std::span<double>(fft.in, len));
    fftw_execute(fft.plan);
    kernels::accumulate_sq_mag(
        std::span<const double>(reinterpret_cast<const double*>(fft.out),
                                2 * n_bins),
        scale, acc);
  }
  // one-sided: double everything except DC and Nyquist
  for (std::size_t k = 1; k + 1 < n_bins; ++k) acc[k] *= 2.0;

  PsdEstimate est;
  est.n_averages = n_seg;
  est.values_m2_per_hz = std::move(acc);
  est.frequencies_hz.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    est.frequencies_hz[k] =
        static_cast<double>(k) * fs / static_cast<double>(len);
  return est;
}

void model_psd(double s0, double gamma0_rad_s, double omega_x_rad_s,
               std::span<const double> frequencies_hz, std::span<double> out) {
  if (!(s0 > 0.0 && gamma0_rad_s > 0.0 && omega_x_rad_s > 0.0))
    throw std::invalid_argument("model_psd needs positive parameters");
  kernels::psd_model(s0, gamma0_rad_s, omega_x_rad_s, frequencies_hz, out);
}

std::vector<double> model_psd(double s0, double gamma0_rad_s,
                              double omega_x_rad_s,
                              const std::vector<double>& frequencies_hz) {
  std::vector<double> out(frequencies_hz.size());
  model_psd(s0, gamma0_rad_s, omega_x_rad_s, frequencies_hz,
            std::span<double>(out));
  return out;
}

namespace {

InitialGuess seed_from_spectrum(const std::vector<double>& f,
                                const std::vector<double>& y) {
  std::size_t peak = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[peak]) peak = i;
  if (!(y[peak] > 0.0))
    throw std::domain_error("fit_psd: spectrum has no positive values");
  const double half = 0.5 * y[peak];

  // half-maximum crossings on both flanks, linearly interpolated
  double f_lo = f.front(), f_hi = f.back();
  bool have_lo = false, have_hi = false;
  for (std::size_t i = peak; i-- > 0;) {
    if (y[i] <= half) {
      const double t = (half - y[i]) / (y[i + 1] - y[i]);
      f_lo = f[i] + t * (f[i + 1] - f[i]);
      have_lo = true;
      break;
    }
  }
  for (std::size_t i = peak + 1; i < y.size(); ++i) {
    if (y[i] <= half) {
      const double t = (half - y[i - 1]) / (y[i] - y[i - 1]);
      f_hi = f[i - 1] + t * (f[i] - f[i - 1]);
      have_hi = true;
      break;
    }
  }
  const double f_peak = f[peak];
  double width;
  if (have_lo && have_hi)
    width = f_hi - f_lo;
  else if (have_hi)
    width = 2.0 * (f_hi - f_peak);
  else if (have_lo)
    width = 2.0 * (f_peak - f_lo);
  else
    width = 0.2 * f_peak;
  width = std::max(width, f_peak * 1e-3);

  InitialGuess g;
  g.omega_x_rad_s = kTwoPi * f_peak;
  g.gamma0_rad_s = kTwoPi * width;
  g.s0 = y[peak] * g.omega_x_rad_s * g.omega_x_rad_s * g.gamma0_rad_s;
  return g;
}

}  // namespace

PsdFitResult fit_psd(const PsdEstimate& psd, std::optional<InitialGuess> guess) {
  if (psd.frequencies_hz.size() != psd.values_m2_per_hz.size())
    throw std::invalid_argument("fit_psd: ragged estimate");
  if (psd.n_averages == 0)
    throw std::invalid_argument("fit_psd: n_averages must be at least 1");

  // drop the DC bin; the model is fit on f > 0
  std::vector<double> f, y;
  f.reserve(psd.frequencies_hz.size());
  y.reserve(psd.frequencies_hz.size());
  for (std::size_t i = 0; i < psd.frequencies_hz.size(); ++i) {
    if (i > 0 && psd.frequencies_hz[i] <= psd.frequencies_hz[i - 1])
      throw std::invalid_argument("fit_psd: frequencies must increase");
    if (psd.values_m2_per_hz[i] < 0.0)
      throw std::invalid_argument("fit_psd: negative spectral value");
    if (psd.frequencies_hz[i] > 0.0) {
      f.push_back(psd.frequencies_hz[i]);
      y.push_back(psd.values_m2_per_hz[i]);
    }
  }
  if (f.size() < 8) throw std::domain_error("fit_psd: too few frequency bins");

  const InitialGuess g = guess ? *guess : seed_from_spectrum(f, y);
  if (!(g.s0 > 0.0 && g.gamma0_rad_s > 0.0 && g.omega_x_rad_s > 0.0))
    throw std::invalid_argument("fit_psd: initial guess must be positive");
  if (f.back() < 2.0 * g.omega_x_rad_s / kTwoPi)
    throw std::invalid_argument(
        "fit_psd: spectrum must extend to at least twice the resonance "
        "frequency");

  const std::size_t n = f.size();
  std::vector<double> model(n), dln_g(n), dln_w(n);

  // log-parameter space with relative residuals (y - m)/m
  const fitcore::LmModel eval = [&](std::span<const double> p,
                                    std::span<double> r,
                                    std::span<double> jac) {
    const double s0 = std::exp(p[0]);
    const double gamma = std::exp(p[1]);
    const double omega = std::exp(p[2]);
    kernels::psd_model_logjac(s0, gamma, omega, f, model, dln_g, dln_w);
    for (std::size_t i = 0; i < n; ++i) {
      const double ratio = y[i] / model[i];
      r[i] = ratio - 1.0;
      jac[i * 3 + 0] = -ratio;
      jac[i * 3 + 1] = -ratio * dln_g[i];
      jac[i * 3 + 2] = -ratio * dln_w[i];
    }
  };
  const fitcore::LmAdmissible sane = [](std::span<const double> p) {
    for (double v : p)
      if (!(v > -700.0 && v < 700.0)) return false;
    return true;
  };

  std::vector<double> params = {std::log(g.s0), std::log(g.gamma0_rad_s),
                                std::log(g.omega_x_rad_s)};
  fitcore::LmOptions opts;  // 200 iterations, relative step 1e-10
  const fitcore::LmOutcome outcome =
      fitcore::levenberg_marquardt(eval, params, n, opts, sane);

  PsdFitResult res;
  res.s0 = std::exp(params[0]);
  res.gamma0_rad_s = std::exp(params[1]);
  res.omega_x_rad_s = std::exp(params[2]);
  res.iterations = outcome.iterations;
  res.converged = outcome.converged;
  res.residual_norm = std::sqrt(outcome.ssr);
  res.low_confidence = res.gamma0_rad_s > 3.0 * res.omega_x_rad_s;

  std::vector<double> r(n), jac(n * 3);
  eval(params, r, jac);
  const std::vector<double> se_log =
      fitcore::standard_errors(jac, n, 3, outcome.ssr);
  res.stderr_s0 = res.s0 * se_log[0];
  res.stderr_gamma0_rad_s = res.gamma0_rad_s * se_log[1];
  res.stderr_omega_x_rad_s = res.omega_x_rad_s * se_log[2];

  if (!outcome.converged)
    throw FitError("fit_psd: no convergence within the iteration budget", res);
  return res;
}

}  // namespace levopt::psdfit
