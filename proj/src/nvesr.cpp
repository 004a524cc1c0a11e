#include "levopt/nvesr.hpp"

#include <algorithm>
#include <cmath>

#include "levopt/fitcore.hpp"
#include "levopt/kernels.hpp"

namespace levopt::nvesr {

void EsrSpectrum::validate() const {
  const std::size_t n = frequencies_hz.size();
  if (n == 0) throw std::domain_error("esr: empty spectrum");
  if (i_pl.size() != n)
    throw std::domain_error("esr: frequency/i_pl length mismatch");
  if (!sigma_i_pl.empty() && sigma_i_pl.size() != n)
    throw std::domain_error("esr: sigma length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && frequencies_hz[i] <= frequencies_hz[i - 1])
      throw std::domain_error("esr: frequencies must strictly increase");
    if (!(i_pl[i] > 0.0 && i_pl[i] <= 1.2))
      throw std::domain_error("esr: i_pl values must lie in (0, 1.2]");
    if (!sigma_i_pl.empty() && !(sigma_i_pl[i] > 0.0))
      throw std::domain_error("esr: sigma values must be positive");
  }
}

void model_esr(double d_hz, double e_hz, double amp1, double amp2,
               double sigma1_hz, double sigma2_hz, double baseline,
               std::span<const double> frequencies_hz, std::span<double> out) {
  if (!(sigma1_hz > 0.0 && sigma2_hz > 0.0))
    throw std::invalid_argument("model_esr needs positive widths");
  const std::size_t n = frequencies_hz.size();
  std::vector<double> e1(n), e2(n);
  kernels::gauss_pair(frequencies_hz, d_hz - e_hz,
                      1.0 / (2.0 * sigma1_hz * sigma1_hz), d_hz + e_hz,
                      1.0 / (2.0 * sigma2_hz * sigma2_hz), e1, e2);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = baseline - amp1 * e1[i] - amp2 * e2[i];
}

std::vector<double> model_esr(double d_hz, double e_hz, double amp1,
                              double amp2, double sigma1_hz, double sigma2_hz,
                              double baseline,
                              const std::vector<double>& frequencies_hz) {
  std::vector<double> out(frequencies_hz.size());
  model_esr(d_hz, e_hz, amp1, amp2, sigma1_hz, sigma2_hz, baseline,
            frequencies_hz, std::span<double>(out));
  return out;
}

namespace {

double upper_quartile_median(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  const std::size_t q = std::max<std::size_t>(1, v.size() / 4);
  return q % 2 ? v[q / 2] : 0.5 * (v[q / 2 - 1] + v[q / 2]);
}

std::vector<double> moving_average(const std::vector<double>& y, int half) {
  if (half <= 0) return y;
  const int n = static_cast<int>(y.size());
  std::vector<double> out(y.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += y[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// Distance from the dip to the half-depth recrossing on its cleaner flank.
// Flanks that never recross (edge dips, merged doublets) count as running to
// the scan boundary, so the minimum still reflects the usable width.
double half_depth_width(const std::vector<double>& f,
                        const std::vector<double>& ys, double baseline,
                        std::size_t dip) {
  const double target = baseline - 0.5 * (baseline - ys[dip]);
  double left = f[dip] - f.front();
  double right = f.back() - f[dip];
  for (std::size_t i = dip + 1; i < ys.size(); ++i)
    if (ys[i] >= target) {
      right = f[i] - f[dip];
      break;
    }
  for (std::size_t i = dip; i-- > 0;)
    if (ys[i] >= target) {
      left = f[dip] - f[i];
      break;
    }
  return std::min(left, right);
}

// Half width at half depth on the flank pointing away from `other`,
// converted to a Gaussian sigma.
double sigma_seed(const std::vector<double>& f, const std::vector<double>& ys,
                  double baseline, std::size_t dip, std::size_t other,
                  double fallback) {
  const double target = baseline - 0.5 * (baseline - ys[dip]);
  const bool go_right = other <= dip;
  if (go_right) {
    for (std::size_t i = dip + 1; i < ys.size(); ++i)
      if (ys[i] >= target) return (f[i] - f[dip]) / 1.1774;
  } else {
    for (std::size_t i = dip; i-- > 0;)
      if (ys[i] >= target) return (f[dip] - f[i]) / 1.1774;
  }
  return fallback;
}

EsrFitResult finish_stats(EsrFitResult res, const EsrSpectrum& spec) {
  // contrast from the fitted curve minimum on a fine grid
  const double f_lo = spec.frequencies_hz.front();
  const double f_hi = spec.frequencies_hz.back();
  double min_curve = res.baseline;
  const int grid = 2000;
  std::vector<double> fs(grid + 1), vals(grid + 1);
  for (int i = 0; i <= grid; ++i)
    fs[i] = f_lo + (f_hi - f_lo) * static_cast<double>(i) / grid;
  model_esr(res.d_hz, res.e_hz, res.amp1, res.amp2, res.sigma1_hz,
            res.sigma2_hz, res.baseline, fs, std::span<double>(vals));
  for (double v : vals) min_curve = std::min(min_curve, v);
  res.contrast = res.baseline - min_curve;
  return res;
}

EsrFitResult fit_single_gaussian(const EsrSpectrum& spec, double baseline0,
                                 std::size_t dip, double sigma0) {
  const std::vector<double>& f = spec.frequencies_hz;
  const std::vector<double>& y = spec.i_pl;
  const std::size_t n = f.size();
  const bool weighted = !spec.sigma_i_pl.empty();

  const fitcore::LmModel eval = [&](std::span<const double> p,
                                    std::span<double> r,
                                    std::span<double> jac) {
    const double d = p[0], a = p[1], s = p[2], b = p[3];
    const double inv2s2 = 1.0 / (2.0 * s * s);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = f[i] - d;
      const double e = std::exp(-t * t * inv2s2);
      const double w = weighted ? 1.0 / spec.sigma_i_pl[i] : 1.0;
      r[i] = (b - a * e - y[i]) * w;
      jac[i * 4 + 0] = -a * e * t / (s * s) * w;
      jac[i * 4 + 1] = -e * w;
      jac[i * 4 + 2] = -a * e * t * t / (s * s * s) * w;
      jac[i * 4 + 3] = w;
    }
  };
  const fitcore::LmAdmissible ok = [](std::span<const double> p) {
    return p[2] > 0.0 && p[1] >= 0.0;
  };

  std::vector<double> params = {f[dip], baseline0 - y[dip], sigma0, baseline0};
  const fitcore::LmOutcome outcome =
      fitcore::levenberg_marquardt(eval, params, n, fitcore::LmOptions{}, ok);

  EsrFitResult res;
  res.d_hz = params[0];
  res.e_hz = 0.0;
  res.amp1 = res.amp2 = 0.5 * params[1];
  res.sigma1_hz = res.sigma2_hz = params[2];
  res.baseline = params[3];
  res.degenerate = true;
  res.converged = outcome.converged;
  res.iterations = outcome.iterations;
  res.residual_norm = std::sqrt(outcome.ssr);

  std::vector<double> r(n), jac(n * 4);
  eval(params, r, jac);
  const std::vector<double> se =
      fitcore::standard_errors(jac, n, 4, outcome.ssr);
  res.stderr_d_hz = se[0];
  res.stderr_amp1 = res.stderr_amp2 = 0.5 * se[1];
  res.stderr_sigma1_hz = res.stderr_sigma2_hz = se[2];
  res.stderr_baseline = se[3];

  res = finish_stats(res, spec);
  if (!outcome.converged)
    throw FitError("fit_esr: single-Gaussian fallback did not converge", res);
  return res;
}

}  // namespace

EsrFitResult fit_esr(const EsrSpectrum& spec) {
  spec.validate();
  const std::vector<double>& f = spec.frequencies_hz;
  const std::vector<double>& y = spec.i_pl;
  const std::size_t n = f.size();
  if (n < 9) throw std::domain_error("fit_esr: too few points");

  const double baseline0 = upper_quartile_median(y);
  const std::vector<double> ys =
      moving_average(y, static_cast<int>(n) / 128);
  const double y_min = *std::min_element(ys.begin(), ys.end());
  const double depth_total = baseline0 - y_min;

  // nothing below the baseline worth fitting: flat spectrum
  if (!(depth_total > 1e-4 * std::abs(baseline0))) {
    EsrFitResult res;
    res.d_hz = 0.5 * (f.front() + f.back());
    res.e_hz = 0.0;
    res.amp1 = res.amp2 = 0.0;
    res.sigma1_hz = res.sigma2_hz = 0.125 * (f.back() - f.front());
    res.baseline = kernels::sum(y) / static_cast<double>(n);
    res.contrast = 0.0;
    res.degenerate = true;
    res.converged = true;
    return res;
  }

  // deepest dip first; its measured width defines an exclusion zone so that
  // noise wiggles inside the same resonance cannot pose as a second dip
  const double span = f.back() - f.front();
  std::size_t dip1 = static_cast<std::size_t>(
      std::min_element(ys.begin(), ys.end()) - ys.begin());
  const double w1 = half_depth_width(f, ys, baseline0, dip1);
  const double mask =
      std::max(2.0 * w1, 3.0 * span / static_cast<double>(n - 1));

  std::size_t dip2 = n;
  double depth2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(f[i] - f[dip1]) <= mask) continue;
    if (baseline0 - ys[i] > depth2) {
      depth2 = baseline0 - ys[i];
      dip2 = i;
    }
  }

  if (dip2 == n || depth2 < 0.3 * depth_total)
    return fit_single_gaussian(spec, baseline0, dip1,
                               std::max(0.85 * w1, 0.02 * span));

  if (f[dip1] > f[dip2]) std::swap(dip1, dip2);
  const double sep = f[dip2] - f[dip1];
  const double sig1 = sigma_seed(f, ys, baseline0, dip1, dip2, 0.25 * sep);
  const double sig2 = sigma_seed(f, ys, baseline0, dip2, dip1, 0.25 * sep);

  const bool weighted = !spec.sigma_i_pl.empty();
  std::vector<double> e1(n), e2(n);

  // p = (d, e, a1, a2, s1, s2, baseline)
  const fitcore::LmModel eval = [&](std::span<const double> p,
                                    std::span<double> r,
                                    std::span<double> jac) {
    const double d = p[0], e = p[1], a1 = p[2], a2 = p[3];
    const double s1 = p[4], s2 = p[5], b = p[6];
    const double c1 = d - e, c2 = d + e;
    kernels::gauss_pair(f, c1, 1.0 / (2.0 * s1 * s1), c2,
                        1.0 / (2.0 * s2 * s2), e1, e2);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weighted ? 1.0 / spec.sigma_i_pl[i] : 1.0;
      const double t1 = (f[i] - c1) / (s1 * s1);
      const double t2 = (f[i] - c2) / (s2 * s2);
      const double g1 = a1 * e1[i];
      const double g2 = a2 * e2[i];
      r[i] = (b - g1 - g2 - y[i]) * w;
      jac[i * 7 + 0] = (-g1 * t1 - g2 * t2) * w;
      jac[i * 7 + 1] = (g1 * t1 - g2 * t2) * w;
      jac[i * 7 + 2] = -e1[i] * w;
      jac[i * 7 + 3] = -e2[i] * w;
      jac[i * 7 + 4] = -g1 * t1 * (f[i] - c1) / s1 * w;
      jac[i * 7 + 5] = -g2 * t2 * (f[i] - c2) / s2 * w;
      jac[i * 7 + 6] = w;
    }
  };
  const fitcore::LmAdmissible ok = [&](std::span<const double> p) {
    return p[1] >= 0.0 && p[2] >= 0.0 && p[3] >= 0.0 && p[4] > 0.0 &&
           p[5] > 0.0;
  };

  std::vector<double> params = {
      0.5 * (f[dip1] + f[dip2]), 0.5 * sep,       baseline0 - ys[dip1],
      baseline0 - ys[dip2],      sig1,            sig2,
      baseline0};
  const fitcore::LmOutcome outcome =
      fitcore::levenberg_marquardt(eval, params, n, fitcore::LmOptions{}, ok);

  EsrFitResult res;
  res.d_hz = params[0];
  res.e_hz = params[1];
  res.amp1 = params[2];
  res.amp2 = params[3];
  res.sigma1_hz = params[4];
  res.sigma2_hz = params[5];
  res.baseline = params[6];
  res.converged = outcome.converged;
  res.iterations = outcome.iterations;
  res.residual_norm = std::sqrt(outcome.ssr);

  std::vector<double> r(n), jac(n * 7);
  eval(params, r, jac);
  const std::vector<double> se =
      fitcore::standard_errors(jac, n, 7, outcome.ssr);
  res.stderr_d_hz = se[0];
  res.stderr_e_hz = se[1];
  res.stderr_amp1 = se[2];
  res.stderr_amp2 = se[3];
  res.stderr_sigma1_hz = se[4];
  res.stderr_sigma2_hz = se[5];
  res.stderr_baseline = se[6];

  res = finish_stats(res, spec);
  if (!outcome.converged)
    throw FitError("fit_esr: no convergence within the iteration budget", res);
  return res;
}

NvThermometer NvThermometer::with_strain(double strain_hz) const {
  NvThermometer out = *this;
  out.strain_shift_hz = strain_hz;
  return out;
}

double NvThermometer::polynomial_hz(double t_k) const {
  return a0_hz + t_k * (a1_hz_per_k + t_k * (a2_hz_per_k2 + t_k * a3_hz_per_k3));
}

void NvThermometer::check_monotone() const {
  if (!(t_min_k < t_max_k))
    throw std::domain_error("thermometer: empty valid range");
  const int samples = 451;
  for (int i = 0; i < samples; ++i) {
    const double t =
        t_min_k + (t_max_k - t_min_k) * static_cast<double>(i) / (samples - 1);
    const double slope =
        a1_hz_per_k + t * (2.0 * a2_hz_per_k2 + t * 3.0 * a3_hz_per_k3);
    if (!(slope < 0.0))
      throw std::domain_error(
          "thermometer: D(T) is not strictly decreasing on the valid range");
  }
}

double temperature_to_splitting(double t_k, const NvThermometer& th,
                                double gas_pressure_pa) {
  if (!(t_k >= th.t_min_k && t_k <= th.t_max_k))
    throw std::domain_error("temperature outside the valid range [" +
                            std::to_string(th.t_min_k) + ", " +
                            std::to_string(th.t_max_k) + "] K");
  return th.polynomial_hz(t_k) + th.pressure_coeff_hz_per_pa * gas_pressure_pa +
         th.strain_shift_hz;
}

double splitting_to_temperature(double d_hz, const NvThermometer& th,
                                double gas_pressure_pa) {
  const double shift =
      th.pressure_coeff_hz_per_pa * gas_pressure_pa + th.strain_shift_hz;
  const double d_corr = d_hz - shift;
  const double d_hi = th.polynomial_hz(th.t_min_k);  // decreasing polynomial
  const double d_lo = th.polynomial_hz(th.t_max_k);
  if (!(d_corr >= d_lo && d_corr <= d_hi))
    throw std::out_of_range(
        "splitting outside the achievable band: D must lie in [" +
        std::to_string(d_lo + shift) + ", " + std::to_string(d_hi + shift) +
        "] Hz for this thermometer and pressure");
  double lo = th.t_min_k, hi = th.t_max_k;
  for (int i = 0; i < 100 && (hi - lo) > 1e-5; ++i) {
    const double mid = 0.5 * (lo + hi);
    (th.polynomial_hz(mid) > d_corr ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

StrainCalibration calibrate_strain(
    const std::vector<std::pair<double, double>>& power_w_vs_d_hz,
    const NvThermometer& th, double gas_pressure_pa,
    double room_temperature_k) {
  if (power_w_vs_d_hz.size() < 2)
    throw std::invalid_argument("calibrate_strain: need at least 2 powers");
  std::vector<double> powers, ds;
  for (const auto& [p, d] : power_w_vs_d_hz) {
    powers.push_back(p);
    ds.push_back(d);
  }
  bool distinct = false;
  for (double p : powers)
    if (p != powers.front()) distinct = true;
  if (!distinct)
    throw std::invalid_argument("calibrate_strain: powers must be distinct");
  if (!(room_temperature_k > th.t_min_k && room_temperature_k < th.t_max_k))
    throw std::invalid_argument(
        "calibrate_strain: room temperature outside the thermometer range");

  // strain values for which every observation inverts to a temperature
  const double pshift = th.pressure_coeff_hz_per_pa * gas_pressure_pa;
  const double d_hi = th.polynomial_hz(th.t_min_k);
  const double d_lo = th.polynomial_hz(th.t_max_k);
  double lo = -20e6, hi = 20e6;
  for (double d : ds) {
    lo = std::max(lo, d - pshift - d_hi);
    hi = std::min(hi, d - pshift - d_lo);
  }
  lo += 1.0;  // stay strictly inside the achievable band
  hi -= 1.0;
  if (!(lo < hi))
    throw CalibrationError(
        "calibrate_strain: no strain in [-20, +20] MHz makes all "
        "observations invertible");

  const auto intercept_at = [&](double strain) {
    const NvThermometer cand = th.with_strain(strain);
    std::vector<double> temps(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
      temps[i] = splitting_to_temperature(ds[i], cand, gas_pressure_pa);
    return fitcore::linear_fit(powers, temps);
  };

  // the zero-power intercept grows monotonically with the strain shift
  double g_lo = intercept_at(lo).intercept - room_temperature_k;
  double g_hi = intercept_at(hi).intercept - room_temperature_k;
  if (g_lo > 0.0 || g_hi < 0.0)
    throw CalibrationError(
        "calibrate_strain: intercept cannot reach " +
        std::to_string(room_temperature_k) +
        " K for any strain in the bracket");
  for (int i = 0; i < 80 && (hi - lo) > 0.5; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((intercept_at(mid).intercept - room_temperature_k) < 0.0 ? lo : hi) = mid;
  }
  const double strain = 0.5 * (lo + hi);

  StrainCalibration cal;
  cal.strain_shift_hz = strain;
  cal.calibrated = th.with_strain(strain);
  for (double d : ds)
    cal.temperatures_k.push_back(
        splitting_to_temperature(d, cal.calibrated, gas_pressure_pa));
  const fitcore::LinearFit line = fitcore::linear_fit(powers, cal.temperatures_k);
  cal.slope_k_per_w = line.slope;
  cal.intercept_k = line.intercept;
  cal.r_squared = line.r_squared;
  cal.slope_warning = !(line.slope > 0.0);
  return cal;
}

}  // namespace levopt::nvesr
