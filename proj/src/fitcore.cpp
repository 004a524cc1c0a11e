#include "levopt/fitcore.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

namespace levopt::fitcore {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  LinearFit fit;
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.residual_norm = std::sqrt(ss_res);
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int k = 0; k < n; ++k) {
    double d = a[k * n + k];
    for (int j = 0; j < k; ++j) d -= a[k * n + j] * a[k * n + j];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double lkk = std::sqrt(d);
    a[k * n + k] = lkk;
    for (int i = k + 1; i < n; ++i) {
      double s = a[i * n + k];
      for (int j = 0; j < k; ++j) s -= a[i * n + j] * a[k * n + j];
      a[i * n + k] = s / lkk;
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int j = 0; j < i; ++j) s -= a[i * n + j] * b[j];
    b[i] = s / a[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[j * n + i] * b[j];
    b[i] = s / a[i * n + i];
  }
  return true;
}

namespace {

double sum_sq(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

}  // namespace

LmOutcome levenberg_marquardt(const LmModel& model, std::vector<double>& params,
                              std::size_t n_residuals, const LmOptions& opts,
                              const LmAdmissible& admissible) {
  const std::size_t np = params.size();
  std::vector<double> r(n_residuals), jac(n_residuals * np);
  std::vector<double> r_try(n_residuals), jac_try(n_residuals * np);
  std::vector<double> normal(np * np), rhs(np), trial(np);

  model(params, r, jac);
  double ssr = sum_sq(r);

  LmOutcome out;
  out.ssr = ssr;
  double lambda = opts.initial_lambda;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // J^T J and J^T r
    for (std::size_t a = 0; a < np; ++a) {
      for (std::size_t b = a; b < np; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_residuals; ++i)
          s += jac[i * np + a] * jac[i * np + b];
        normal[a * np + b] = s;
        normal[b * np + a] = s;
      }
      double g = 0.0;
      for (std::size_t i = 0; i < n_residuals; ++i)
        g += jac[i * np + a] * r[i];
      rhs[a] = g;
    }

    bool stepped = false;
    while (lambda <= 1e12) {
      std::vector<double> damped = normal;
      std::vector<double> delta = rhs;
      for (std::size_t a = 0; a < np; ++a) {
        const double d = damped[a * np + a];
        damped[a * np + a] = d > 0.0 ? d * (1.0 + lambda) : lambda;
      }
      if (!cholesky_solve(damped, delta, static_cast<int>(np))) {
        lambda *= 10.0;
        continue;
      }
      for (std::size_t a = 0; a < np; ++a) trial[a] = params[a] - delta[a];
      if (admissible && !admissible(trial)) {
        lambda *= 10.0;
        continue;
      }
      model(trial, r_try, jac_try);
      const double ssr_try = sum_sq(r_try);
      if (std::isfinite(ssr_try) && ssr_try <= ssr) {
        bool small_step = true;
        for (std::size_t a = 0; a < np; ++a)
          if (std::abs(delta[a]) >
              opts.step_tolerance * (1.0 + std::abs(params[a])))
            small_step = false;
        params = trial;
        r.swap(r_try);
        jac.swap(jac_try);
        ssr = ssr_try;
        lambda = std::max(lambda * 0.1, 1e-12);
        stepped = true;
        ++out.iterations;
        if (small_step) {
          out.converged = true;
          out.ssr = ssr;
          return out;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;  // damping exhausted, local minimum as good as found
  }
  out.ssr = ssr;
  return out;
}

std::vector<double> standard_errors(std::span<const double> jacobian,
                                    std::size_t n_residuals,
                                    std::size_t n_params, double ssr) {
  std::vector<double> se(n_params, 0.0);
  if (n_residuals <= n_params) return se;
  std::vector<double> normal(n_params * n_params);
  for (std::size_t a = 0; a < n_params; ++a)
    for (std::size_t b = a; b < n_params; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_residuals; ++i)
        s += jacobian[i * n_params + a] * jacobian[i * n_params + b];
      normal[a * n_params + b] = s;
      normal[b * n_params + a] = s;
    }
  const double variance =
      ssr / static_cast<double>(n_residuals - n_params);
  // diagonal of (J^T J)^-1 column by column
  for (std::size_t a = 0; a < n_params; ++a) {
    std::vector<double> chol = normal;
    std::vector<double> e(n_params, 0.0);
    e[a] = 1.0;
    if (!cholesky_solve(chol, e, static_cast<int>(n_params)))
      return std::vector<double>(n_params, 0.0);
    se[a] = e[a] > 0.0 ? std::sqrt(variance * e[a]) : 0.0;
  }
  return se;
}

}  // namespace levopt::fitcore
