#pragma once

#include <functional>
#include <span>
#include <vector>

// Small shared fitting machinery: straight-line least squares and a damped
// Gauss-Newton (Levenberg) driver for the few-parameter nonlinear models in
// this toolkit.

namespace levopt::fitcore {

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 1.0;
  double residual_norm = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Solves A x = b for symmetric positive definite A (row-major n*n) in place.
// Returns false if the factorization breaks down.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, int n);

struct LmOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;    // on the max parameter step
  double initial_lambda = 1e-3;
};

struct LmOutcome {
  bool converged = false;
  int iterations = 0;
  double ssr = 0.0;  // weighted sum of squared residuals at exit
};

// Fills residuals (size n) and the row-major Jacobian d r_i / d p_j
// (size n*p) at the given parameters.
using LmModel = std::function<void(std::span<const double> params,
                                   std::span<double> residuals,
                                   std::span<double> jacobian)>;

// Optional predicate rejecting parameter vectors outside the admissible
// region (the step is retried with stronger damping).
using LmAdmissible = std::function<bool(std::span<const double> params)>;

LmOutcome levenberg_marquardt(const LmModel& model, std::vector<double>& params,
                              std::size_t n_residuals, const LmOptions& opts,
                              const LmAdmissible& admissible = nullptr);

// Parameter covariance from the local quadratic approximation at the
// solution: ssr/(n-p) * (J^T J)^-1. Returns standard errors (sqrt of the
// diagonal), or zeros if J^T J is singular.
std::vector<double> standard_errors(std::span<const double> jacobian,
                                    std::size_t n_residuals,
                                    std::size_t n_params, double ssr);

}  // namespace levopt::fitcore
