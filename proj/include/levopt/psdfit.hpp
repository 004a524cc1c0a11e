#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "levopt/dynamics.hpp"

namespace levopt::psdfit {

// One-sided power spectral density estimate on a uniform frequency grid.
// Normalized so that the integral over frequency equals the sample variance
// of the input.
struct PsdEstimate {
  std::vector<double> frequencies_hz;
  std::vector<double> values_m2_per_hz;
  std::size_t n_averages = 0;
};

struct PsdFitResult {
  double s0 = 0.0;             // spectral amplitude parameter
  double gamma0_rad_s = 0.0;   // damping rate
  double omega_x_rad_s = 0.0;  // trap frequency
  double stderr_s0 = 0.0;
  double stderr_gamma0_rad_s = 0.0;
  double stderr_omega_x_rad_s = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  // The fit degrades once the motion is strongly overdamped; results with
  // gamma0 > 3 omega_x are flagged rather than rejected.
  bool low_confidence = false;
};

// Thrown when the optimizer exhausts its iteration budget; carries the
// best parameters seen so far.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, PsdFitResult best)
      : std::runtime_error(what), best_so_far(std::move(best)) {}
  PsdFitResult best_so_far;
};

struct InitialGuess {
  double s0;
  double gamma0_rad_s;
  double omega_x_rad_s;
};

// Welch averaged periodogram (Hann window, mean-removed segments,
// variance-preserving normalization). overlap is the fraction of
// segment_length shared by consecutive segments, in [0, 0.9].
PsdEstimate estimate_psd(const dynamics::Trajectory& traj,
                         std::size_t segment_length, double overlap);

// S_x(2 pi f) = s0 * gamma0 / ((omega_x^2 - w^2)^2 + w^2 gamma0^2).
// This is the two-sided spectral form; its integral over the whole frequency
// line equals s0 / (2 omega_x^2). A one-sided estimate of the same motion
// reads 2x this curve.
void model_psd(double s0, double gamma0_rad_s, double omega_x_rad_s,
               std::span<const double> frequencies_hz, std::span<double> out);
std::vector<double> model_psd(double s0, double gamma0_rad_s,
                              double omega_x_rad_s,
                              const std::vector<double>& frequencies_hz);

// Weighted nonlinear least squares of model_psd against the estimate, with
// per-bin relative weights (equivalent to fitting the log-PSD). Without an
// initial guess, omega_x is seeded at the spectral peak, gamma0 at its full
// width at half maximum and s0 from the peak height.
PsdFitResult fit_psd(const PsdEstimate& psd,
                     std::optional<InitialGuess> guess = std::nullopt);

}  // namespace levopt::psdfit
