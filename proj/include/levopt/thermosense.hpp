#pragma once

#include <utility>
#include <vector>

namespace levopt::thermosense {

// T(P) = t0 + alpha / P : gas cooling proportional to pressure in the
// molecular regime, laser heating fixed.
struct PressureTempModel {
  double t0_k = 0.0;
  double alpha_k_pa = 0.0;
  double residual_norm = 0.0;
  double r_squared = 1.0;
};

// Linear least squares in the variable 1/P. Needs at least two distinct
// pressures.
PressureTempModel fit_pressure_temperature(
    const std::vector<std::pair<double, double>>& pressure_pa_temperature_k);

double predict_temperature(const PressureTempModel& m, double pressure_pa);

// Photon-count difference between oxygen and an inert reference gas, linear
// in the oxygen pressure over the calibrated range.
struct O2Calibration {
  double slope_photons_per_s_pa = 0.0;
  double intercept_photons_per_s = 0.0;
};

double o2_count_difference(const O2Calibration& c, double pressure_pa);
// Exact algebraic inverse; throws std::out_of_range if the implied pressure
// is negative.
double infer_pressure(const O2Calibration& c, double counts_per_s);

O2Calibration fit_o2_calibration(
    const std::vector<std::pair<double, double>>& pressure_pa_counts_per_s);

// Quenched-shell estimate: count_ratio ~ r_inner^3 / r^3, thickness is
// r - r_inner. count_ratio must lie in (0, 1].
double surface_shell_thickness(double count_ratio, double radius_m);

}  // namespace levopt::thermosense
