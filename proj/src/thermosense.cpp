#include "levopt/thermosense.hpp"

#include <cmath>
#include <stdexcept>

#include "levopt/fitcore.hpp"

namespace levopt::thermosense {

PressureTempModel fit_pressure_temperature(
    const std::vector<std::pair<double, double>>& pressure_pa_temperature_k) {
  if (pressure_pa_temperature_k.size() < 2)
    throw std::invalid_argument("fit_pressure_temperature: need >= 2 points");
  std::vector<double> inv_p, temp;
  for (const auto& [p, t] : pressure_pa_temperature_k) {
    if (!(p > 0.0))
      throw std::invalid_argument(
          "fit_pressure_temperature: pressures must be positive");
    inv_p.push_back(1.0 / p);
    temp.push_back(t);
  }
  bool distinct = false;
  for (double v : inv_p)
    if (v != inv_p.front()) distinct = true;
  if (!distinct)
    throw std::invalid_argument(
        "fit_pressure_temperature: all pressures identical, line is "
        "underdetermined");

  const fitcore::LinearFit line = fitcore::linear_fit(inv_p, temp);
  PressureTempModel m;
  m.t0_k = line.intercept;
  m.alpha_k_pa = line.slope;
  m.residual_norm = line.residual_norm;
  m.r_squared = line.r_squared;
  return m;
}

double predict_temperature(const PressureTempModel& m, double pressure_pa) {
  if (!(pressure_pa > 0.0))
    throw std::invalid_argument("predict_temperature: pressure must be positive");
  return m.t0_k + m.alpha_k_pa / pressure_pa;
}

double o2_count_difference(const O2Calibration& c, double pressure_pa) {
  if (pressure_pa < 0.0)
    throw std::invalid_argument("o2_count_difference: negative pressure");
  return c.slope_photons_per_s_pa * pressure_pa + c.intercept_photons_per_s;
}

double infer_pressure(const O2Calibration& c, double counts_per_s) {
  if (c.slope_photons_per_s_pa == 0.0)
    throw std::invalid_argument("infer_pressure: zero calibration slope");
  const double p =
      (counts_per_s - c.intercept_photons_per_s) / c.slope_photons_per_s_pa;
  if (p < 0.0)
    throw std::out_of_range(
        "infer_pressure: counts below the calibration intercept imply a "
        "negative pressure");
  return p;
}

O2Calibration fit_o2_calibration(
    const std::vector<std::pair<double, double>>& pressure_pa_counts_per_s) {
  if (pressure_pa_counts_per_s.size() < 2)
    throw std::invalid_argument("fit_o2_calibration: need >= 2 points");
  std::vector<double> p, c;
  for (const auto& [pp, cc] : pressure_pa_counts_per_s) {
    p.push_back(pp);
    c.push_back(cc);
  }
  bool distinct = false;
  for (double v : p)
    if (v != p.front()) distinct = true;
  if (!distinct)
    throw std::invalid_argument("fit_o2_calibration: distinct pressures needed");
  const fitcore::LinearFit line = fitcore::linear_fit(p, c);
  O2Calibration cal;
  cal.slope_photons_per_s_pa = line.slope;
  cal.intercept_photons_per_s = line.intercept;
  return cal;
}

double surface_shell_thickness(double count_ratio, double radius_m) {
  if (!(count_ratio > 0.0 && count_ratio <= 1.0))
    throw std::domain_error("surface_shell_thickness: ratio must be in (0, 1]");
  if (!(radius_m > 0.0))
    throw std::domain_error("surface_shell_thickness: radius must be positive");
  return radius_m * (1.0 - std::cbrt(count_ratio));
}

}  // namespace levopt::thermosense
