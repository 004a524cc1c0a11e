#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace levopt::nvesr {

// Normalized ESR scan: fluorescence ratio with/without microwave drive
// versus microwave frequency. sigma_i_pl may be empty (unweighted fit).
struct EsrSpectrum {
  std::vector<double> frequencies_hz;
  std::vector<double> i_pl;
  std::vector<double> sigma_i_pl;

  void validate() const;  // throws std::domain_error on invariant violation
};

// Double-Gaussian resonance fit. Dips sit at d - e and d + e (e is the
// half-separation, so the dip spacing is 2e).
struct EsrFitResult {
  double d_hz = 0.0;
  double e_hz = 0.0;
  double amp1 = 0.0;
  double amp2 = 0.0;
  double sigma1_hz = 0.0;
  double sigma2_hz = 0.0;
  double baseline = 1.0;
  double contrast = 0.0;  // baseline minus the fitted curve minimum
  double stderr_d_hz = 0.0;
  double stderr_e_hz = 0.0;
  double stderr_amp1 = 0.0;
  double stderr_amp2 = 0.0;
  double stderr_sigma1_hz = 0.0;
  double stderr_sigma2_hz = 0.0;
  double stderr_baseline = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // fewer than two resolvable dips; e forced to 0
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, EsrFitResult best)
      : std::runtime_error(what), best_so_far(std::move(best)) {}
  EsrFitResult best_so_far;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// i_pl(f) = baseline - amp1 exp(-(f-(d-e))^2 / 2 sigma1^2)
//                    - amp2 exp(-(f-(d+e))^2 / 2 sigma2^2)
void model_esr(double d_hz, double e_hz, double amp1, double amp2,
               double sigma1_hz, double sigma2_hz, double baseline,
               std::span<const double> frequencies_hz, std::span<double> out);
std::vector<double> model_esr(double d_hz, double e_hz, double amp1,
                              double amp2, double sigma1_hz, double sigma2_hz,
                              double baseline,
                              const std::vector<double>& frequencies_hz);

EsrFitResult fit_esr(const EsrSpectrum& spec);

// D(T) = a0 + a1 T + a2 T^2 + a3 T^3 plus pressure and per-particle strain
// shifts. Strictly decreasing over the valid range, which makes the
// temperature inversion unique; verified by sampling at construction.
struct NvThermometer {
  double a0_hz = 2.8697e9;
  double a1_hz_per_k = 9.7e4;       //  9.7e-5  GHz/K
  double a2_hz_per_k2 = -370.0;     // -3.7e-7  GHz/K^2
  double a3_hz_per_k3 = 0.17;       //  1.7e-10 GHz/K^3
  double pressure_coeff_hz_per_pa = 1.5e3 / 1.0e5;  // 1.5 kHz/bar
  double strain_shift_hz = 0.0;
  double t_min_k = 250.0;
  double t_max_k = 700.0;

  NvThermometer() { check_monotone(); }
  NvThermometer with_strain(double strain_hz) const;

  double polynomial_hz(double t_k) const;  // D(T) without shifts
  void check_monotone() const;             // throws std::domain_error
};

double temperature_to_splitting(double t_k, const NvThermometer& th,
                                double gas_pressure_pa);

// Solves the cubic for the unique temperature in the valid range (bisection
// to well under 1 mK). Throws std::out_of_range naming the admissible
// splitting interval when d is outside the achievable band.
double splitting_to_temperature(double d_hz, const NvThermometer& th,
                                double gas_pressure_pa);

struct StrainCalibration {
  double strain_shift_hz = 0.0;
  std::vector<double> temperatures_k;  // per observation, at the solution
  double slope_k_per_w = 0.0;
  double intercept_k = 0.0;
  double r_squared = 0.0;
  bool slope_warning = false;  // temperature should increase with power
  NvThermometer calibrated;
};

// Finds the per-particle strain shift such that the straight line through
// (power, inferred temperature) extrapolates to room temperature at zero
// power. Root-finds on strain in [-20, +20] MHz, using that each inferred
// temperature is monotone in the strain shift.
StrainCalibration calibrate_strain(
    const std::vector<std::pair<double, double>>& power_w_vs_d_hz,
    const NvThermometer& th, double gas_pressure_pa,
    double room_temperature_k = 296.0);

}  // namespace levopt::nvesr
