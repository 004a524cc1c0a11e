#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "levopt/gaskin.hpp"

namespace levopt::dynamics {

// Harmonic trap when depth is infinite, otherwise a 1-D Gaussian well
//   U(x) = -depth * exp(-2 x^2 / waist^2)
// whose rim (escape boundary) is taken at |x| = 3 waist.
struct TrapModel {
  double omega_x_rad_s;
  double depth_j = std::numeric_limits<double>::infinity();
  double waist_m = 0.0;

  TrapModel(double omega_x_rad_s,
            double depth_j = std::numeric_limits<double>::infinity(),
            double waist_m = 0.0);

  bool harmonic() const;

  // Finite well with omega_x set to the curvature frequency at the bottom,
  // sqrt(4 depth / (m waist^2)) for a particle of the given mass.
  static TrapModel gaussian_well(double depth_j, double waist_m,
                                 double mass_kg);
};

// Exact one-step update of the damped harmonic Langevin system:
//   z' = M z + L xi,  z = (x, v),  xi a standard normal pair,
// with M the matrix exponential of the drift over dt and L the Cholesky
// factor of the one-step noise covariance Q = P_inf - M P_inf M^T. Exposed
// so the propagator can be checked against closed-form decay on its own.
struct ExactPropagator {
  double m11, m12, m21, m22;
  double l11, l21, l22;

  ExactPropagator(double omega_x_rad_s, double gamma0_rad_s, double mass_kg,
                  double temperature_k, double dt_s);

  void step(double& x, double& v, double n1, double n2) const {
    const double xn = m11 * x + m12 * v + l11 * n1;
    const double vn = m21 * x + m22 * v + l21 * n1 + l22 * n2;
    x = xn;
    v = vn;
  }
};

struct Trajectory {
  double dt_s = 0.0;
  std::vector<double> positions_m;
  std::vector<double> velocities_mps;
  std::uint64_t seed = 0;
};

// Langevin dynamics of the trapped particle at the given effective bath
// temperature. The harmonic trap uses the exact discrete-time propagator of
// the linear system (jointly Gaussian position/velocity update), so the
// sampled statistics are unbiased at any admissible dt. A finite-depth trap
// uses a symmetric OU-thermostat / velocity-Verlet splitting.
// Deterministic per (seed, parameters). Requires
// dt < 0.05 * min(2 pi / omega_x, 1 / gamma0).
Trajectory simulate(const gaskin::ParticleModel& p, const TrapModel& trap,
                    double gamma0_rad_s, double temperature_k, double dt_s,
                    std::size_t n_steps, std::uint64_t seed);

struct EscapeTrial {
  double time_s = 0.0;  // escape time, or max_time if censored
  bool escaped = false;
};

struct EscapeStats {
  double mean_escape_time_s = 0.0;  // over escaped trials (NaN if none)
  double escape_fraction = 0.0;
  std::vector<EscapeTrial> trials;
};

// First-passage experiment in a finite-depth trap: each trial starts at the
// trap bottom with a thermal velocity and integrates until |x| crosses the
// rim or max_time elapses. Censored trials are reported, not discarded.
// Trials run in parallel with per-trial derived RNG streams; the result is
// independent of scheduling order. n_threads = 0 picks the hardware count.
EscapeStats escape_experiment(const gaskin::ParticleModel& p,
                              const TrapModel& trap, double gamma0_rad_s,
                              double temperature_k, double max_time_s,
                              std::size_t n_trials, std::uint64_t seed,
                              unsigned n_threads = 0);

}  // namespace levopt::dynamics
