#include "levopt/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "levopt/constants.hpp"
#include "levopt/rng.hpp"

namespace levopt::dynamics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_timestep(double dt_s, double omega, double gamma) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("dt must be positive");
  double limit = 0.05 * kTwoPi / omega;
  if (gamma > 0.0) limit = std::min(limit, 0.05 / gamma);
  if (dt_s >= limit)
    throw std::invalid_argument(
        "dt too coarse: need dt < 0.05 * min(2 pi / omega_x, 1 / gamma0)");
}

struct WellStepper {
  double dt;
  double depth;
  double two_over_wsq;  // 2 / w^2
  double mass;
  double ou_decay;      // exp(-gamma dt / 2)
  double ou_noise;      // sqrt(kT/m (1 - exp(-gamma dt)))

  WellStepper(const TrapModel& trap, double gamma, double temperature_k,
              double mass_kg, double dt_s)
      : dt(dt_s),
        depth(trap.depth_j),
        two_over_wsq(2.0 / (trap.waist_m * trap.waist_m)),
        mass(mass_kg),
        ou_decay(std::exp(-0.5 * gamma * dt_s)),
        ou_noise(std::sqrt(constants::k_boltzmann * temperature_k / mass_kg *
                           (1.0 - std::exp(-gamma * dt_s)))) {}

  // acceleration -U'(x)/m for U = -depth exp(-2 x^2 / w^2)
  double accel(double x) const {
    return -2.0 * depth * two_over_wsq * x *
           std::exp(-x * x * two_over_wsq) / mass;
  }

  // OBABO: exact OU half-kicks around a velocity-Verlet core. The caller
  // keeps a = accel(x) current across steps.
  void step(double& x, double& v, double& a, Philox& rng) const {
    v = ou_decay * v + ou_noise * rng.normal();
    v += 0.5 * dt * a;
    x += dt * v;
    a = accel(x);
    v += 0.5 * dt * a;
    v = ou_decay * v + ou_noise * rng.normal();
  }
};

}  // namespace

TrapModel::TrapModel(double omega_x_rad_s, double depth_j, double waist_m)
    : omega_x_rad_s(omega_x_rad_s), depth_j(depth_j), waist_m(waist_m) {
  if (!(omega_x_rad_s > 0.0))
    throw std::invalid_argument("trap frequency must be positive");
  if (!(depth_j > 0.0)) throw std::invalid_argument("trap depth must be positive");
  if (!harmonic() && !(waist_m > 0.0))
    throw std::invalid_argument("finite-depth trap needs a positive waist");
}

bool TrapModel::harmonic() const { return std::isinf(depth_j); }

TrapModel TrapModel::gaussian_well(double depth_j, double waist_m,
                                   double mass_kg) {
  if (!(depth_j > 0.0 && waist_m > 0.0 && mass_kg > 0.0))
    throw std::invalid_argument("gaussian_well needs positive depth, waist, mass");
  const double omega = std::sqrt(4.0 * depth_j / (mass_kg * waist_m * waist_m));
  return TrapModel(omega, depth_j, waist_m);
}

ExactPropagator::ExactPropagator(double omega_x_rad_s, double gamma0_rad_s,
                                 double mass_kg, double temperature_k,
                                 double dt_s) {
  if (!(omega_x_rad_s > 0.0) || gamma0_rad_s < 0.0 || !(mass_kg > 0.0) ||
      temperature_k < 0.0 || !(dt_s > 0.0))
    throw std::invalid_argument("bad propagator parameters");

  const double lam = 0.5 * gamma0_rad_s;
  const double disc = omega_x_rad_s * omega_x_rad_s - lam * lam;
  double c, s;  // cos-like and sinc-like factors of the oscillatory part
  if (disc > 0.0) {
    const double w1 = std::sqrt(disc);
    c = std::cos(w1 * dt_s);
    s = std::sin(w1 * dt_s) / w1;
  } else if (disc < 0.0) {
    const double w1 = std::sqrt(-disc);
    c = std::cosh(w1 * dt_s);
    s = std::sinh(w1 * dt_s) / w1;
  } else {
    c = 1.0;
    s = dt_s;
  }
  const double decay = std::exp(-lam * dt_s);
  m11 = decay * (c + lam * s);
  m12 = decay * s;
  m21 = decay * (-omega_x_rad_s * omega_x_rad_s * s);
  m22 = decay * (c - lam * s);

  // stationary covariance, diagonal: (kT/m omega^2, kT/m)
  const double px = constants::k_boltzmann * temperature_k /
                    (mass_kg * omega_x_rad_s * omega_x_rad_s);
  const double pv = constants::k_boltzmann * temperature_k / mass_kg;

  // Q = P - M P M^T
  const double q11 = px - (m11 * m11 * px + m12 * m12 * pv);
  const double q12 = -(m11 * m21 * px + m12 * m22 * pv);
  const double q22 = pv - (m21 * m21 * px + m22 * m22 * pv);

  l11 = std::sqrt(std::max(q11, 0.0));
  l21 = l11 > 0.0 ? q12 / l11 : 0.0;
  l22 = std::sqrt(std::max(q22 - l21 * l21, 0.0));
}

Trajectory simulate(const gaskin::ParticleModel& p, const TrapModel& trap,
                    double gamma0_rad_s, double temperature_k, double dt_s,
                    std::size_t n_steps, std::uint64_t seed) {
  if (gamma0_rad_s < 0.0) throw std::invalid_argument("negative damping");
  if (!(temperature_k > 0.0))
    throw std::invalid_argument("simulate needs a positive temperature");
  if (n_steps < 2) throw std::invalid_argument("n_steps must be at least 2");
  check_timestep(dt_s, trap.omega_x_rad_s, gamma0_rad_s);

  const double mass = p.mass_kg();
  const double kT = constants::k_boltzmann * temperature_k;

  Trajectory traj;
  traj.dt_s = dt_s;
  traj.seed = seed;
  traj.positions_m.resize(n_steps);
  traj.velocities_mps.resize(n_steps);

  Philox rng(seed, 0);

  if (trap.harmonic()) {
    const ExactPropagator prop(trap.omega_x_rad_s, gamma0_rad_s, mass,
                               temperature_k, dt_s);
    // start in the stationary state so every sample is equilibrium
    double x = std::sqrt(kT / (mass * trap.omega_x_rad_s * trap.omega_x_rad_s)) *
               rng.normal();
    double v = std::sqrt(kT / mass) * rng.normal();
    for (std::size_t i = 0; i < n_steps; ++i) {
      traj.positions_m[i] = x;
      traj.velocities_mps[i] = v;
      prop.step(x, v, rng.normal(), rng.normal());
    }
    return traj;
  }

  const WellStepper stepper(trap, gamma0_rad_s, temperature_k, mass, dt_s);
  double x = 0.0;  // trap bottom
  double v = std::sqrt(kT / mass) * rng.normal();
  double a = stepper.accel(x);
  for (std::size_t i = 0; i < n_steps; ++i) {
    traj.positions_m[i] = x;
    traj.velocities_mps[i] = v;
    stepper.step(x, v, a, rng);
  }
  return traj;
}

EscapeStats escape_experiment(const gaskin::ParticleModel& p,
                              const TrapModel& trap, double gamma0_rad_s,
                              double temperature_k, double max_time_s,
                              std::size_t n_trials, std::uint64_t seed,
                              unsigned n_threads) {
  if (trap.harmonic())
    throw std::invalid_argument("escape needs a finite-depth trap");
  if (!(max_time_s > 0.0)) throw std::invalid_argument("max_time must be positive");
  if (n_trials == 0) throw std::invalid_argument("n_trials must be positive");
  if (!(temperature_k > 0.0))
    throw std::invalid_argument("escape needs a positive temperature");

  const double mass = p.mass_kg();
  const double dt = 0.02 * kTwoPi / trap.omega_x_rad_s;
  check_timestep(dt, trap.omega_x_rad_s, gamma0_rad_s);
  const double rim = 3.0 * trap.waist_m;
  const auto max_steps =
      static_cast<std::uint64_t>(std::ceil(max_time_s / dt));
  const double v_thermal =
      std::sqrt(constants::k_boltzmann * temperature_k / mass);
  const WellStepper stepper(trap, gamma0_rad_s, temperature_k, mass, dt);

  EscapeStats stats;
  stats.trials.resize(n_trials);

  const auto run_trial = [&](std::size_t trial) {
    Philox rng(seed, trial);  // one stream per trial: order-independent
    double x = 0.0;
    double v = v_thermal * rng.normal();
    double a = stepper.accel(x);
    for (std::uint64_t step = 1; step <= max_steps; ++step) {
      stepper.step(x, v, a, rng);
      if (std::abs(x) >= rim) {
        stats.trials[trial] = {static_cast<double>(step) * dt, true};
        return;
      }
    }
    stats.trials[trial] = {max_time_s, false};
  };

  unsigned hw = n_threads ? n_threads : std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  hw = static_cast<unsigned>(
      std::min<std::size_t>(hw, n_trials));
  if (hw <= 1) {
    for (std::size_t i = 0; i < n_trials; ++i) run_trial(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(hw);
    for (unsigned t = 0; t < hw; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n_trials;
             i = next.fetch_add(1))
          run_trial(i);
      });
    for (auto& th : pool) th.join();
  }

  double sum_time = 0.0;
  std::size_t n_escaped = 0;
  for (const auto& tr : stats.trials)
    if (tr.escaped) {
      sum_time += tr.time_s;
      ++n_escaped;
    }
  stats.escape_fraction =
      static_cast<double>(n_escaped) / static_cast<double>(n_trials);
  stats.mean_escape_time_s =
      n_escaped ? sum_time / static_cast<double>(n_escaped)
                : std::numeric_limits<double>::quiet_NaN();
  return stats;
}

}  // namespace levopt::dynamics
