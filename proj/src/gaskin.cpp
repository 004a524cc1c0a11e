#include "levopt/gaskin.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "levopt/constants.hpp"

namespace levopt::gaskin {

namespace {

struct SpeciesParams {
  double molar_mass_kg_mol;
  double viscosity_ref_pa_s;  // at 296 K
};

SpeciesParams species_params(GasSpecies s) {
  switch (s) {
    case GasSpecies::air:
      return {28.97e-3, 18.52e-6};
    case GasSpecies::oxygen:
      return {32.00e-3, 20.4e-6};
    case GasSpecies::helium:
      return {4.003e-3, 19.6e-6};
  }
  throw std::logic_error("unreachable species");
}

}  // namespace

GasSpecies parse_species(const std::string& name) {
  if (name == "air") return GasSpecies::air;
  if (name == "oxygen" || name == "o2") return GasSpecies::oxygen;
  if (name == "helium" || name == "he") return GasSpecies::helium;
  throw std::invalid_argument("unknown gas species '" + name +
                              "' (expected air, oxygen or helium)");
}

std::string species_name(GasSpecies s) {
  switch (s) {
    case GasSpecies::air:
      return "air";
    case GasSpecies::oxygen:
      return "oxygen";
    case GasSpecies::helium:
      return "helium";
  }
  return "?";
}

GasEnvironment::GasEnvironment(GasSpecies species, double pressure_pa,
                               double bath_temperature_k)
    : GasEnvironment(species, pressure_pa, bath_temperature_k,
                     species_params(species).molar_mass_kg_mol,
                     species_params(species).viscosity_ref_pa_s) {}

GasEnvironment::GasEnvironment(GasSpecies species, double pressure_pa,
                               double bath_temperature_k,
                               double molar_mass_kg_mol,
                               double viscosity_ref_pa_s)
    : species(species),
      pressure_pa(pressure_pa),
      bath_temperature_k(bath_temperature_k),
      molar_mass_kg_mol(molar_mass_kg_mol),
      viscosity_ref_pa_s(viscosity_ref_pa_s) {
  if (!(pressure_pa > 0.0))
    throw std::invalid_argument("gas pressure must be positive");
  if (!(bath_temperature_k >= 100.0 && bath_temperature_k <= 1000.0))
    throw std::invalid_argument(
        "bath temperature outside the transport model range [100, 1000] K");
}

double GasEnvironment::molecule_mass_kg() const {
  return molar_mass_kg_mol / constants::avogadro;
}

ParticleModel::ParticleModel(double radius_m, double density_kg_m3)
    : radius_m(radius_m), density_kg_m3(density_kg_m3) {
  if (!(radius_m > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!(density_kg_m3 > 0.0))
    throw std::invalid_argument("density must be positive");
}

double ParticleModel::mass_kg() const {
  return density_kg_m3 * (4.0 / 3.0) * std::numbers::pi * radius_m * radius_m *
         radius_m;
}

double viscosity(const GasEnvironment& env) {
  const double t = env.bath_temperature_k;
  const double t_ref = GasEnvironment::reference_temperature_k;
  if (env.species == GasSpecies::helium)
    return env.viscosity_ref_pa_s * std::pow(t / t_ref, 0.647);
  // Sutherland constants: 110.4 K for air, 127 K for oxygen
  const double s = env.species == GasSpecies::air ? 110.4 : 127.0;
  return env.viscosity_ref_pa_s * std::pow(t / t_ref, 1.5) * (t_ref + s) /
         (t + s);
}

double mean_free_path(const GasEnvironment& env) {
  const double eta = viscosity(env);
  return eta / env.pressure_pa *
         std::sqrt(std::numbers::pi * constants::k_boltzmann *
                   env.bath_temperature_k / (2.0 * env.molecule_mass_kg()));
}

double knudsen_number(const ParticleModel& p, const GasEnvironment& env) {
  return mean_free_path(env) / p.radius_m;
}

double damping_factor(const ParticleModel& p, const GasEnvironment& env) {
  const double eta = viscosity(env);
  const double kn = knudsen_number(p, env);
  const double ck = 0.31 * kn / (0.785 + 1.152 * kn + kn * kn);
  const double stokes = 6.0 * std::numbers::pi * eta * p.radius_m / p.mass_kg();
  return stokes * 0.619 / (0.619 + kn) * (1.0 + ck);
}

double radius_from_damping(double gamma0_rad_s, double density_kg_m3,
                           const GasEnvironment& env, bool equilibrium) {
  if (!equilibrium)
    throw std::invalid_argument(
        "radius_from_damping: the damping model assumes the particle is "
        "thermalized with the gas; refusing a non-equilibrium inversion");
  if (!(gamma0_rad_s > 0.0))
    throw std::invalid_argument("damping rate must be positive");

  double lo = 1e-9, hi = 1e-5;
  const auto excess = [&](double r) {
    return damping_factor(ParticleModel(r, density_kg_m3), env) - gamma0_rad_s;
  };
  // damping decreases with radius, so excess runs from + at lo to - at hi
  if (excess(lo) < 0.0 || excess(hi) > 0.0)
    throw std::out_of_range(
        "radius_from_damping: no solution in [1 nm, 10 um] for the given "
        "damping rate");
  for (int i = 0; i < 200 && (hi - lo) > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace levopt::gaskin
