#pragma once

#include <string>

namespace levopt::gaskin {

enum class GasSpecies { air, oxygen, helium };

GasSpecies parse_species(const std::string& name);  // "air"|"oxygen"|"helium"
std::string species_name(GasSpecies s);

// Surrounding gas: pressure, bath temperature and the per-species transport
// parameters (molar mass, reference viscosity at 296 K). Immutable after
// construction; all quantities SI.
struct GasEnvironment {
  GasSpecies species;
  double pressure_pa;
  double bath_temperature_k;
  double molar_mass_kg_mol;
  double viscosity_ref_pa_s;  // at reference_temperature_k

  static constexpr double reference_temperature_k = 296.0;

  // Defaults molar mass and reference viscosity from the species.
  GasEnvironment(GasSpecies species, double pressure_pa,
                 double bath_temperature_k);
  GasEnvironment(GasSpecies species, double pressure_pa,
                 double bath_temperature_k, double molar_mass_kg_mol,
                 double viscosity_ref_pa_s);

  double molecule_mass_kg() const;
};

struct ParticleModel {
  double radius_m;
  double density_kg_m3 = 3510.0;  // diamond

  ParticleModel(double radius_m, double density_kg_m3 = 3510.0);

  double mass_kg() const;
};

// Dynamic viscosity at the bath temperature: Sutherland's law for air and
// oxygen anchored at 296 K, a power law for helium (Sutherland fits helium
// poorly). Pressure does not enter. Valid for T in [100, 1000] K.
double viscosity(const GasEnvironment& env);

// s = (eta/P) * sqrt(pi kB T / (2 m_gas))
double mean_free_path(const GasEnvironment& env);

double knudsen_number(const ParticleModel& p, const GasEnvironment& env);

// Slip-corrected viscous damping rate [rad/s]:
//   Gamma0 = (6 pi eta r / m) * 0.619/(0.619+Kn) * (1 + cK)
//   cK = 0.31 Kn / (0.785 + 1.152 Kn + Kn^2)
double damping_factor(const ParticleModel& p, const GasEnvironment& env);

// Inverts damping_factor for the hydrodynamic radius by bisection on
// [1 nm, 10 um]. Only valid when the particle is in thermal equilibrium with
// the gas; callers must say so explicitly, and the inversion refuses
// otherwise (the damping model does not hold for a hot particle).
double radius_from_damping(double gamma0_rad_s, double density_kg_m3,
                           const GasEnvironment& env, bool equilibrium);

}  // namespace levopt::gaskin
