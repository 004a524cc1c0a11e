// levopt: simulation and parameter-estimation toolkit for optically
// levitated nanodiamonds. Subcommands cover the full pipeline: trajectory
// simulation, spectral estimation and fitting, particle sizing from damping,
// ESR fitting and NV thermometry, strain calibration, and the macroscopic
// sensing fits. Lab units (Torr, GHz, nm) at the boundary, SI inside.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "levopt/constants.hpp"
#include "levopt/csv.hpp"
#include "levopt/dynamics.hpp"
#include "levopt/gaskin.hpp"
#include "levopt/kernels.hpp"
#include "levopt/nvesr.hpp"
#include "levopt/psdfit.hpp"
#include "levopt/thermosense.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace levopt;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Config/usage problems exit with status 2; module domain errors with 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Maps every option to a JSON config key so that --config files and the
// emitted summary share one schema. Command-line flags win over config
// values; unknown config keys are rejected.
class Bindings {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* sub, const std::string& flag,
                   const std::string& key, T& target,
                   const std::string& help) {
    CLI::Option* opt = sub->add_option(flag, target, help);
    items_.push_back(Item{
        key, opt, [&target](const json& v) { target = v.get<T>(); },
        [&target]() { return json(target); }});
    return opt;
  }

  CLI::Option* add_flag(CLI::App* sub, const std::string& flag,
                        const std::string& key, bool& target,
                        const std::string& help) {
    CLI::Option* opt = sub->add_flag(flag, target, help);
    items_.push_back(Item{
        key, opt, [&target](const json& v) { target = v.get<bool>(); },
        [&target]() { return json(target); }});
    return opt;
  }

  void apply(const json& cfg) const {
    for (const auto& [key, value] : cfg.items()) {
      const Item* item = nullptr;
      for (const Item& it : items_)
        if (it.key == key) item = &it;
      if (!item) throw UsageError("unknown config key '" + key + "'");
      if (item->opt->count() == 0) {
        try {
          item->assign(value);
        } catch (const json::exception&) {
          throw UsageError("config key '" + key + "' has the wrong type");
        }
      }
    }
  }

  json emit() const {
    json cfg = json::object();
    for (const Item& it : items_) cfg[it.key] = it.read();
    return cfg;
  }

 private:
  struct Item {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> assign;
    std::function<json()> read;
  };
  std::vector<Item> items_;
};

json load_config(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
  // summaries round-trip: accept either a bare config object or a full
  // summary with the config nested under "config"
  if (j.is_object() && j.contains("config")) {
    if (j.contains("command") && j["command"] != command)
      throw UsageError("config file '" + path + "' belongs to subcommand '" +
                       std::string(j["command"]) + "'");
    j = j["config"];
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  return j;
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + out + "'");
  return dir;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

void print_summary(const std::string& command, const Bindings& bindings,
                   json result, json artifacts = json::object()) {
  json s;
  s["command"] = command;
  s["config"] = bindings.emit();
  s["result"] = std::move(result);
  if (!artifacts.empty()) s["artifacts"] = std::move(artifacts);
  std::cout << s.dump() << "\n";
}

gaskin::GasEnvironment make_env(const std::string& gas, double pressure_torr,
                                double temp_k) {
  if (gas.empty()) throw UsageError("missing --gas");
  if (!(pressure_torr > 0.0))
    throw UsageError("missing or non-positive --pressure-torr");
  return gaskin::GasEnvironment(gaskin::parse_species(gas),
                                constants::torr_to_pascal(pressure_torr),
                                temp_k);
}

// ---------------------------------------------------------------- simulate

struct SimulateParams {
  double radius_nm = 50.0;
  double density = 3510.0;
  double omega_khz = 100.0;
  double gamma0_hz = 0.0;
  std::string gas;
  double pressure_torr = 0.0;
  double temp_k = 296.0;
  double depth_kt = 0.0;
  double waist_um = 0.3;
  double dt_us = 0.0;
  std::uint64_t steps = 1000000;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string config_path;
};

void run_simulate(const SimulateParams& p, const Bindings& b) {
  const gaskin::ParticleModel particle(p.radius_nm * 1e-9, p.density);
  double gamma0;
  if (p.gamma0_hz > 0.0) {
    gamma0 = kTwoPi * p.gamma0_hz;
  } else if (!p.gas.empty()) {
    gamma0 = gaskin::damping_factor(
        particle, make_env(p.gas, p.pressure_torr, p.temp_k));
  } else {
    throw UsageError("need --gamma0-hz or a gas (--gas, --pressure-torr)");
  }

  dynamics::TrapModel trap =
      p.depth_kt > 0.0
          ? dynamics::TrapModel::gaussian_well(
                p.depth_kt * constants::k_boltzmann * p.temp_k,
                p.waist_um * 1e-6, particle.mass_kg())
          : dynamics::TrapModel(kTwoPi * p.omega_khz * 1e3);

  double dt = p.dt_us * 1e-6;
  if (dt <= 0.0)
    dt = 0.02 * std::min(kTwoPi / trap.omega_x_rad_s,
                         gamma0 > 0.0 ? 1.0 / gamma0 : 1e300);

  const dynamics::Trajectory traj = dynamics::simulate(
      particle, trap, gamma0, p.temp_k, dt, p.steps, p.seed);

  const fs::path dir = prepare_out_dir(p.out);
  const fs::path file = dir / "trajectory.csv";
  std::vector<double> t(traj.positions_m.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<double>(i) * traj.dt_s;
  csv::write_file(file.string(), {"time_s", "x_m", "v_mps"},
                  {&t, &traj.positions_m, &traj.velocities_mps});

  const std::size_t n = traj.positions_m.size();
  const double mean_x =
      kernels::sum(traj.positions_m) / static_cast<double>(n);
  const double var_x = kernels::sum_sq_dev(traj.positions_m, mean_x) /
                       static_cast<double>(n);
  const double mean_v =
      kernels::sum(traj.velocities_mps) / static_cast<double>(n);
  const double var_v = kernels::sum_sq_dev(traj.velocities_mps, mean_v) /
                       static_cast<double>(n);

  json result;
  result["n_steps"] = n;
  result["dt_s"] = traj.dt_s;
  result["gamma0_rad_s"] = gamma0;
  result["omega_x_rad_s"] = trap.omega_x_rad_s;
  result["mass_kg"] = particle.mass_kg();
  result["var_x_m2"] = var_x;
  result["var_v_m2_s2"] = var_v;
  print_summary("simulate", b, result, {{"trajectory_csv", file.string()}});
}

void setup_simulate(CLI::App& app) {
  auto p = std::make_shared<SimulateParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "simulate", "Simulate trapped-particle Langevin dynamics");
  b->add(sub, "--radius-nm", "radius_nm", p->radius_nm, "Particle radius [nm]");
  b->add(sub, "--density", "density", p->density,
         "Particle density [kg/m^3]");
  b->add(sub, "--omega-khz", "omega_khz", p->omega_khz,
         "Trap frequency Omega_x/2pi [kHz] (harmonic trap)");
  b->add(sub, "--gamma0-hz", "gamma0_hz", p->gamma0_hz,
         "Damping Gamma_0/2pi [Hz]; otherwise derived from the gas");
  b->add(sub, "--gas", "gas", p->gas, "Gas species: air|oxygen|helium");
  b->add(sub, "--pressure-torr", "pressure_torr", p->pressure_torr,
         "Gas pressure [Torr]");
  b->add(sub, "--temp-k", "temp_k", p->temp_k, "Bath temperature [K]");
  b->add(sub, "--depth-kt", "depth_kt", p->depth_kt,
         "Finite trap depth in units of k_B T (0 = harmonic)");
  b->add(sub, "--waist-um", "waist_um", p->waist_um,
         "Gaussian well waist [um]");
  b->add(sub, "--dt-us", "dt_us", p->dt_us,
         "Time step [us]; 0 picks 0.02 of the fastest timescale");
  b->add(sub, "--steps", "steps", p->steps, "Number of samples");
  b->add(sub, "--seed", "seed", p->seed, "RNG seed");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty())
      b->apply(load_config(p->config_path, "simulate"));
    run_simulate(*p, *b);
  });
}

// --------------------------------------------------------------------- psd

struct PsdParams {
  std::string traj;
  std::uint64_t segment = 16384;
  double overlap = 0.5;
  std::string out = ".";
  std::string config_path;
};

void run_psd(const PsdParams& p, const Bindings& b) {
  if (p.traj.empty()) throw UsageError("missing --traj");
  const csv::Table table = csv::read_file(p.traj);
  const std::vector<double>& t = table.column("time_s");
  dynamics::Trajectory traj;
  traj.positions_m = table.column("x_m");
  if (t.size() < 2) throw std::domain_error("trajectory too short");
  traj.dt_s = t[1] - t[0];
  const double span = t.back() - t.front();
  if (std::abs(span - traj.dt_s * static_cast<double>(t.size() - 1)) >
      1e-6 * span)
    throw std::domain_error("trajectory time base is not uniform");

  const psdfit::PsdEstimate est =
      psdfit::estimate_psd(traj, p.segment, p.overlap);

  const fs::path dir = prepare_out_dir(p.out);
  const fs::path file = dir / "psd.csv";
  csv::write_file(file.string(), {"freq_hz", "psd_m2_per_hz"},
                  {&est.frequencies_hz, &est.values_m2_per_hz});

  double integral = 0.0;
  const double df = est.frequencies_hz[1] - est.frequencies_hz[0];
  integral = kernels::sum(est.values_m2_per_hz) * df;

  json result;
  result["n_bins"] = est.frequencies_hz.size();
  result["n_averages"] = est.n_averages;
  result["df_hz"] = df;
  result["integral_m2"] = integral;
  print_summary("psd", b, result, {{"psd_csv", file.string()}});
}

void setup_psd(CLI::App& app) {
  auto p = std::make_shared<PsdParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "psd", "Welch spectral estimate of a trajectory CSV");
  b->add(sub, "--traj", "traj", p->traj,
         "Trajectory CSV (time_s,x_m[,v_mps])");
  b->add(sub, "--segment", "segment", p->segment, "Segment length [samples]");
  b->add(sub, "--overlap", "overlap", p->overlap, "Segment overlap in [0,0.9]");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty()) b->apply(load_config(p->config_path, "psd"));
    run_psd(*p, *b);
  });
}

// ----------------------------------------------------------------- fit-psd

struct FitPsdParams {
  std::string psd;
  std::uint64_t averages = 1;
  double guess_s0 = 0.0;
  double guess_gamma0_hz = 0.0;
  double guess_omega_khz = 0.0;
  std::string out = ".";
  std::string config_path;
};

json psd_fit_to_json(const psdfit::PsdFitResult& r) {
  json j;
  j["s0"] = r.s0;
  j["gamma0_rad_s"] = r.gamma0_rad_s;
  j["omega_x_rad_s"] = r.omega_x_rad_s;
  j["gamma0_hz"] = r.gamma0_rad_s / kTwoPi;
  j["omega_x_hz"] = r.omega_x_rad_s / kTwoPi;
  j["stderr_s0"] = r.stderr_s0;
  j["stderr_gamma0_rad_s"] = r.stderr_gamma0_rad_s;
  j["stderr_omega_x_rad_s"] = r.stderr_omega_x_rad_s;
  j["residual_norm"] = r.residual_norm;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["low_confidence"] = r.low_confidence;
  return j;
}

void run_fit_psd(const FitPsdParams& p, const Bindings& b) {
  if (p.psd.empty()) throw UsageError("missing --psd");
  const csv::Table table =
      csv::read_file(p.psd, {"freq_hz", "psd_m2_per_hz"});
  psdfit::PsdEstimate est;
  est.frequencies_hz = table.column("freq_hz");
  est.values_m2_per_hz = table.column("psd_m2_per_hz");
  est.n_averages = p.averages;

  std::optional<psdfit::InitialGuess> guess;
  if (p.guess_s0 > 0.0 && p.guess_gamma0_hz > 0.0 && p.guess_omega_khz > 0.0)
    guess = psdfit::InitialGuess{p.guess_s0, kTwoPi * p.guess_gamma0_hz,
                                 kTwoPi * p.guess_omega_khz * 1e3};

  const psdfit::PsdFitResult r = psdfit::fit_psd(est, guess);
  const json result = psd_fit_to_json(r);
  const fs::path file = prepare_out_dir(p.out) / "fit_psd.json";
  write_json_file(file, result);
  print_summary("fit-psd", b, result, {{"fit_json", file.string()}});
}

void setup_fit_psd(CLI::App& app) {
  auto p = std::make_shared<FitPsdParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub =
      app.add_subcommand("fit-psd", "Fit the damped-resonance PSD model");
  b->add(sub, "--psd", "psd", p->psd, "PSD CSV (freq_hz,psd_m2_per_hz)");
  b->add(sub, "--averages", "averages", p->averages,
         "Number of periodogram averages behind the estimate");
  b->add(sub, "--guess-s0", "guess_s0", p->guess_s0, "Initial S0 [m^2/s^3]");
  b->add(sub, "--guess-gamma0-hz", "guess_gamma0_hz", p->guess_gamma0_hz,
         "Initial Gamma_0/2pi [Hz]");
  b->add(sub, "--guess-omega-khz", "guess_omega_khz", p->guess_omega_khz,
         "Initial Omega_x/2pi [kHz]");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty())
      b->apply(load_config(p->config_path, "fit-psd"));
    run_fit_psd(*p, *b);
  });
}

// -------------------------------------------------------------------- size

struct SizeParams {
  double gamma0_hz = 0.0;
  double density = 3510.0;
  std::string gas = "air";
  double pressure_torr = 760.0;
  double temp_k = 296.0;
  bool assume_equilibrium = true;
  std::string out = ".";
  std::string config_path;
};

void run_size(const SizeParams& p, const Bindings& b) {
  if (!(p.gamma0_hz > 0.0)) throw UsageError("missing --gamma0-hz");
  const gaskin::GasEnvironment env =
      make_env(p.gas, p.pressure_torr, p.temp_k);
  const double radius = gaskin::radius_from_damping(
      kTwoPi * p.gamma0_hz, p.density, env, p.assume_equilibrium);
  const gaskin::ParticleModel particle(radius, p.density);

  json result;
  result["radius_nm"] = radius * 1e9;
  result["diameter_nm"] = 2.0 * radius * 1e9;
  result["mass_kg"] = particle.mass_kg();
  result["mean_free_path_nm"] = gaskin::mean_free_path(env) * 1e9;
  result["knudsen_number"] = gaskin::knudsen_number(particle, env);
  result["viscosity_pa_s"] = gaskin::viscosity(env);
  const fs::path file = prepare_out_dir(p.out) / "size.json";
  write_json_file(file, result);
  print_summary("size", b, result, {{"size_json", file.string()}});
}

void setup_size(CLI::App& app) {
  auto p = std::make_shared<SizeParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "size", "Invert the damping rate for the particle size");
  b->add(sub, "--gamma0-hz", "gamma0_hz", p->gamma0_hz,
         "Measured Gamma_0/2pi [Hz]");
  b->add(sub, "--density", "density", p->density, "Particle density [kg/m^3]");
  b->add(sub, "--gas", "gas", p->gas, "Gas species: air|oxygen|helium");
  b->add(sub, "--pressure-torr", "pressure_torr", p->pressure_torr,
         "Gas pressure [Torr]");
  b->add(sub, "--temp-k", "temp_k", p->temp_k, "Gas temperature [K]");
  b->add_flag(sub, "--assume-equilibrium,!--no-assume-equilibrium",
              "assume_equilibrium", p->assume_equilibrium,
              "Assert the particle is thermalized with the gas");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty()) b->apply(load_config(p->config_path, "size"));
    run_size(*p, *b);
  });
}

// ----------------------------------------------------------------- fit-esr

struct FitEsrParams {
  std::string scan;
  std::string out = ".";
  std::string config_path;
};

json esr_fit_to_json(const nvesr::EsrFitResult& r) {
  json j;
  j["d_hz"] = r.d_hz;
  j["e_hz"] = r.e_hz;
  j["d_ghz"] = r.d_hz * 1e-9;
  j["e_mhz"] = r.e_hz * 1e-6;
  j["amp1"] = r.amp1;
  j["amp2"] = r.amp2;
  j["sigma1_hz"] = r.sigma1_hz;
  j["sigma2_hz"] = r.sigma2_hz;
  j["baseline"] = r.baseline;
  j["contrast"] = r.contrast;
  j["stderr_d_hz"] = r.stderr_d_hz;
  j["stderr_e_hz"] = r.stderr_e_hz;
  j["stderr_amp1"] = r.stderr_amp1;
  j["stderr_amp2"] = r.stderr_amp2;
  j["stderr_sigma1_hz"] = r.stderr_sigma1_hz;
  j["stderr_sigma2_hz"] = r.stderr_sigma2_hz;
  j["stderr_baseline"] = r.stderr_baseline;
  j["residual_norm"] = r.residual_norm;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["degenerate"] = r.degenerate;
  return j;
}

void run_fit_esr(const FitEsrParams& p, const Bindings& b) {
  if (p.scan.empty()) throw UsageError("missing --scan");
  const csv::Table table = csv::read_file(p.scan);
  nvesr::EsrSpectrum spec;
  spec.frequencies_hz = table.column("freq_hz");
  spec.i_pl = table.column("i_pl");
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == "sigma") spec.sigma_i_pl = table.columns[c];

  const nvesr::EsrFitResult r = nvesr::fit_esr(spec);
  const json result = esr_fit_to_json(r);
  const fs::path file = prepare_out_dir(p.out) / "fit_esr.json";
  write_json_file(file, result);
  print_summary("fit-esr", b, result, {{"fit_json", file.string()}});
}

void setup_fit_esr(CLI::App& app) {
  auto p = std::make_shared<FitEsrParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "fit-esr", "Double-Gaussian fit of an ESR scan");
  b->add(sub, "--scan", "scan", p->scan, "ESR CSV (freq_hz,i_pl[,sigma])");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty())
      b->apply(load_config(p->config_path, "fit-esr"));
    run_fit_esr(*p, *b);
  });
}

// -------------------------------------------------------------------- temp

struct TempParams {
  double d_ghz = 0.0;
  double strain_hz = 0.0;
  double pressure_torr = 0.0;
  std::string out = ".";
  std::string config_path;
};

void run_temp(const TempParams& p, const Bindings& b) {
  if (!(p.d_ghz > 0.0)) throw UsageError("missing --d-ghz");
  const nvesr::NvThermometer th =
      nvesr::NvThermometer{}.with_strain(p.strain_hz);
  const double pressure_pa = constants::torr_to_pascal(p.pressure_torr);
  const double t =
      nvesr::splitting_to_temperature(p.d_ghz * 1e9, th, pressure_pa);

  json result;
  result["temperature_k"] = t;
  result["d_hz"] = p.d_ghz * 1e9;
  result["pressure_shift_hz"] = th.pressure_coeff_hz_per_pa * pressure_pa;
  result["strain_shift_hz"] = p.strain_hz;
  const fs::path file = prepare_out_dir(p.out) / "temp.json";
  write_json_file(file, result);
  print_summary("temp", b, result, {{"temp_json", file.string()}});
}

void setup_temp(CLI::App& app) {
  auto p = std::make_shared<TempParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "temp", "Invert a zero-field splitting to a temperature");
  b->add(sub, "--d-ghz", "d_ghz", p->d_ghz, "Measured D [GHz]");
  b->add(sub, "--strain-hz", "strain_hz", p->strain_hz,
         "Per-particle strain shift [Hz]");
  b->add(sub, "--pressure-torr", "pressure_torr", p->pressure_torr,
         "Gas pressure [Torr]");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty()) b->apply(load_config(p->config_path, "temp"));
    run_temp(*p, *b);
  });
}

// ------------------------------------------------------- calibrate-strain

struct CalibrateStrainParams {
  std::string data;
  double pressure_torr = 0.0;
  double room_k = 296.0;
  std::string out = ".";
  std::string config_path;
};

void run_calibrate_strain(const CalibrateStrainParams& p, const Bindings& b) {
  if (p.data.empty()) throw UsageError("missing --data");
  const csv::Table table = csv::read_file(p.data, {"power_w", "d_hz"});
  std::vector<std::pair<double, double>> obs;
  for (std::size_t i = 0; i < table.n_rows(); ++i)
    obs.emplace_back(table.columns[0][i], table.columns[1][i]);

  const nvesr::StrainCalibration cal = nvesr::calibrate_strain(
      obs, nvesr::NvThermometer{}, constants::torr_to_pascal(p.pressure_torr),
      p.room_k);

  json result;
  result["strain_shift_hz"] = cal.strain_shift_hz;
  result["strain_shift_mhz"] = cal.strain_shift_hz * 1e-6;
  result["slope_k_per_w"] = cal.slope_k_per_w;
  result["intercept_k"] = cal.intercept_k;
  result["r_squared"] = cal.r_squared;
  result["slope_warning"] = cal.slope_warning;
  result["temperatures_k"] = cal.temperatures_k;
  const fs::path file =
      prepare_out_dir(p.out) / "strain_calibration.json";
  write_json_file(file, result);
  print_summary("calibrate-strain", b, result,
                {{"calibration_json", file.string()}});
}

void setup_calibrate_strain(CLI::App& app) {
  auto p = std::make_shared<CalibrateStrainParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "calibrate-strain",
      "Solve for the per-particle strain shift from a power series");
  b->add(sub, "--data", "data", p->data, "CSV (power_w,d_hz)");
  b->add(sub, "--pressure-torr", "pressure_torr", p->pressure_torr,
         "Gas pressure [Torr]");
  b->add(sub, "--room-k", "room_k", p->room_k,
         "Zero-power intercept temperature [K]");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty())
      b->apply(load_config(p->config_path, "calibrate-strain"));
    run_calibrate_strain(*p, *b);
  });
}

// ------------------------------------------------------------------ fit-tp

struct FitTpParams {
  std::string data;
  std::string out = ".";
  std::string config_path;
};

void run_fit_tp(const FitTpParams& p, const Bindings& b) {
  if (p.data.empty()) throw UsageError("missing --data");
  const csv::Table table =
      csv::read_file(p.data, {"pressure_torr", "temperature_k"});
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < table.n_rows(); ++i)
    pts.emplace_back(constants::torr_to_pascal(table.columns[0][i]),
                     table.columns[1][i]);

  const thermosense::PressureTempModel m =
      thermosense::fit_pressure_temperature(pts);

  json result;
  result["t0_k"] = m.t0_k;
  result["alpha_k_pa"] = m.alpha_k_pa;
  result["alpha_k_torr"] = m.alpha_k_pa / constants::pascal_per_torr;
  result["r_squared"] = m.r_squared;
  result["residual_norm"] = m.residual_norm;
  const fs::path file = prepare_out_dir(p.out) / "fit_tp.json";
  write_json_file(file, result);
  print_summary("fit-tp", b, result, {{"fit_json", file.string()}});
}

void setup_fit_tp(CLI::App& app) {
  auto p = std::make_shared<FitTpParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "fit-tp", "Fit the pressure-temperature law T = T0 + alpha/P");
  b->add(sub, "--data", "data", p->data, "CSV (pressure_torr,temperature_k)");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty())
      b->apply(load_config(p->config_path, "fit-tp"));
    run_fit_tp(*p, *b);
  });
}

// ---------------------------------------------------------------------- o2

struct O2Params {
  std::string data;
  double slope_photon_torr_s = 100.0;
  double intercept_photons_s = 0.0;
  double pressure_torr = -1.0;
  double counts = -1.0;
  double shell_ratio = 0.0;
  double radius_nm = 50.0;
  std::string out = ".";
  std::string config_path;
};

void run_o2(const O2Params& p, const Bindings& b) {
  thermosense::O2Calibration cal;
  json result;
  if (!p.data.empty()) {
    const csv::Table table =
        csv::read_file(p.data, {"pressure_torr", "delta_counts_per_s"});
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < table.n_rows(); ++i)
      pts.emplace_back(constants::torr_to_pascal(table.columns[0][i]),
                       table.columns[1][i]);
    cal = thermosense::fit_o2_calibration(pts);
  } else {
    cal.slope_photons_per_s_pa =
        p.slope_photon_torr_s / constants::pascal_per_torr;
    cal.intercept_photons_per_s = p.intercept_photons_s;
  }
  result["slope_photons_per_s_pa"] = cal.slope_photons_per_s_pa;
  result["slope_photon_torr_s"] =
      cal.slope_photons_per_s_pa * constants::pascal_per_torr;
  result["intercept_photons_per_s"] = cal.intercept_photons_per_s;

  if (p.pressure_torr >= 0.0)
    result["delta_counts_per_s"] = thermosense::o2_count_difference(
        cal, constants::torr_to_pascal(p.pressure_torr));
  if (p.counts >= 0.0) {
    const double pa = thermosense::infer_pressure(cal, p.counts);
    result["inferred_pressure_pa"] = pa;
    result["inferred_pressure_torr"] = constants::pascal_to_torr(pa);
  }
  if (p.shell_ratio > 0.0)
    result["shell_thickness_nm"] =
        thermosense::surface_shell_thickness(p.shell_ratio,
                                             p.radius_nm * 1e-9) *
        1e9;

  const fs::path file = prepare_out_dir(p.out) / "o2.json";
  write_json_file(file, result);
  print_summary("o2", b, result, {{"o2_json", file.string()}});
}

void setup_o2(CLI::App& app) {
  auto p = std::make_shared<O2Params>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "o2", "Oxygen photon-count calibration, inversion and shell estimate");
  b->add(sub, "--data", "data", p->data,
         "CSV (pressure_torr,delta_counts_per_s) to fit the calibration");
  b->add(sub, "--slope-photon-torr-s", "slope_photon_torr_s",
         p->slope_photon_torr_s, "Calibration slope [photon/Torr/s]");
  b->add(sub, "--intercept-photons-s", "intercept_photons_s",
         p->intercept_photons_s, "Calibration intercept [photons/s]");
  b->add(sub, "--pressure-torr", "pressure_torr", p->pressure_torr,
         "Forward-evaluate the count difference at this pressure [Torr]");
  b->add(sub, "--counts", "counts", p->counts,
         "Infer the oxygen pressure from this count difference [photons/s]");
  b->add(sub, "--shell-ratio", "shell_ratio", p->shell_ratio,
         "Count ratio for the quenched-shell estimate, in (0,1]");
  b->add(sub, "--radius-nm", "radius_nm", p->radius_nm,
         "Particle radius for the shell estimate [nm]");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty()) b->apply(load_config(p->config_path, "o2"));
    run_o2(*p, *b);
  });
}

// ------------------------------------------------------------------ escape

struct EscapeParams {
  double radius_nm = 50.0;
  double density = 3510.0;
  double depth_kt = 8.0;
  double waist_um = 0.3;
  double gamma0_hz = 20000.0;
  double temp_k = 296.0;
  double max_time_s = 3.0;
  std::uint64_t trials = 500;
  std::uint64_t seed = 1;
  std::uint64_t threads = 0;
  std::string out = ".";
  std::string config_path;
};

void run_escape(const EscapeParams& p, const Bindings& b) {
  const gaskin::ParticleModel particle(p.radius_nm * 1e-9, p.density);
  const double depth = p.depth_kt * constants::k_boltzmann * p.temp_k;
  const dynamics::TrapModel trap = dynamics::TrapModel::gaussian_well(
      depth, p.waist_um * 1e-6, particle.mass_kg());

  const dynamics::EscapeStats stats = dynamics::escape_experiment(
      particle, trap, kTwoPi * p.gamma0_hz, p.temp_k, p.max_time_s, p.trials,
      p.seed, static_cast<unsigned>(p.threads));

  std::size_t n_escaped = 0;
  for (const auto& tr : stats.trials)
    if (tr.escaped) ++n_escaped;

  json result;
  result["omega_x_rad_s"] = trap.omega_x_rad_s;
  result["barrier_j"] = depth;
  result["n_trials"] = p.trials;
  result["n_escaped"] = n_escaped;
  result["escape_fraction"] = stats.escape_fraction;
  if (n_escaped > 0) {
    result["mean_escape_time_s"] = stats.mean_escape_time_s;
    result["escape_rate_per_s"] = 1.0 / stats.mean_escape_time_s;
  }
  const fs::path file = prepare_out_dir(p.out) / "escape.json";
  write_json_file(file, result);
  print_summary("escape", b, result, {{"escape_json", file.string()}});
}

void setup_escape(CLI::App& app) {
  auto p = std::make_shared<EscapeParams>();
  auto b = std::make_shared<Bindings>();
  CLI::App* sub = app.add_subcommand(
      "escape", "First-passage escape experiment in a finite trap");
  b->add(sub, "--radius-nm", "radius_nm", p->radius_nm, "Particle radius [nm]");
  b->add(sub, "--density", "density", p->density, "Particle density [kg/m^3]");
  b->add(sub, "--depth-kt", "depth_kt", p->depth_kt,
         "Barrier height in units of k_B T");
  b->add(sub, "--waist-um", "waist_um", p->waist_um, "Well waist [um]");
  b->add(sub, "--gamma0-hz", "gamma0_hz", p->gamma0_hz,
         "Damping Gamma_0/2pi [Hz]");
  b->add(sub, "--temp-k", "temp_k", p->temp_k, "Temperature [K]");
  b->add(sub, "--max-time-s", "max_time_s", p->max_time_s,
         "Censoring time per trial [s]");
  b->add(sub, "--trials", "trials", p->trials, "Number of trials");
  b->add(sub, "--seed", "seed", p->seed, "RNG seed");
  b->add(sub, "--threads", "threads", p->threads,
         "Worker threads (0 = hardware)");
  b->add(sub, "--out", "out", p->out, "Output directory");
  sub->add_option("--config", p->config_path, "JSON config file");
  sub->callback([p, b] {
    if (!p->config_path.empty())
      b->apply(load_config(p->config_path, "escape"));
    run_escape(*p, *b);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "levopt: levitated-nanodiamond simulation and parameter estimation"};
  app.require_subcommand(1);
  setup_simulate(app);
  setup_psd(app);
  setup_fit_psd(app);
  setup_size(app);
  setup_fit_esr(app);
  setup_temp(app);
  setup_calibrate_strain(app);
  setup_fit_tp(app);
  setup_o2(app);
  setup_escape(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // normalize CLI11's per-error exit codes: help is success, anything
    // else is a usage error
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
