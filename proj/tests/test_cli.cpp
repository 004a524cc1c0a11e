#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "levopt/constants.hpp"
#include "levopt/csv.hpp"
#include "levopt/nvesr.hpp"
#include "levopt/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace levopt;

namespace {

struct Cmd {
  int code = -1;
  std::string out;
};

Cmd run_cli(const std::string& args) {
  const char* exe = std::getenv("LEVOPT_CLI_PATH");
#ifdef LEVOPT_CLI_PATH
  if (!exe) exe = LEVOPT_CLI_PATH;
#endif
  REQUIRE_MESSAGE(exe != nullptr, "LEVOPT_CLI_PATH not set");
  const std::string full = std::string(exe) + " " + args + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Cmd r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json summary_of(const Cmd& r) {
  std::string s = r.out;
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  const auto pos = s.rfind('\n');
  return json::parse(pos == std::string::npos ? s : s.substr(pos + 1));
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("levopt_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const std::string& name = "") const {
    return (name.empty() ? path : path / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("size inverts a damping rate end to end") {
  TempDir dir;
  const auto r = run_cli("size --gamma0-hz 500e3 --out " + dir.str());
  REQUIRE(r.code == 0);
  const json s = summary_of(r);
  CHECK(s["command"] == "size");
  CHECK(s["config"]["gamma0_hz"] == 500e3);
  CHECK(s["config"]["gas"] == "air");
  const double d_nm = s["result"]["diameter_nm"];
  CHECK(d_nm == doctest::Approx(104.13066045723612).epsilon(1e-9));

  const json file = json::parse(slurp(dir.path / "size.json"));
  CHECK(file["diameter_nm"] == doctest::Approx(d_nm).epsilon(1e-15));
  CHECK(file["knudsen_number"].get<double>() > 0.0);

  // summaries are a single line of JSON
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
}

TEST_CASE("temp matches the library inversion") {
  TempDir dir;
  const auto r = run_cli(
      "temp --d-ghz 2.870403 --strain-hz 0 --pressure-torr 0 --out " +
      dir.str());
  REQUIRE(r.code == 0);
  const double t = summary_of(r)["result"]["temperature_k"];
  const double expected = nvesr::splitting_to_temperature(
      2.870403e9, nvesr::NvThermometer{}, 0.0);
  CHECK(t == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(t - 296.0) < 0.01);
  CHECK(fs::exists(dir.path / "temp.json"));
}

TEST_CASE("fit-tp recovers the two-anchor hyperbola") {
  TempDir dir;
  std::vector<double> torr = {760.0, 300.0, 100.0, 31.0};
  const double p_hi = constants::torr_to_pascal(760.0);
  const double p_lo = constants::torr_to_pascal(31.0);
  const double alpha = (450.0 - 300.0) / (1.0 / p_lo - 1.0 / p_hi);
  const double t0 = 300.0 - alpha / p_hi;
  std::vector<double> temp;
  for (double p : torr)
    temp.push_back(t0 + alpha / constants::torr_to_pascal(p));
  csv::write_file(dir.str("tp.csv"), {"pressure_torr", "temperature_k"},
                  {&torr, &temp});

  const auto r =
      run_cli("fit-tp --data " + dir.str("tp.csv") + " --out " + dir.str());
  REQUIRE(r.code == 0);
  const json res = summary_of(r)["result"];
  CHECK(res["t0_k"].get<double>() == doctest::Approx(t0).epsilon(1e-9));
  CHECK(res["alpha_k_pa"].get<double>() == doctest::Approx(alpha).epsilon(1e-9));
  CHECK(res["alpha_k_torr"].get<double>() ==
        doctest::Approx(alpha / constants::pascal_per_torr).epsilon(1e-9));
  CHECK(fs::exists(dir.path / "fit_tp.json"));
}

TEST_CASE("simulate is byte-deterministic for a fixed seed") {
  TempDir d1, d2;
  const std::string args =
      "simulate --omega-khz 100 --gamma0-hz 10000 --dt-us 0.4 "
      "--steps 20000 --seed 7 --out ";
  const auto r1 = run_cli(args + d1.str());
  const auto r1b = run_cli(args + d1.str());
  const auto r2 = run_cli(args + d2.str());
  REQUIRE(r1.code == 0);
  REQUIRE(r2.code == 0);
  CHECK(r1.out == r1b.out);
  CHECK(slurp(d1.path / "trajectory.csv") == slurp(d2.path / "trajectory.csv"));

  TempDir d3;
  const auto other = run_cli(
      "simulate --omega-khz 100 --gamma0-hz 10000 --dt-us 0.4 "
      "--steps 20000 --seed 8 --out " +
      d3.str());
  REQUIRE(other.code == 0);
  CHECK(slurp(d3.path / "trajectory.csv") !=
        slurp(d1.path / "trajectory.csv"));
}

TEST_CASE("a summary feeds back in as a config file") {
  TempDir d1, d2;
  const auto first = run_cli(
      "simulate --omega-khz 120 --gamma0-hz 5000 --dt-us 0.3 --steps 10000 "
      "--seed 21 --out " +
      d1.str());
  REQUIRE(first.code == 0);
  std::ofstream(d1.str("summary.json")) << summary_of(first).dump() << "\n";

  const auto second = run_cli("simulate --config " + d1.str("summary.json") +
                              " --out " + d2.str());
  REQUIRE(second.code == 0);
  CHECK(summary_of(second)["result"] == summary_of(first)["result"]);
  CHECK(slurp(d1.path / "trajectory.csv") == slurp(d2.path / "trajectory.csv"));

  // flags given on the command line beat config values
  TempDir d3;
  const auto third = run_cli("simulate --config " + d1.str("summary.json") +
                             " --seed 22 --out " + d3.str());
  REQUIRE(third.code == 0);
  CHECK(slurp(d3.path / "trajectory.csv") != slurp(d1.path / "trajectory.csv"));
}

TEST_CASE("exit codes separate usage from domain errors") {
  TempDir dir;
  CHECK(run_cli("size --nope").code == 2);
  CHECK(run_cli("fit-psd --out " + dir.str()).code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("simulate --steps 100 --out " + dir.str()).code == 2);

  std::ofstream(dir.str("bad.json")) << "{\"bogus\": 1}\n";
  CHECK(run_cli("size --gamma0-hz 1000 --config " + dir.str("bad.json")).code ==
        2);
  std::ofstream(dir.str("othercmd.json"))
      << "{\"command\":\"simulate\",\"config\":{}}\n";
  CHECK(run_cli("psd --config " + dir.str("othercmd.json")).code == 2);
  std::ofstream(dir.str("mistyped.json")) << "{\"seed\": \"seven\"}\n";
  CHECK(run_cli("simulate --gamma0-hz 100 --config " + dir.str("mistyped.json"))
            .code == 2);

  // domain errors from the modules exit 1 and explain themselves
  const auto neq = run_cli(
      "size --gamma0-hz 500e3 --no-assume-equilibrium --out " + dir.str());
  CHECK(neq.code == 1);
  CHECK(neq.out.find("error:") != std::string::npos);
  CHECK(run_cli("size --gamma0-hz 1e12 --out " + dir.str()).code == 1);
  CHECK(run_cli("o2 --counts 100 --intercept-photons-s 200 --out " + dir.str())
            .code == 1);
  CHECK(run_cli("simulate --omega-khz 100 --gamma0-hz 1000 --dt-us 2 "
                "--steps 100 --out " +
                dir.str())
            .code == 1);
}

TEST_CASE("simulate, psd and fit-psd chain together") {
  TempDir dir;
  const auto sim = run_cli(
      "simulate --radius-nm 47 --gas air --pressure-torr 31 --temp-k 296 "
      "--omega-khz 100 --dt-us 0.25 --steps 200000 --seed 99 --out " +
      dir.str());
  REQUIRE(sim.code == 0);
  const json sim_res = summary_of(sim)["result"];
  CHECK(sim_res["gamma0_rad_s"].get<double>() ==
        doctest::Approx(2.0 * std::numbers::pi * 30130.45773477783)
            .epsilon(1e-6));

  const auto psd = run_cli("psd --traj " + dir.str("trajectory.csv") +
                           " --segment 4096 --overlap 0.5 --out " + dir.str());
  REQUIRE(psd.code == 0);
  const json psd_res = summary_of(psd)["result"];
  CHECK(psd_res["n_bins"] == 2049);
  const double n_avg = psd_res["n_averages"].get<double>();
  CHECK(n_avg == 96);
  // Parseval: the spectrum integrates to the position variance
  const double integral = psd_res["integral_m2"];
  const double var_x = sim_res["var_x_m2"];
  CHECK(integral == doctest::Approx(var_x).epsilon(0.02));

  const std::string fit_args = "fit-psd --psd " + dir.str("psd.csv") +
                               " --averages 96 --out " + dir.str();
  const auto fit = run_cli(fit_args);
  REQUIRE(fit.code == 0);
  const json fit_res = summary_of(fit)["result"];
  CHECK(fit_res["converged"] == true);
  CHECK(fit_res["omega_x_hz"].get<double>() ==
        doctest::Approx(1e5).epsilon(0.05));
  CHECK(fit_res["gamma0_hz"].get<double>() ==
        doctest::Approx(30130.45773477783).epsilon(0.35));

  // the fit itself is deterministic
  const std::string bytes = slurp(dir.path / "fit_psd.json");
  const auto again = run_cli(fit_args);
  REQUIRE(again.code == 0);
  CHECK(again.out == fit.out);
  CHECK(slurp(dir.path / "fit_psd.json") == bytes);
}

TEST_CASE("fit-esr reads a scan from disk") {
  TempDir dir;
  std::vector<double> freq(141), sigma(141, 0.002);
  for (std::size_t i = 0; i < freq.size(); ++i)
    freq[i] = 2.80e9 + (0.14e9 / 140.0) * static_cast<double>(i);
  std::vector<double> ipl =
      nvesr::model_esr(2.8702e9, 5e6, 0.03, 0.03, 2e6, 2e6, 1.0, freq);
  Philox rng(8, 0);
  for (auto& y : ipl) y += 0.002 * rng.normal();
  csv::write_file(dir.str("scan.csv"), {"freq_hz", "i_pl", "sigma"},
                  {&freq, &ipl, &sigma});

  const auto r = run_cli("fit-esr --scan " + dir.str("scan.csv") + " --out " +
                         dir.str());
  REQUIRE(r.code == 0);
  const json res = summary_of(r)["result"];
  CHECK(res["converged"] == true);
  CHECK(res["degenerate"] == false);
  CHECK(std::abs(res["d_hz"].get<double>() - 2.8702e9) < 1e5);
  CHECK(std::abs(res["e_hz"].get<double>() - 5e6) < 2e5);
  CHECK(res["d_ghz"].get<double>() ==
        doctest::Approx(res["d_hz"].get<double>() * 1e-9).epsilon(1e-12));
  CHECK(fs::exists(dir.path / "fit_esr.json"));
}

TEST_CASE("o2 forward, inverse and shell estimates") {
  TempDir dir;
  const auto fwd =
      run_cli("o2 --pressure-torr 200 --out " + dir.str());
  REQUIRE(fwd.code == 0);
  CHECK(summary_of(fwd)["result"]["delta_counts_per_s"].get<double>() ==
        doctest::Approx(20000.0).epsilon(1e-9));

  const auto inv = run_cli("o2 --counts 20000 --out " + dir.str());
  REQUIRE(inv.code == 0);
  CHECK(summary_of(inv)["result"]["inferred_pressure_torr"].get<double>() ==
        doctest::Approx(200.0).epsilon(1e-9));

  const auto shell =
      run_cli("o2 --shell-ratio 0.512 --radius-nm 50 --out " + dir.str());
  REQUIRE(shell.code == 0);
  CHECK(summary_of(shell)["result"]["shell_thickness_nm"].get<double>() ==
        doctest::Approx(10.0).epsilon(1e-9));

  // calibration from a CSV replaces the flag-specified line
  std::vector<double> torr = {10.0, 100.0, 400.0};
  std::vector<double> counts;
  for (double t : torr) counts.push_back(120.0 * t + 55.0);
  csv::write_file(dir.str("o2.csv"), {"pressure_torr", "delta_counts_per_s"},
                  {&torr, &counts});
  const auto cal = run_cli("o2 --data " + dir.str("o2.csv") +
                           " --pressure-torr 50 --out " + dir.str());
  REQUIRE(cal.code == 0);
  const json res = summary_of(cal)["result"];
  CHECK(res["slope_photon_torr_s"].get<double>() ==
        doctest::Approx(120.0).epsilon(1e-9));
  CHECK(res["delta_counts_per_s"].get<double>() ==
        doctest::Approx(120.0 * 50.0 + 55.0).epsilon(1e-9));
}

TEST_CASE("calibrate-strain runs from a power series CSV") {
  TempDir dir;
  const double p_gas = constants::torr_to_pascal(31.0);
  const auto strained = nvesr::NvThermometer{}.with_strain(4e6);
  std::vector<double> power = {0.2, 0.5, 1.0, 1.5}, d_hz;
  for (double p : power)
    d_hz.push_back(
        nvesr::temperature_to_splitting(296.0 + 30.0 * p, strained, p_gas));
  csv::write_file(dir.str("power.csv"), {"power_w", "d_hz"}, {&power, &d_hz});

  const auto r = run_cli("calibrate-strain --data " + dir.str("power.csv") +
                         " --pressure-torr 31 --out " + dir.str());
  REQUIRE(r.code == 0);
  const json res = summary_of(r)["result"];
  CHECK(res["strain_shift_mhz"].get<double>() ==
        doctest::Approx(4.0).epsilon(1e-3));
  CHECK(res["slope_k_per_w"].get<double>() == doctest::Approx(30.0).epsilon(1e-3));
  CHECK(res["slope_warning"] == false);
  CHECK(res["temperatures_k"].size() == 4);
  CHECK(fs::exists(dir.path / "strain_calibration.json"));
}

TEST_CASE("escape runs a small deterministic experiment") {
  TempDir dir;
  const std::string args =
      "escape --radius-nm 50 --depth-kt 6 --waist-um 0.3 --gamma0-hz 20000 "
      "--temp-k 520 --max-time-s 0.004 --trials 8 --seed 3 --threads 1 "
      "--out " +
      dir.str();
  const auto r = run_cli(args);
  REQUIRE(r.code == 0);
  const json res = summary_of(r)["result"];
  CHECK(res["n_trials"] == 8);
  const double frac = res["escape_fraction"];
  CHECK(frac >= 0.0);
  CHECK(frac <= 1.0);
  CHECK(fs::exists(dir.path / "escape.json"));

  const auto again = run_cli(args);
  REQUIRE(again.code == 0);
  CHECK(again.out == r.out);
}

TEST_CASE("psd rejects broken trajectory files") {
  TempDir dir;
  std::vector<double> t = {0.0, 1e-6, 3e-6, 7e-6}, x = {1.0, 2.0, 3.0, 4.0};
  csv::write_file(dir.str("warped.csv"), {"time_s", "x_m"}, {&t, &x});
  CHECK(run_cli("psd --traj " + dir.str("warped.csv") + " --segment 2 --out " +
                dir.str())
            .code == 1);

  csv::write_file(dir.str("wrongcols.csv"), {"a", "b"}, {&t, &x});
  CHECK(run_cli("psd --traj " + dir.str("wrongcols.csv") + " --out " +
                dir.str())
            .code == 1);
  CHECK(run_cli("psd --traj " + dir.str("missing.csv") + " --out " + dir.str())
            .code == 1);
}
