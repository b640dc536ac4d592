#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "qnoise/csvio.hpp"

// End-to-end checks of the command-line tool: exit codes, output format,
// determinism and the simulate -> fit round trip, using small throwaway
// configs plus the bundled ones that run quickly.

namespace fs = std::filesystem;

namespace {

const std::string cli = QNOISE_CLI_PATH;
const std::string config_dir = QNOISE_CONFIG_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qnoise_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

const char* small_spectrum_config = R"({
  "system": "generic",
  "model": {
    "frequency_hz": 50000.0,
    "linewidth_hz": 800.0,
    "n_th": 0.03,
    "measurement_rate_hz": 600.0,
    "theta_pi": 0.25,
    "eta_det": 1.0
  },
  "grid": { "f_min_hz": 45000.0, "f_max_hz": 55000.0, "n_points": 101 },
  "output": "small_spectrum.csv"
})";

const char* small_simulate_config = R"({
  "model": {
    "frequency_hz": 50000.0,
    "linewidth_hz": 800.0,
    "n_th": 0.03,
    "measurement_rate_hz": 600.0,
    "theta_pi": 0.25,
    "eta_det": 1.0
  },
  "trajectory": {
    "dt_s": 2e-7,
    "duration_s": 0.04,
    "n_traj": 2,
    "seed": 4242,
    "record_x": false,
    "thetas_pi": [0.25],
    "eta_det": 1.0
  },
  "psd": { "segment_length": 8192, "overlap": 0.5, "window": "hann" },
  "timeseries_output": "ts.csv",
  "psd_output": "psd.csv"
})";

}

TEST_CASE("argument handling") {
  // no subcommand / missing required --config are CLI parse failures
  CHECK(run_cli("") != 0);
  CHECK(run_cli("spectrum") != 0);
  CHECK(run_cli("spectrum --config /nonexistent.json") != 0);
}

TEST_CASE("schema violations exit with code 2") {
  TempDir tmp;
  SUBCASE("unknown key") {
    std::string bad(small_spectrum_config);
    bad.insert(bad.rfind('}'), ", \"typo_key\": 1\n");
    write_file(tmp.path / "bad.json", bad);
    CHECK(run_cli("spectrum --config " + (tmp.path / "bad.json").string() +
                  " --out " + tmp.path.string()) == 2);
  }
  SUBCASE("unphysical parameter") {
    std::string bad(small_spectrum_config);
    const std::string from = "\"linewidth_hz\": 800.0";
    bad.replace(bad.find(from), from.size(), "\"linewidth_hz\": -800.0");
    write_file(tmp.path / "bad.json", bad);
    CHECK(run_cli("spectrum --config " + (tmp.path / "bad.json").string() +
                  " --out " + tmp.path.string()) == 2);
  }
  SUBCASE("malformed json") {
    write_file(tmp.path / "bad.json", "{ not json");
    CHECK(run_cli("spectrum --config " + (tmp.path / "bad.json").string() +
                  " --out " + tmp.path.string()) == 2);
  }
  SUBCASE("underscore comment keys are allowed") {
    std::string ok(small_spectrum_config);
    ok.insert(ok.rfind('}'), ", \"_note\": \"kept\"\n");
    write_file(tmp.path / "ok.json", ok);
    CHECK(run_cli("spectrum --config " + (tmp.path / "ok.json").string() +
                  " --out " + tmp.path.string() + " --quiet") == 0);
  }
}

TEST_CASE("spectrum output format") {
  TempDir tmp;
  write_file(tmp.path / "spec.json", small_spectrum_config);
  REQUIRE(run_cli("spectrum --config " + (tmp.path / "spec.json").string() +
                  " --out " + tmp.path.string() + " --quiet") == 0);
  const std::string text = slurp(tmp.path / "small_spectrum.csv");
  CHECK(text.find("# qnoise 0.1.0") == 0);
  CHECK(text.find("two-sided symmetrized") != std::string::npos);
  CHECK(text.find("shot noise = 1/2") != std::string::npos);
  CHECK(text.find("# config:") != std::string::npos);
  CHECK(text.find("frequency_Hz,psd,psd_shot_relative_dB,psd_shot,"
                  "psd_interference,psd_signal") != std::string::npos);
  // the file round-trips through the spectrum reader
  qnoise::Spectrum s =
      qnoise::read_spectrum_csv((tmp.path / "small_spectrum.csv").string());
  CHECK(s.grid.size() == 101);
  CHECK(s.grid.front() == doctest::Approx(qnoise::hz_to_rad(45000.0)));
  CHECK(s.grid.back() == doctest::Approx(qnoise::hz_to_rad(55000.0)));
  // shot + interference + signal = total on every row
  std::istringstream in(text);
  std::string line;
  bool checked = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("frequency", 0) == 0)
      continue;
    std::istringstream row(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 6);
    CHECK(v[3] + v[4] + v[5] == doctest::Approx(v[1]).epsilon(1e-9));
    checked = true;
  }
  CHECK(checked);
}

TEST_CASE("bundled analytic configs run clean") {
  TempDir tmp;
  for (const char* job : {"spectrum --config %/spin_spectrum.json",
                          "spectrum --config %/membrane_spectrum.json",
                          "cooling-curve --config %/cooling_curve.json",
                          "variance-sweep --config %/variance_sweep.json",
                          "hybrid --config %/hybrid_interfaces.json"}) {
    std::string cmd(job);
    cmd.replace(cmd.find('%'), 1, config_dir);
    CAPTURE(cmd);
    CHECK(run_cli(cmd + " --out " + tmp.path.string() + " --quiet") == 0);
  }
  // spot checks on the emitted tables
  const std::string hybrid = slurp(tmp.path / "hybrid_interfaces.csv");
  CHECK(hybrid.find("g_hyb_Hz,C_hyb,C_s,C_m,bound_16CmCs") != std::string::npos);
  const std::string cooling = slurp(tmp.path / "cooling_curve.csv");
  CHECK(cooling.find("power_uW,n_m_total") != std::string::npos);
}

TEST_CASE("simulate determinism and seed override") {
  TempDir a, b, c;
  write_file(a.path / "sim.json", small_simulate_config);
  const std::string cfg = (a.path / "sim.json").string();
  REQUIRE(run_cli("simulate --config " + cfg + " --out " + a.path.string() +
                  " --quiet") == 0);
  REQUIRE(run_cli("simulate --config " + cfg + " --out " + b.path.string() +
                  " --quiet") == 0);
  // byte-identical reruns
  CHECK(slurp(a.path / "ts.csv") == slurp(b.path / "ts.csv"));
  CHECK(slurp(a.path / "psd.csv") == slurp(b.path / "psd.csv"));
  // a different seed changes the records
  REQUIRE(run_cli("simulate --config " + cfg + " --out " + c.path.string() +
                  " --seed 7 --quiet") == 0);
  CHECK(slurp(a.path / "ts.csv") != slurp(c.path / "ts.csv"));
  const std::string psd = slurp(a.path / "psd.csv");
  CHECK(psd.find("frequency_Hz,psd_D_0.25pi,psd_err_D_0.25pi") != std::string::npos);
  CHECK(psd.find("seed: 4242") != std::string::npos);
}

TEST_CASE("simulate then fit round trip") {
  TempDir tmp;
  write_file(tmp.path / "sim.json", small_simulate_config);
  REQUIRE(run_cli("simulate --config " + (tmp.path / "sim.json").string() +
                  " --out " + tmp.path.string() + " --quiet") == 0);
  write_file(tmp.path / "fit.json", R"({
    "input_spectrum": "psd.csv",
    "model": "core_squeezing",
    "fixed": {
      "omega_hz": 50000.0,
      "n_th": 0.03,
      "theta_pi": 0.25,
      "eta_det": 1.0
    },
    "free": [
      { "name": "gamma_hz", "initial": 1000.0, "lower": 10.0, "upper": 10000.0 },
      { "name": "gamma_meas_hz", "initial": 400.0, "lower": 10.0, "upper": 10000.0 }
    ],
    "output": "report.txt"
  })");
  REQUIRE(run_cli("fit --config " + (tmp.path / "fit.json").string() +
                  " --out " + tmp.path.string() + " --quiet") == 0);
  const std::string report = slurp(tmp.path / "report.txt");
  CHECK(report.find("converged = true") != std::string::npos);
  CHECK(report.find("gamma_hz = ") != std::string::npos);
  CHECK(report.find("gamma_hz_sigma = ") != std::string::npos);
  CHECK(report.find("gamma_meas_hz = ") != std::string::npos);
  CHECK(report.find("input_fnv1a = ") != std::string::npos);
  CHECK(report.find("cooperativity = ") != std::string::npos);
  // rough recovery: the fitted linewidth is within a factor of two
  const std::size_t pos = report.find("gamma_hz = ");
  const double gamma_hz = std::stod(report.substr(pos + 11));
  CHECK(gamma_hz > 400.0);
  CHECK(gamma_hz < 1600.0);
  // missing input spectrum is a validation failure
  write_file(tmp.path / "fit_missing.json", R"({
    "input_spectrum": "no_such.csv",
    "model": "core_squeezing",
    "fixed": { "omega_hz": 50000.0, "n_th": 0.03, "theta_pi": 0.25, "eta_det": 1.0 },
    "free": [ { "name": "gamma_hz", "initial": 1000.0 },
              { "name": "gamma_meas_hz", "initial": 400.0 } ],
    "output": "r.txt"
  })");
  CHECK(run_cli("fit --config " + (tmp.path / "fit_missing.json").string() +
                " --out " + tmp.path.string()) == 2);
}

TEST_CASE("squeeze scan on a small grid") {
  TempDir tmp;
  write_file(tmp.path / "scan.json", R"({
    "system": "generic",
    "model": {
      "frequency_hz": 50000.0,
      "linewidth_hz": 800.0,
      "n_th": 0.03,
      "measurement_rate_hz": 600.0,
      "theta_pi": 0.0,
      "eta_det": 1.0
    },
    "grid": { "f_min_hz": 45000.0, "f_max_hz": 60000.0, "n_points": 301 },
    "theta_scan": { "min_pi": 0.02, "max_pi": 0.5, "n_points": 49 },
    "output": "scan.csv"
  })");
  REQUIRE(run_cli("squeeze-scan --config " + (tmp.path / "scan.json").string() +
                  " --out " + tmp.path.string() + " --quiet") == 0);
  const std::string text = slurp(tmp.path / "scan.csv");
  CHECK(text.find("min_ratio_dB,f_at_min_Hz,theta_at_min_pi") != std::string::npos);
  // last line carries the single result row; the minimum must be below shot
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') last = line;
  std::istringstream row(last);
  std::string cell;
  std::vector<double> v;
  while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
  REQUIRE(v.size() == 3);
  CHECK(v[0] < 0.0);
  CHECK(v[1] > 50000.0);  // squeezing sits above resonance
  CHECK(v[2] > 0.0);
}
