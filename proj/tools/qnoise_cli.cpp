// Command-line front end: quantum-noise spectra, cooling curves, variance
// sweeps, time-domain simulation, spectral fits, squeezing scans and hybrid
// figures of merit, all driven by JSON config files and emitting CSV.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "qnoise/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--quiet", args.quiet, "suppress status output");
}

int dispatch(const std::string& task, const CommonArgs& args) {
  using namespace qnoise;
  try {
    const cfg::json config = load_config_file(args.config_path);
    RunContext ctx;
    ctx.out_dir = args.out_dir;
    ctx.quiet = args.quiet;
    if (args.seed_set) ctx.seed_override = args.seed;
    if (task == "spectrum") run_spectrum(config, ctx);
    else if (task == "cooling-curve") run_cooling_curve(config, ctx);
    else if (task == "variance-sweep") run_variance_sweep(config, ctx);
    else if (task == "simulate") run_simulate(config, ctx);
    else if (task == "fit") run_fit(config, ctx);
    else if (task == "squeeze-scan") run_squeeze_scan(config, ctx);
    else if (task == "hybrid") run_hybrid(config, ctx);
    return 0;
  } catch (const std::invalid_argument& e) {
    // schema violations and invalid physical parameters
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum-noise interface toolkit"};
  app.require_subcommand(1);

  const char* tasks[] = {"spectrum",  "cooling-curve", "variance-sweep",
                         "simulate",  "fit",           "squeeze-scan",
                         "hybrid"};
  const char* descriptions[] = {
      "homodyne output spectrum with component decomposition",
      "phonon occupation versus drive power",
      "band-integrated variance versus measurement rate",
      "time-domain Langevin simulation plus PSD estimate",
      "weighted least-squares fit of a spectral model",
      "theta x omega squeezing minimum search",
      "hybrid coupling and cooperativity calculator"};

  CommonArgs args[7];
  for (int i = 0; i < 7; ++i)
    add_common(app.add_subcommand(tasks[i], descriptions[i]), args[i]);

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 7; ++i)
    if (app.get_subcommand(tasks[i])->parsed()) return dispatch(tasks[i], args[i]);
  return 1;
}
