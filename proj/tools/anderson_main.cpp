// Experiment driver for the disordered tight-binding chain. Subcommands mirror
// the datasets the library produces: spectrum, relax, sweep, rpse, circle.
// Every run writes a manifest.json from which it can be re-executed byte for
// byte (anderson <cmd> --from-manifest <file>).

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anderson/csv.hpp"
#include "anderson/errors.hpp"
#include "anderson/experiment.hpp"
#include "anderson/version.hpp"

namespace {

using anderson::Command;
using anderson::ExperimentConfig;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

// "lo:hi:count" is expanded log-spaced; otherwise a comma list is taken as is.
std::vector<double> parse_sigma_grid(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    std::stringstream ss(text);
    std::string lo_s, hi_s, count_s;
    std::getline(ss, lo_s, ':');
    std::getline(ss, hi_s, ':');
    std::getline(ss, count_s, ':');
    const double lo = std::stod(lo_s);
    const double hi = std::stod(hi_s);
    const int count = std::stoi(count_s);
    if (!(lo > 0.0) || !(hi > lo) || count < 2) {
      throw anderson::ConfigError("bad sigma grid spec: " + text);
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double step = (std::log(hi) - std::log(lo)) / (count - 1);
    for (int i = 0; i < count; ++i) {
      grid[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + i * step);
    }
    return grid;
  }
  return parse_double_list(text);
}

struct CliFlags {
  std::string config_file;
  std::string manifest_file;
  int n = 0;
  double sigma = 0.0;
  std::string sigma_grid;
  std::uint64_t seed = 0;
  int realizations = 0;
  int mc_samples = 0;
  double t_burn = 0.0;
  double t_max = 0.0;
  int t_samples = 0;
  std::uint64_t jitter_seed = 0;
  std::string entropy_mode;
  std::string out_dir;
  int threads = 0;
  int j0 = 0;
  std::string snapshot_times;
  std::string series_sites;
  std::string mssd_origins;
  int mssd_samples = 0;
  bool wide = false;
  bool export_overlaps = false;
  bool export_energies = false;
};

void add_common_options(CLI::App* cmd, CliFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file (flags override it)");
  cmd->add_option("--from-manifest", f.manifest_file,
                  "rerun the configuration recorded in a manifest.json");
  cmd->add_option("--n", f.n, "chain length (>= 3)");
  cmd->add_option("--sigma", f.sigma, "disorder strength sigma_eps/V");
  cmd->add_option("--sigma-grid", f.sigma_grid,
                  "comma list or lo:hi:count (log-spaced)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--realizations", f.realizations, "independent disorder draws");
  cmd->add_option("--mc-samples", f.mc_samples, "random-state samples");
  cmd->add_option("--t-burn", f.t_burn, "averaging start time (hbar/V)");
  cmd->add_option("--t-max", f.t_max, "averaging end time (hbar/V)");
  cmd->add_option("--t-samples", f.t_samples, "time samples on [t_burn, t_max]");
  cmd->add_option("--jitter-seed", f.jitter_seed, "seed of the sampling jitter");
  cmd->add_option("--entropy-mode", f.entropy_mode,
                  "entropy_of_average | average_of_entropy");
  cmd->add_option("--out", f.out_dir, "output directory (default $ANDERSON_OUT)");
  cmd->add_option("--threads", f.threads, "worker threads (results are identical)");
}

ExperimentConfig resolve_config(const CLI::App& cmd, const CliFlags& f, Command which) {
  ExperimentConfig config;
  if (!f.manifest_file.empty()) {
    const anderson::RerunPlan plan = anderson::load_rerun_plan(f.manifest_file);
    if (plan.command != which) {
      throw anderson::ConfigError("manifest records command '" +
                                  anderson::command_name(plan.command) +
                                  "', not '" + anderson::command_name(which) + "'");
    }
    config = plan.config;
  } else if (!f.config_file.empty()) {
    config = anderson::experiment_config_from_json_string(
        anderson::read_file_bytes(f.config_file));
  }

  const auto given = [&cmd](const std::string& name) {
    const CLI::Option* opt = cmd.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--n")) config.spec.n = f.n;
  if (given("--sigma")) config.spec.disorder_strength = f.sigma;
  if (given("--sigma-grid")) config.sigma_grid = parse_sigma_grid(f.sigma_grid);
  if (given("--seed")) config.spec.seed = f.seed;
  if (given("--realizations")) config.realizations = f.realizations;
  if (given("--mc-samples")) config.mc_samples = f.mc_samples;
  if (given("--t-burn")) config.grid.t_burn = f.t_burn;
  if (given("--t-max")) config.grid.t_max = f.t_max;
  if (given("--t-samples")) config.grid.samples = f.t_samples;
  if (given("--jitter-seed")) config.grid.jitter_seed = f.jitter_seed;
  if (given("--entropy-mode")) {
    config.entropy_mode = anderson::entropy_mode_from_name(f.entropy_mode);
  }
  if (given("--threads")) config.threads = f.threads;
  if (given("--out")) {
    config.output_dir = f.out_dir;
  } else if (config.output_dir.empty()) {
    const char* env = std::getenv("ANDERSON_OUT");
    config.output_dir = env != nullptr ? env : "anderson-out";
  }
  if (given("--j0")) config.origin = f.j0 - 1;
  if (given("--times")) config.snapshot_times = parse_double_list(f.snapshot_times);
  if (given("--sites")) {
    config.series_sites = parse_int_list(f.series_sites);
    for (int& j : config.series_sites) j -= 1;
  }
  if (given("--mssd-origins")) {
    config.mssd_origins = parse_int_list(f.mssd_origins);
    for (int& j : config.mssd_origins) j -= 1;
  }
  if (given("--mssd-samples")) config.mssd_time_samples = f.mssd_samples;
  if (given("--wide")) config.wide_snapshots = f.wide;
  if (given("--export-overlaps")) config.export_overlaps = f.export_overlaps;
  if (given("--export-energies")) config.export_energies = f.export_energies;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the 1D disordered tight-binding chain"};
  app.set_version_flag("--version", std::string("anderson ") + anderson::kVersion);
  app.require_subcommand(1);

  CliFlags flags;
  CLI::App* spectrum = app.add_subcommand(
      "spectrum", "diagonalize one realization; emit eigenvalues and audits");
  CLI::App* relax = app.add_subcommand(
      "relax", "equilibration of an initially localized state");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "localization metrics across disorder strengths");
  CLI::App* rpse = app.add_subcommand(
      "rpse", "random-pure-state profiles, fluctuation amplitudes, MC checks");
  CLI::App* circle = app.add_subcommand(
      "circle", "fluctuation/variance complementarity across disorder");

  for (CLI::App* cmd : {spectrum, relax, sweep, rpse, circle}) {
    add_common_options(cmd, flags);
  }
  relax->add_option("--j0", flags.j0, "initial site (1-based)");
  relax->add_option("--times", flags.snapshot_times, "snapshot times, comma list");
  relax->add_option("--sites", flags.series_sites, "series sites (1-based), comma list");
  relax->add_option("--mssd-origins", flags.mssd_origins,
                    "origins of the spreading traces (1-based)");
  relax->add_option("--mssd-samples", flags.mssd_samples, "trace time samples");
  relax->add_flag("--wide", flags.wide, "snapshots as t,rho_1..rho_N rows");
  spectrum->add_flag("--export-overlaps", flags.export_overlaps,
                     "also write the full overlap matrix");
  spectrum->add_flag("--export-energies", flags.export_energies,
                     "also write the sampled site energies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  const struct {
    CLI::App* cmd;
    Command which;
  } dispatch[] = {{spectrum, Command::spectrum},
                  {relax, Command::relax},
                  {sweep, Command::sweep},
                  {rpse, Command::rpse},
                  {circle, Command::circle}};
  try {
    for (const auto& d : dispatch) {
      if (!d.cmd->parsed()) continue;
      const ExperimentConfig config = resolve_config(*d.cmd, flags, d.which);
      const anderson::RunManifest manifest = anderson::run_command(d.which, config);
      std::cout << anderson::command_name(d.which) << ": wrote "
                << manifest.outputs.size() << " file(s) to " << config.output_dir
                << " in " << anderson::format_double(manifest.wall_seconds) << " s\n";
      return 0;
    }
  } catch (const anderson::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const anderson::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const anderson::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
