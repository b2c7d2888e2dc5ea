#include "anderson/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

#include "anderson/csv.hpp"
#include "anderson/errors.hpp"
#include "anderson/rng.hpp"
#include "anderson/rpse.hpp"
#include "anderson/version.hpp"
#include "parallel.hpp"

namespace anderson {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string command_name(Command cmd) {
  switch (cmd) {
    case Command::spectrum: return "spectrum";
    case Command::relax: return "relax";
    case Command::sweep: return "sweep";
    case Command::rpse: return "rpse";
    case Command::circle: return "circle";
  }
  throw ConfigError("unknown command");
}

Command command_from_name(const std::string& name) {
  if (name == "spectrum") return Command::spectrum;
  if (name == "relax") return Command::relax;
  if (name == "sweep") return Command::sweep;
  if (name == "rpse") return Command::rpse;
  if (name == "circle") return Command::circle;
  throw ConfigError("unknown command: " + name);
}

std::string entropy_mode_name(EntropyMode mode) {
  return mode == EntropyMode::entropy_of_average ? "entropy_of_average"
                                                 : "average_of_entropy";
}

EntropyMode entropy_mode_from_name(const std::string& name) {
  if (name == "entropy_of_average") return EntropyMode::entropy_of_average;
  if (name == "average_of_entropy") return EntropyMode::average_of_entropy;
  throw ConfigError("unknown entropy mode: " + name);
}

std::vector<double> default_sigma_grid() {
  constexpr int kPoints = 24;
  constexpr double kLo = 0.05;
  constexpr double kHi = 20.0;
  std::vector<double> grid(kPoints);
  const double step = (std::log(kHi) - std::log(kLo)) / (kPoints - 1);
  for (int i = 0; i < kPoints; ++i) {
    grid[static_cast<std::size_t>(i)] = std::exp(std::log(kLo) + i * step);
  }
  return grid;
}

std::vector<double> default_snapshot_times() { return {0.0, 2.0, 10.0, 50.0, 250.0, 1000.0}; }

void ExperimentConfig::validate(Command cmd) const {
  spec.validate();
  if (realizations < 1) throw ConfigError("realizations must be >= 1");
  grid.validate();
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (output_dir.empty()) throw ConfigError("output directory must be set");
  for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
    if (!(sigma_grid[i] >= 0.0)) throw ConfigError("sigma grid values must be >= 0");
    if (i > 0 && !(sigma_grid[i] > sigma_grid[i - 1])) {
      throw ConfigError("sigma grid must be strictly increasing");
    }
  }
  if (cmd == Command::relax) {
    if (origin < 0 || origin >= spec.n) throw ConfigError("origin out of range");
    for (double t : snapshot_times) {
      if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("snapshot times must be finite and >= 0");
    }
    for (int j : series_sites) {
      if (j < 0 || j >= spec.n) throw ConfigError("series site out of range");
    }
    for (int j : mssd_origins) {
      if (j < 0 || j >= spec.n) throw ConfigError("mssd origin out of range");
    }
    if (mssd_time_samples < 2) throw ConfigError("mssd_time_samples must be >= 2");
  }
}

namespace {

ordered_json chain_spec_to_json(const ChainSpec& spec) {
  ordered_json j;
  j["n"] = spec.n;
  j["disorder_strength"] = spec.disorder_strength;
  j["seed"] = spec.seed;
  j["hopping"] = spec.hopping;
  return j;
}

ChainSpec chain_spec_from_json(const ordered_json& j) {
  ChainSpec spec;
  spec.n = j.at("n").get<int>();
  spec.disorder_strength = j.at("disorder_strength").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.hopping = j.value("hopping", 1.0);
  return spec;
}

// Site labels are 1-based in every external surface (JSON, CSV, CLI); the
// in-memory config stores 0-based indices.
std::vector<int> to_one_based(const std::vector<int>& zero_based) {
  std::vector<int> out(zero_based.size());
  std::transform(zero_based.begin(), zero_based.end(), out.begin(),
                 [](int j) { return j + 1; });
  return out;
}

std::vector<int> to_zero_based(const std::vector<int>& one_based) {
  std::vector<int> out(one_based.size());
  std::transform(one_based.begin(), one_based.end(), out.begin(),
                 [](int j) { return j - 1; });
  return out;
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["spec"] = chain_spec_to_json(c.spec);
  j["realizations"] = c.realizations;
  j["grid"] = {{"t_burn", c.grid.t_burn},
               {"t_max", c.grid.t_max},
               {"samples", c.grid.samples},
               {"jitter_seed", c.grid.jitter_seed}};
  j["sigma_grid"] = c.sigma_grid;
  j["mc_samples"] = c.mc_samples;
  j["output_dir"] = c.output_dir;
  j["entropy_mode"] = entropy_mode_name(c.entropy_mode);
  j["threads"] = c.threads;
  j["origin"] = c.origin + 1;
  j["snapshot_times"] = c.snapshot_times;
  j["series_sites"] = to_one_based(c.series_sites);
  j["mssd_origins"] = to_one_based(c.mssd_origins);
  j["mssd_time_samples"] = c.mssd_time_samples;
  j["wide_snapshots"] = c.wide_snapshots;
  j["export_overlaps"] = c.export_overlaps;
  j["export_energies"] = c.export_energies;
  return j;
}

ExperimentConfig config_from_json(const ordered_json& j) {
  static const std::vector<std::string> known = {
      "spec",          "realizations",  "grid",           "sigma_grid",
      "mc_samples",    "output_dir",    "entropy_mode",   "threads",
      "origin",        "snapshot_times", "series_sites",  "mssd_origins",
      "mssd_time_samples", "wide_snapshots", "export_overlaps", "export_energies"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError("unknown config key: " + item.key());
    }
  }
  ExperimentConfig c;
  if (j.contains("spec")) c.spec = chain_spec_from_json(j.at("spec"));
  c.realizations = j.value("realizations", c.realizations);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.grid.t_burn = g.value("t_burn", c.grid.t_burn);
    c.grid.t_max = g.value("t_max", c.grid.t_max);
    c.grid.samples = g.value("samples", c.grid.samples);
    c.grid.jitter_seed = g.value("jitter_seed", c.grid.jitter_seed);
  }
  c.sigma_grid = j.value("sigma_grid", c.sigma_grid);
  c.mc_samples = j.value("mc_samples", c.mc_samples);
  c.output_dir = j.value("output_dir", c.output_dir);
  if (j.contains("entropy_mode")) {
    c.entropy_mode = entropy_mode_from_name(j.at("entropy_mode").get<std::string>());
  }
  c.threads = j.value("threads", c.threads);
  if (j.contains("origin")) c.origin = j.at("origin").get<int>() - 1;
  c.snapshot_times = j.value("snapshot_times", c.snapshot_times);
  if (j.contains("series_sites")) {
    c.series_sites = to_zero_based(j.at("series_sites").get<std::vector<int>>());
  }
  if (j.contains("mssd_origins")) {
    c.mssd_origins = to_zero_based(j.at("mssd_origins").get<std::vector<int>>());
  }
  c.mssd_time_samples = j.value("mssd_time_samples", c.mssd_time_samples);
  c.wide_snapshots = j.value("wide_snapshots", c.wide_snapshots);
  c.export_overlaps = j.value("export_overlaps", c.export_overlaps);
  c.export_energies = j.value("export_energies", c.export_energies);
  return c;
}

}  // namespace

std::string ExperimentConfig::physics_hash() const {
  ordered_json j = config_to_json(*this);
  j.erase("output_dir");
  j.erase("threads");
  return fnv1a64_hex(j.dump());
}

std::string to_json_string(const ExperimentConfig& config) {
  return config_to_json(config).dump(2);
}

ExperimentConfig experiment_config_from_json_string(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
}

std::string manifest_to_json_string(const RunManifest& m) {
  ordered_json j;
  j["tool"] = "anderson";
  j["version"] = m.version;
  j["command"] = command_name(m.command);
  j["config"] = config_to_json(m.config);
  j["config_hash"] = m.config_hash;
  j["wall_seconds"] = m.wall_seconds;
  j["realization_streams"] = m.realization_streams;
  j["audits"] = ordered_json::array();
  for (const auto& a : m.audits) {
    ordered_json ja;
    ja["sigma_over_v"] = a.sigma_over_v;
    ja["realization"] = a.realization;
    ja["min_gap"] = a.min_gap;
    ja["degenerate"] = a.degenerate;
    j["audits"].push_back(std::move(ja));
  }
  j["failures"] = ordered_json::array();
  for (const auto& f : m.failures) {
    j["failures"].push_back({{"sigma_over_v", f.sigma_over_v},
                             {"realization", f.realization},
                             {"message", f.message}});
  }
  j["outputs"] = ordered_json::array();
  for (const auto& o : m.outputs) {
    j["outputs"].push_back(
        {{"name", o.name}, {"fnv64", o.fnv64}, {"bytes", o.bytes}});
  }
  return j.dump(2);
}

RerunPlan load_rerun_plan(const std::string& path) {
  const std::string text = read_file_bytes(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad manifest JSON: ") + e.what());
  }
  if (!j.contains("command") || !j.contains("config")) {
    throw ConfigError("manifest lacks command/config: " + path);
  }
  RerunPlan plan;
  plan.command = command_from_name(j.at("command").get<std::string>());
  try {
    plan.config = config_from_json(j.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad manifest config: ") + e.what());
  }
  return plan;
}

namespace {

struct RunContext {
  fs::path dir;
  RunManifest manifest;
  std::chrono::steady_clock::time_point started;
};

RunContext begin_run(Command cmd, const ExperimentConfig& config) {
  config.validate(cmd);
  RunContext ctx;
  ctx.dir = fs::path(config.output_dir);
  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  if (ec || !fs::is_directory(ctx.dir)) {
    throw IoError("cannot create output directory " + config.output_dir +
                  (ec ? ": " + ec.message() : ""));
  }
  ctx.manifest.version = kVersion;
  ctx.manifest.command = cmd;
  ctx.manifest.config = config;
  ctx.manifest.config_hash = config.physics_hash();
  ctx.started = std::chrono::steady_clock::now();
  return ctx;
}

void register_output(RunContext& ctx, const std::string& name) {
  const std::string bytes = read_file_bytes((ctx.dir / name).string());
  ctx.manifest.outputs.push_back(
      {name, fnv1a64_hex(bytes), static_cast<std::uint64_t>(bytes.size())});
}

RunManifest finish_run(RunContext& ctx) {
  ctx.manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started)
          .count();
  const std::string text = manifest_to_json_string(ctx.manifest);
  const fs::path path = ctx.dir / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << text << '\n';
  out.flush();
  if (!out) throw IoError("manifest write failed: " + path.string());
  return ctx.manifest;
}

void standard_meta(CsvWriter& csv, const RunContext& ctx) {
  csv.meta("tool", std::string("anderson ") + kVersion);
  csv.meta("command", command_name(ctx.manifest.command));
  csv.meta("config-hash", ctx.manifest.config_hash);
  csv.meta("seed", std::to_string(ctx.manifest.config.spec.seed));
  csv.meta("n", std::to_string(ctx.manifest.config.spec.n));
  csv.meta("units", "energy in V, time in hbar/V, displacement in sites");
}

EigenSystem prepared_eigensystem(const ExperimentConfig& config, double sigma,
                                 int realization, RunContext& ctx) {
  ChainSpec spec = config.spec;
  spec.disorder_strength = sigma;
  const DisorderRealization dis = sample_disorder(spec, realization);
  const Hamiltonian h = build_hamiltonian(dis);
  EigenSystem eig = diagonalize(h);
  const SpectrumAudit audit = audit_spectrum(eig);
  ctx.manifest.audits.push_back({sigma, realization, audit.min_gap, audit.degenerate});
  return eig;
}

std::vector<double> quantile_sorted(std::vector<double> v,
                                    std::initializer_list<double> ps) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double p : ps) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - std::floor(h);
    const double upper = lo + 1 < v.size() ? v[lo + 1] : v[lo];
    out.push_back(v[lo] + frac * (upper - v[lo]));
  }
  return out;
}

}  // namespace

RunManifest run_spectrum(const ExperimentConfig& config) {
  RunContext ctx = begin_run(Command::spectrum, config);
  const DisorderRealization dis = sample_disorder(config.spec, 0);
  const Hamiltonian h = build_hamiltonian(dis);
  const EigenSystem eig = diagonalize(h);
  const SpectrumAudit audit = audit_spectrum(eig);
  const ResidualReport residuals = residual_report(h, eig);
  ctx.manifest.audits.push_back(
      {config.spec.disorder_strength, 0, audit.min_gap, audit.degenerate});
  ctx.manifest.realization_streams.push_back(streams::kDisorder);

  {
    CsvWriter csv((ctx.dir / "eigenvalues.csv").string(), {"energy"});
    standard_meta(csv, ctx);
    csv.meta("sigma_over_v", format_double(config.spec.disorder_strength));
    csv.meta("max_eigen_residual", format_double(residuals.max_eigen_residual));
    csv.meta("max_orthogonality_defect",
             format_double(residuals.max_orthogonality_defect));
    csv.meta("min_gap", format_double(audit.min_gap));
    if (audit.min_gap_difference) {
      csv.meta("min_gap_difference", format_double(*audit.min_gap_difference));
    }
    csv.meta("degenerate", audit.degenerate ? "true" : "false");
    csv.begin_data();
    for (int k = 0; k < eig.size(); ++k) csv.row({eig.eigenvalues[k]});
    csv.close();
    register_output(ctx, "eigenvalues.csv");
  }
  if (config.export_overlaps) {
    export_overlaps_csv(eig, (ctx.dir / "overlaps.csv").string());
    register_output(ctx, "overlaps.csv");
  }
  if (config.export_energies) {
    export_energies_csv(dis, (ctx.dir / "energies.csv").string());
    register_output(ctx, "energies.csv");
  }
  return finish_run(ctx);
}

RunManifest run_relax(const ExperimentConfig& config) {
  RunContext ctx = begin_run(Command::relax, config);
  const EigenSystem eig =
      prepared_eigensystem(config, config.spec.disorder_strength, 0, ctx);
  ctx.manifest.realization_streams.push_back(streams::kDisorder);
  require_nondegenerate(eig, "relax");
  const int n = eig.size();
  const int j0 = config.origin;
  const PureState psi0 = localized_state(eig, j0);

  // (a) spreading profile snapshots
  const std::vector<double> snap_times =
      config.snapshot_times.empty() ? default_snapshot_times() : config.snapshot_times;
  {
    std::vector<Eigen::VectorXd> snaps(snap_times.size());
    detail::parallel_for_index(static_cast<std::int64_t>(snap_times.size()),
                               config.threads, [&](std::int64_t i) {
      snaps[static_cast<std::size_t>(i)] =
          site_populations(eig, evolve(eig, psi0, snap_times[static_cast<std::size_t>(i)]))
              .probs;
    });
    if (config.wide_snapshots) {
      std::vector<std::string> cols = {"t"};
      for (int j = 1; j <= n; ++j) cols.push_back("rho_" + std::to_string(j));
      CsvWriter csv((ctx.dir / "snapshots.csv").string(), cols);
      standard_meta(csv, ctx);
      csv.meta("origin", std::to_string(j0 + 1));
      csv.begin_data();
      std::vector<CsvCell> cells(static_cast<std::size_t>(n) + 1);
      for (std::size_t i = 0; i < snap_times.size(); ++i) {
        cells[0] = snap_times[i];
        for (int j = 0; j < n; ++j) cells[static_cast<std::size_t>(j) + 1] = snaps[i][j];
        csv.row(cells);
      }
      csv.close();
    } else {
      CsvWriter csv((ctx.dir / "snapshots.csv").string(), {"t", "j", "rho"});
      standard_meta(csv, ctx);
      csv.meta("origin", std::to_string(j0 + 1));
      csv.meta("row-order", "by displacement from the origin");
      csv.begin_data();
      for (std::size_t i = 0; i < snap_times.size(); ++i) {
        for (int dj = displacement_lo(n); dj <= displacement_hi(n); ++dj) {
          const int j = ((j0 + dj) % n + n) % n;
          csv.row({snap_times[i], static_cast<long long>(j + 1), snaps[i][j]});
        }
      }
      csv.close();
    }
    register_output(ctx, "snapshots.csv");
  }

  // (b) per-site population time series on a uniform grid over [0, t_max]
  {
    const std::vector<int> sites =
        config.series_sites.empty() ? std::vector<int>{0, 1, 2} : config.series_sites;
    for (int j : sites) {
      if (j >= n) throw ConfigError("series site out of range");
    }
    const int m = config.grid.samples;
    std::vector<double> times(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      times[static_cast<std::size_t>(i)] =
          m == 1 ? 0.0 : config.grid.t_max * static_cast<double>(i) / (m - 1);
    }
    Eigen::MatrixXd series(m, static_cast<Eigen::Index>(sites.size()));
    detail::parallel_for_index(m, config.threads, [&](std::int64_t i) {
      const SiteDistribution dist = site_populations(
          eig, evolve(eig, psi0, times[static_cast<std::size_t>(i)]));
      for (std::size_t s = 0; s < sites.size(); ++s) {
        series(i, static_cast<Eigen::Index>(s)) = dist.probs[sites[s]];
      }
    });
    CsvWriter csv((ctx.dir / "series.csv").string(), {"t", "j", "rho"});
    standard_meta(csv, ctx);
    csv.meta("origin", std::to_string(j0 + 1));
    csv.begin_data();
    for (int i = 0; i < m; ++i) {
      for (std::size_t s = 0; s < sites.size(); ++s) {
        csv.row({times[static_cast<std::size_t>(i)],
                 static_cast<long long>(sites[s] + 1),
                 series(i, static_cast<Eigen::Index>(s))});
      }
    }
    csv.close();
    register_output(ctx, "series.csv");
  }

  // (c) equilibrium conditional for the origin, and the site-averaged profile
  const EquilibriumProfile profile = displacement_profile(eig);
  {
    CsvWriter csv((ctx.dir / "equilibrium_conditional.csv").string(),
                  {"j", "dj", "rho_bar"});
    standard_meta(csv, ctx);
    csv.meta("origin", std::to_string(j0 + 1));
    csv.begin_data();
    for (int dj = displacement_lo(n); dj <= displacement_hi(n); ++dj) {
      const int j = ((j0 + dj) % n + n) % n;
      csv.row({static_cast<long long>(j + 1), static_cast<long long>(dj),
               profile.per_origin(j0, j)});
    }
    csv.close();
    register_output(ctx, "equilibrium_conditional.csv");
  }
  {
    CsvWriter csv((ctx.dir / "equilibrium_profile.csv").string(), {"dj", "rho_bar"});
    standard_meta(csv, ctx);
    csv.begin_data();
    for (int dj = displacement_lo(n); dj <= displacement_hi(n); ++dj) {
      const int d = (dj % n + n) % n;
      csv.row({static_cast<long long>(dj), profile.displacement_avg[d]});
    }
    csv.close();
    register_output(ctx, "equilibrium_profile.csv");
  }

  // (d) spreading traces: per-origin delta-j(t) plus the site average
  {
    const std::vector<int> origins =
        config.mssd_origins.empty() ? std::vector<int>{0, 1, 2} : config.mssd_origins;
    const int m = config.mssd_time_samples;
    std::vector<double> times(static_cast<std::size_t>(m));
    times[0] = 0.0;
    const double t_lo = 0.1;
    if (m == 2) {
      times[1] = config.grid.t_max;
    } else {
      for (int i = 1; i < m; ++i) {
        times[static_cast<std::size_t>(i)] =
            t_lo * std::pow(config.grid.t_max / t_lo,
                            static_cast<double>(i - 1) / (m - 2));
      }
    }
    Eigen::MatrixXd trace(m, static_cast<Eigen::Index>(origins.size() + 1));
    detail::parallel_for_index(m, config.threads, [&](std::int64_t i) {
      const double t = times[static_cast<std::size_t>(i)];
      const Eigen::ArrayXd theta = -t * eig.eigenvalues.array();
      const Eigen::MatrixXd re =
          eig.overlaps * theta.cos().matrix().asDiagonal() * eig.overlaps.transpose();
      const Eigen::MatrixXd im =
          eig.overlaps * theta.sin().matrix().asDiagonal() * eig.overlaps.transpose();
      const Eigen::MatrixXd rho = re.cwiseProduct(re) + im.cwiseProduct(im);
      double total = 0.0;
      for (int o = 0; o < n; ++o) {
        double mssd = 0.0;
        for (int dj = displacement_lo(n); dj <= displacement_hi(n); ++dj) {
          const int j = ((o + dj) % n + n) % n;
          mssd += static_cast<double>(dj) * static_cast<double>(dj) * rho(j, o);
        }
        total += mssd;
        const auto it = std::find(origins.begin(), origins.end(), o);
        if (it != origins.end()) {
          trace(i, static_cast<Eigen::Index>(it - origins.begin())) = std::sqrt(mssd);
        }
      }
      trace(i, static_cast<Eigen::Index>(origins.size())) =
          std::sqrt(total / static_cast<double>(n));
    });
    std::vector<std::string> cols = {"t"};
    for (int o : origins) cols.push_back("sqrt_mssd_origin_" + std::to_string(o + 1));
    cols.push_back("sqrt_mssd_site_avg");
    CsvWriter csv((ctx.dir / "mssd_trace.csv").string(), cols);
    standard_meta(csv, ctx);
    csv.begin_data();
    std::vector<CsvCell> cells(cols.size());
    for (int i = 0; i < m; ++i) {
      cells[0] = times[static_cast<std::size_t>(i)];
      for (std::size_t c = 0; c <= origins.size(); ++c) {
        cells[c + 1] = trace(i, static_cast<Eigen::Index>(c));
      }
      csv.row(cells);
    }
    csv.close();
    register_output(ctx, "mssd_trace.csv");
  }
  return finish_run(ctx);
}

namespace {

struct SweepRow {
  double sigma = 0.0;
  int realization = 0;
  LocalizationMetrics metrics;
};

}  // namespace

RunManifest run_sweep(const ExperimentConfig& config) {
  RunContext ctx = begin_run(Command::sweep, config);
  const std::vector<double> sigmas =
      config.sigma_grid.empty() ? default_sigma_grid() : config.sigma_grid;
  const int reals = config.realizations;
  const auto tasks = static_cast<std::int64_t>(sigmas.size()) * reals;

  std::vector<std::optional<SweepRow>> rows(static_cast<std::size_t>(tasks));
  std::vector<std::optional<AuditRecord>> audits(static_cast<std::size_t>(tasks));
  std::vector<std::optional<FailureRecord>> fails(static_cast<std::size_t>(tasks));

  detail::parallel_for_index(tasks, config.threads, [&](std::int64_t task) {
    const auto si = static_cast<std::size_t>(task / reals);
    const int r = static_cast<int>(task % reals);
    const double sigma = sigmas[si];
    try {
      ChainSpec spec = config.spec;
      spec.disorder_strength = sigma;
      const EigenSystem eig = diagonalize(build_hamiltonian(sample_disorder(spec, r)));
      const SpectrumAudit audit = audit_spectrum(eig);
      audits[static_cast<std::size_t>(task)] =
          AuditRecord{sigma, r, audit.min_gap, audit.degenerate};
      const TimeGrid* grid =
          config.entropy_mode == EntropyMode::average_of_entropy ? &config.grid : nullptr;
      SweepRow row;
      row.sigma = sigma;
      row.realization = r;
      row.metrics = localization_metrics(eig, config.entropy_mode, grid, 1);
      rows[static_cast<std::size_t>(task)] = row;
    } catch (const std::exception& e) {
      fails[static_cast<std::size_t>(task)] = FailureRecord{sigma, r, e.what()};
    }
  });

  for (const auto& a : audits) {
    if (a) ctx.manifest.audits.push_back(*a);
  }
  for (const auto& f : fails) {
    if (f) ctx.manifest.failures.push_back(*f);
  }
  for (int r = 0; r < reals; ++r) {
    ctx.manifest.realization_streams.push_back(streams::kDisorder +
                                               static_cast<std::uint64_t>(r));
  }

  CsvWriter csv((ctx.dir / "sweep.csv").string(),
                {"sigma_over_v", "n", "realization", "stat", "mssd", "sqrt_mssd",
                 "ipr_mean", "sqrt2_over_ipr", "n_effective"});
  standard_meta(csv, ctx);
  csv.meta("entropy_mode", entropy_mode_name(config.entropy_mode));
  csv.begin_data();
  std::string jsonl;
  for (std::int64_t task = 0; task < tasks; ++task) {
    const auto& row = rows[static_cast<std::size_t>(task)];
    if (!row) continue;
    const auto& m = row->metrics;
    csv.row({row->sigma, static_cast<long long>(config.spec.n),
             static_cast<long long>(row->realization), std::string("sample"),
             m.equilibrium_mssd, m.sqrt_mssd, m.mean_ipr, m.sqrt2_over_ipr,
             m.n_effective});
    ChainSpec spec = config.spec;
    spec.disorder_strength = row->sigma;
    ordered_json obj;
    obj["spec"] = ordered_json::parse(to_json_string(spec));
    obj["realization"] = row->realization;
    obj["mssd"] = m.equilibrium_mssd;
    obj["ipr_mean"] = m.mean_ipr;
    obj["n_effective"] = m.n_effective;
    obj["sqrt_mssd"] = m.sqrt_mssd;
    obj["sqrt2_over_ipr"] = m.sqrt2_over_ipr;
    jsonl += obj.dump();
    jsonl += '\n';
  }
  // Aggregate rows: median and quartiles over the surviving realizations.
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    std::vector<double> mssd, sqrt_mssd, ipr, sqrt2, neff;
    for (int r = 0; r < reals; ++r) {
      const auto& row = rows[si * static_cast<std::size_t>(reals) + static_cast<std::size_t>(r)];
      if (!row) continue;
      mssd.push_back(row->metrics.equilibrium_mssd);
      sqrt_mssd.push_back(row->metrics.sqrt_mssd);
      ipr.push_back(row->metrics.mean_ipr);
      sqrt2.push_back(row->metrics.sqrt2_over_ipr);
      neff.push_back(row->metrics.n_effective);
    }
    if (mssd.empty()) continue;
    const char* stats[] = {"q25", "median", "q75"};
    const double ps[] = {0.25, 0.5, 0.75};
    for (int s = 0; s < 3; ++s) {
      csv.row({sigmas[si], static_cast<long long>(config.spec.n),
               static_cast<long long>(-1), std::string(stats[s]),
               quantile_sorted(mssd, {ps[s]})[0], quantile_sorted(sqrt_mssd, {ps[s]})[0],
               quantile_sorted(ipr, {ps[s]})[0], quantile_sorted(sqrt2, {ps[s]})[0],
               quantile_sorted(neff, {ps[s]})[0]});
    }
  }
  csv.close();
  register_output(ctx, "sweep.csv");

  {
    std::ofstream out(ctx.dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write metrics.jsonl");
    out << jsonl;
    out.flush();
    if (!out) throw IoError("metrics.jsonl write failed");
  }
  register_output(ctx, "metrics.jsonl");
  return finish_run(ctx);
}

RunManifest run_rpse(const ExperimentConfig& config) {
  RunContext ctx = begin_run(Command::rpse, config);
  const EigenSystem eig =
      prepared_eigensystem(config, config.spec.disorder_strength, 0, ctx);
  ctx.manifest.realization_streams.push_back(streams::kDisorder);
  require_nondegenerate(eig, "rpse");
  const int n = eig.size();
  const double nn1 = static_cast<double>(n) * (n + 1.0);

  RngStream showcase_rng(config.spec.seed, streams::kRpseShowcase);
  const RpseState showcase = sample_rpse(n, showcase_rng);
  const SiteDistribution profile = state_time_avg_populations(eig, showcase);
  const EnsembleMoments moments = ensemble_moments(eig);

  {
    CsvWriter csv((ctx.dir / "rpse_profile.csv").string(),
                  {"j", "rho_bar", "ensemble_mean"});
    standard_meta(csv, ctx);
    csv.meta("sigma_over_v", format_double(config.spec.disorder_strength));
    csv.begin_data();
    for (int j = 0; j < n; ++j) {
      csv.row({static_cast<long long>(j + 1), profile.probs[j], 1.0 / n});
    }
    csv.close();
    register_output(ctx, "rpse_profile.csv");
  }
  {
    CsvWriter csv((ctx.dir / "rpse_fluct.csv").string(),
                  {"j", "fluct_amplitude", "fluct_scaled", "site_avg_scaled"});
    standard_meta(csv, ctx);
    csv.meta("scale", "fluct_scaled = N(N+1) * fluct_amplitude");
    csv.begin_data();
    const double site_avg_scaled = nn1 * moments.fluct_amplitude_site_avg;
    for (int j = 0; j < n; ++j) {
      csv.row({static_cast<long long>(j + 1), moments.fluct_amplitude[j],
               nn1 * moments.fluct_amplitude[j], site_avg_scaled});
    }
    csv.close();
    register_output(ctx, "rpse_fluct.csv");
  }
  {
    CsvWriter csv((ctx.dir / "moments.csv").string(),
                  {"j", "fluct_amplitude", "ensemble_variance", "budget"});
    standard_meta(csv, ctx);
    csv.begin_data();
    for (int j = 0; j < n; ++j) {
      csv.row({static_cast<long long>(j + 1), moments.fluct_amplitude[j],
               moments.ensemble_variance[j], moments.circle_budget});
    }
    csv.close();
    register_output(ctx, "moments.csv");
  }
  {
    const McMoments mc = mc_verify_moments(eig, config.mc_samples, config.spec.seed,
                                           config.threads);
    CsvWriter csv((ctx.dir / "rpse_mc.csv").string(),
                  {"j", "mean_pop", "mean_pop_se", "target_mean_pop", "fluct_amp",
                   "fluct_amp_se", "target_fluct_amp", "pop_var", "pop_var_se",
                   "target_pop_var"});
    standard_meta(csv, ctx);
    csv.meta("mc_samples", std::to_string(config.mc_samples));
    csv.begin_data();
    for (int j = 0; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      csv.row({static_cast<long long>(j + 1), mc.mean_population[sj].value,
               mc.mean_population[sj].std_error, 1.0 / n, mc.fluct_amplitude[sj].value,
               mc.fluct_amplitude[sj].std_error, moments.fluct_amplitude[j],
               mc.population_variance[sj].value, mc.population_variance[sj].std_error,
               moments.ensemble_variance[j]});
    }
    csv.close();
    register_output(ctx, "rpse_mc.csv");
  }
  return finish_run(ctx);
}

RunManifest run_circle(const ExperimentConfig& config) {
  RunContext ctx = begin_run(Command::circle, config);
  const std::vector<double> sigmas =
      config.sigma_grid.empty() ? default_sigma_grid() : config.sigma_grid;

  struct CircleRow {
    CircleLaw law;
    double ipr = 0.0;
  };
  std::vector<std::optional<CircleRow>> rows(sigmas.size());
  std::vector<std::optional<AuditRecord>> audits(sigmas.size());
  std::vector<std::optional<FailureRecord>> fails(sigmas.size());

  detail::parallel_for_index(static_cast<std::int64_t>(sigmas.size()), config.threads,
                             [&](std::int64_t i) {
    const auto si = static_cast<std::size_t>(i);
    try {
      ChainSpec spec = config.spec;
      spec.disorder_strength = sigmas[si];
      const EigenSystem eig = diagonalize(build_hamiltonian(sample_disorder(spec, 0)));
      const SpectrumAudit audit = audit_spectrum(eig);
      audits[si] = AuditRecord{sigmas[si], 0, audit.min_gap, audit.degenerate};
      rows[si] = CircleRow{circle_law(eig), mean_ipr(eig)};
    } catch (const std::exception& e) {
      fails[si] = FailureRecord{sigmas[si], 0, e.what()};
    }
  });

  for (const auto& a : audits) {
    if (a) ctx.manifest.audits.push_back(*a);
  }
  for (const auto& f : fails) {
    if (f) ctx.manifest.failures.push_back(*f);
  }
  ctx.manifest.realization_streams.push_back(streams::kDisorder);

  CsvWriter csv((ctx.dir / "circle.csv").string(),
                {"sigma_over_v", "site_avg_fluct", "site_avg_var", "budget", "ipr_mean"});
  standard_meta(csv, ctx);
  csv.begin_data();
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    if (!rows[si]) continue;
    csv.row({sigmas[si], rows[si]->law.site_avg_fluct, rows[si]->law.site_avg_var,
             rows[si]->law.budget, rows[si]->ipr});
  }
  csv.close();
  register_output(ctx, "circle.csv");
  return finish_run(ctx);
}

RunManifest run_command(Command cmd, const ExperimentConfig& config) {
  switch (cmd) {
    case Command::spectrum: return run_spectrum(config);
    case Command::relax: return run_relax(config);
    case Command::sweep: return run_sweep(config);
    case Command::rpse: return run_rpse(config);
    case Command::circle: return run_circle(config);
  }
  throw ConfigError("unknown command");
}

}  // namespace anderson
