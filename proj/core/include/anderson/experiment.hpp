#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anderson/chain.hpp"
#include "anderson/dynamics.hpp"
#include "anderson/equilibrium.hpp"

namespace anderson {

enum class Command { spectrum, relax, sweep, rpse, circle };

std::string command_name(Command cmd);
Command command_from_name(const std::string& name);

/// Everything a run needs; (config, seed) fully determines every emitted CSV
/// byte, for any thread count.
struct ExperimentConfig {
  ChainSpec spec{1000, 0.24, 1};
  int realizations = 8;
  TimeGrid grid{1e3, 1e5, 4000, 0};
  std::vector<double> sigma_grid;  // empty: sweep/circle fall back to the default grid
  int mc_samples = 20000;
  std::string output_dir;
  EntropyMode entropy_mode = EntropyMode::entropy_of_average;
  int threads = 1;

  // relax
  int origin = 0;                      // 0-based site of initial localization
  std::vector<double> snapshot_times;  // empty: default ladder
  std::vector<int> series_sites;       // 0-based; empty: {0, 1, 2}
  std::vector<int> mssd_origins;       // 0-based; empty: {0, 1, 2}
  int mssd_time_samples = 48;

  bool wide_snapshots = false;
  bool export_overlaps = false;
  bool export_energies = false;

  void validate(Command cmd) const;

  /// Hash of the physics-relevant fields (output_dir and threads excluded),
  /// embedded in CSV headers; identical configs give identical files.
  std::string physics_hash() const;
};

/// 24 log-spaced disorder strengths in [0.05, 20].
std::vector<double> default_sigma_grid();

/// Snapshot time ladder used when none is configured.
std::vector<double> default_snapshot_times();

std::string to_json_string(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json_string(const std::string& text);

std::string entropy_mode_name(EntropyMode mode);
EntropyMode entropy_mode_from_name(const std::string& name);

struct OutputRecord {
  std::string name;    // file name relative to output_dir
  std::string fnv64;   // content hash
  std::uint64_t bytes = 0;
};

struct AuditRecord {
  double sigma_over_v = 0.0;
  int realization = 0;
  double min_gap = 0.0;
  bool degenerate = false;
};

struct FailureRecord {
  double sigma_over_v = 0.0;
  int realization = 0;
  std::string message;
};

/// Everything needed to bit-reproduce a run: the resolved config, the derived
/// per-realization streams, audit summaries, and hashes of every output.
struct RunManifest {
  std::string version;
  Command command = Command::spectrum;
  ExperimentConfig config;
  std::string config_hash;
  double wall_seconds = 0.0;
  std::vector<std::uint64_t> realization_streams;
  std::vector<AuditRecord> audits;
  std::vector<FailureRecord> failures;
  std::vector<OutputRecord> outputs;
};

std::string manifest_to_json_string(const RunManifest& manifest);

/// Reads {command, config} back from a manifest (or plain config) file.
struct RerunPlan {
  Command command = Command::spectrum;
  ExperimentConfig config;
};
RerunPlan load_rerun_plan(const std::string& path);

RunManifest run_spectrum(const ExperimentConfig& config);
RunManifest run_relax(const ExperimentConfig& config);
RunManifest run_sweep(const ExperimentConfig& config);
RunManifest run_rpse(const ExperimentConfig& config);
RunManifest run_circle(const ExperimentConfig& config);
RunManifest run_command(Command cmd, const ExperimentConfig& config);

}  // namespace anderson
