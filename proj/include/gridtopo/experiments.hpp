#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "gridtopo/dynamics.hpp"
#include "gridtopo/estimation.hpp"
#include "gridtopo/grid.hpp"
#include "gridtopo/spectral.hpp"
#include "gridtopo/topology.hpp"

namespace gridtopo {

/// Every tunable of a simulate/estimate run.
struct RunConfig {
  double ts = 0.01;
  std::size_t samples = 100000;
  std::size_t burn_in = 10000;
  std::uint64_t seed = 1;
  double psd = 10.0;
  NoiseKind noise = NoiseKind::WhiteGaussian;
  double ar_coefficient = 0.0;
  double magnitude_cap = 1e9;
  std::size_t fir_order = 20;
  double rho = 1e-3;
  double tau = 0.2 * std::numbers::pi;
  std::size_t omega_points = 65;
  bool full_grid = false;  // [-pi, pi) instead of [0, pi]
  Prefilter prefilter = Prefilter::Difference;
  unsigned threads = 1;  // 0 = hardware concurrency
  bool prune = true;
  bool timing = true;  // record wall time in sweep output
  std::vector<std::size_t> sample_list;

  /// Throws Error{Config} on out-of-range values.
  void validate() const;
};

/// Sets one field from its textual key/value. Keys are the field names
/// above; booleans accept true/false/1/0/yes/no; sample_list is a comma list.
/// Throws Error{Config} for unknown keys or unparsable values.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

/// Parses `key = value` lines; `#` starts a comment; blank lines ignored.
/// Duplicate keys: last one wins. Throws Error{Config} with the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& file);

/// Defaults, then `file_entries`, then `cli_entries`.
RunConfig resolve_config(const std::map<std::string, std::string>& file_entries,
                         const std::map<std::string, std::string>& cli_entries);

/// Text form accepted by parse_config_text, one line per field.
std::string to_config_text(const RunConfig& config);

FrequencyGrid make_grid(const RunConfig& config);
NoiseModel make_noise(const RunConfig& config);
Eigen::VectorXd noise_psd_vector(const GridGraph& g, const RunConfig& config);

TimeSeriesPanel run_simulation(const GridGraph& g, const RunConfig& config);

struct EstimationOutcome {
  FirWienerBank bank;
  TopologyEstimate topology;
};

EstimationOutcome run_estimation(const TimeSeriesPanel& panel, const RunConfig& config);

struct SweepRow {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  ErrorReport report;
  double wall_time_s = 0.0;
  std::string error;  // failure message when !ok
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ascending by samples
};

/// One independent simulate+estimate+score cycle per entry of
/// config.sample_list (which must be strictly ascending); row k uses seed
/// config.seed + k. Failures are recorded and the sweep continues.
SweepResult run_sweep(const GridGraph& g, const RunConfig& config);

/// Header `samples,relative_error,fp,fn,wall_time_s,seed,status`. With
/// config.timing false the wall time is written as 0 so files compare
/// byte-for-byte.
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& file);

/// Named test fixtures: path3, star4, cycle4, loopy5. Per-node inertia and
/// damping satisfy M/ts^2 in [0.75, 0.85] and D/ts in [1.45, 1.55] for
/// ts = 0.01; line susceptances lie in [0.28, 0.32]. Drawn from `seed`.
GridGraph fixture_graph(const std::string& name, std::uint64_t seed = 7);
std::vector<std::string> fixture_names();

}  // namespace gridtopo
