#include "gridtopo/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "csv.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/rng.hpp"

namespace gridtopo {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double real_value(const std::string& key, const std::string& value) {
  try {
    return csv::parse_real(value, key);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
}

std::size_t count_value(const std::string& key, const std::string& value) {
  try {
    return csv::parse_index(value, key);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
}

bool bool_value(const std::string& key, std::string value) {
  std::transform(value.begin(), value.end(), value.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorKind::Config, key + ": expected a boolean, got '" + value + "'");
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  if (!(ts > 0.0) || !std::isfinite(ts)) fail("ts must be > 0");
  if (samples < 2) fail("samples must be >= 2");
  if (!(psd > 0.0) || !std::isfinite(psd)) fail("psd must be > 0");
  if (!(std::abs(ar_coefficient) < 1.0)) fail("ar_coefficient must satisfy |a| < 1");
  if (!(magnitude_cap > 0.0)) fail("magnitude_cap must be > 0");
  if (fir_order == 0) fail("fir_order must be >= 1");
  if (!(rho >= 0.0) || !std::isfinite(rho)) fail("rho must be >= 0");
  if (!(tau > 0.0 && tau <= std::numbers::pi)) fail("tau must lie in (0, pi]");
  if (omega_points < 2) fail("omega_points must be >= 2");
  for (std::size_t k = 0; k < sample_list.size(); ++k) {
    if (sample_list[k] < 2) fail("sample_list entries must be >= 2");
    if (k > 0 && sample_list[k] <= sample_list[k - 1])
      fail("sample_list must be strictly ascending");
  }
}

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "ts") c.ts = real_value(key, value);
  else if (key == "samples") c.samples = count_value(key, value);
  else if (key == "burn_in") c.burn_in = count_value(key, value);
  else if (key == "seed") c.seed = count_value(key, value);
  else if (key == "psd") c.psd = real_value(key, value);
  else if (key == "noise") {
    if (value == "white") c.noise = NoiseKind::WhiteGaussian;
    else if (value == "ar1") c.noise = NoiseKind::Ar1Gaussian;
    else throw Error(ErrorKind::Config, "noise: expected white or ar1, got '" + value + "'");
  } else if (key == "ar_coefficient") c.ar_coefficient = real_value(key, value);
  else if (key == "magnitude_cap") c.magnitude_cap = real_value(key, value);
  else if (key == "fir_order") c.fir_order = count_value(key, value);
  else if (key == "rho") c.rho = real_value(key, value);
  else if (key == "tau") c.tau = real_value(key, value);
  else if (key == "omega_points") c.omega_points = count_value(key, value);
  else if (key == "full_grid") c.full_grid = bool_value(key, value);
  else if (key == "prefilter") c.prefilter = parse_prefilter(value);
  else if (key == "threads") c.threads = static_cast<unsigned>(count_value(key, value));
  else if (key == "prune") c.prune = bool_value(key, value);
  else if (key == "timing") c.timing = bool_value(key, value);
  else if (key == "sample_list") {
    c.sample_list.clear();
    for (const auto& item : csv::split(value)) c.sample_list.push_back(count_value(key, trim(item)));
  } else {
    throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
  }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, "line " + std::to_string(number) + ": expected key = value");
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(ErrorKind::Config, "line " + std::to_string(number) + ": empty key or value");
    out[std::move(key)] = std::move(value);
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str());
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, file.filename().string() + ": " + e.what());
  }
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_entries,
                         const std::map<std::string, std::string>& cli_entries) {
  RunConfig c;
  for (const auto& [k, v] : file_entries) apply_config_entry(c, k, v);
  for (const auto& [k, v] : cli_entries) apply_config_entry(c, k, v);
  c.validate();
  return c;
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream out;
  out << "ts = " << csv::format_real(c.ts) << '\n'
      << "samples = " << c.samples << '\n'
      << "burn_in = " << c.burn_in << '\n'
      << "seed = " << c.seed << '\n'
      << "psd = " << csv::format_real(c.psd) << '\n'
      << "noise = " << (c.noise == NoiseKind::WhiteGaussian ? "white" : "ar1") << '\n'
      << "ar_coefficient = " << csv::format_real(c.ar_coefficient) << '\n'
      << "magnitude_cap = " << csv::format_real(c.magnitude_cap) << '\n'
      << "fir_order = " << c.fir_order << '\n'
      << "rho = " << csv::format_real(c.rho) << '\n'
      << "tau = " << csv::format_real(c.tau) << '\n'
      << "omega_points = " << c.omega_points << '\n'
      << "full_grid = " << (c.full_grid ? "true" : "false") << '\n'
      << "prefilter = " << to_string(c.prefilter) << '\n'
      << "threads = " << c.threads << '\n'
      << "prune = " << (c.prune ? "true" : "false") << '\n'
      << "timing = " << (c.timing ? "true" : "false") << '\n';
  if (!c.sample_list.empty()) {
    out << "sample_list = ";
    for (std::size_t k = 0; k < c.sample_list.size(); ++k)
      out << (k ? "," : "") << c.sample_list[k];
    out << '\n';
  }
  return out.str();
}

FrequencyGrid make_grid(const RunConfig& c) {
  return c.full_grid ? FrequencyGrid::full(c.omega_points) : FrequencyGrid::half(c.omega_points);
}

NoiseModel make_noise(const RunConfig& c) {
  return {c.noise, c.psd, c.ar_coefficient, c.seed};
}

Eigen::VectorXd noise_psd_vector(const GridGraph& g, const RunConfig& c) {
  if (c.noise != NoiseKind::WhiteGaussian)
    throw Error(ErrorKind::Config, "the model oracle assumes white disturbances");
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.node_count()), c.psd);
}

TimeSeriesPanel run_simulation(const GridGraph& g, const RunConfig& c) {
  return simulate(g, make_noise(c), {c.ts, c.samples, c.burn_in, c.magnitude_cap});
}

EstimationOutcome run_estimation(const TimeSeriesPanel& panel, const RunConfig& c) {
  BankOptions opts;
  opts.fir_order = c.fir_order;
  opts.prefilter = c.prefilter;
  opts.threads = c.threads;
  auto bank = estimate_bank(panel, opts);
  auto topology = learn_topology(bank, make_grid(c), c.rho, c.tau, c.prune);
  return {std::move(bank), std::move(topology)};
}

SweepResult run_sweep(const GridGraph& g, const RunConfig& config) {
  config.validate();
  if (config.sample_list.empty()) throw Error(ErrorKind::Config, "sample_list is empty");
  SweepResult result;
  for (std::size_t k = 0; k < config.sample_list.size(); ++k) {
    RunConfig c = config;
    c.samples = config.sample_list[k];
    c.seed = config.seed + k;
    SweepRow row;
    row.samples = c.samples;
    row.seed = c.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto panel = run_simulation(g, c);
      const auto outcome = run_estimation(panel, c);
      row.report = score(g, outcome.topology, panel.n_nodes());
      row.ok = true;
    } catch (const Error& e) {
      row.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    row.wall_time_s = config.timing ? elapsed.count() : 0.0;
    result.rows.push_back(std::move(row));
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << "samples,relative_error,fp,fn,wall_time_s,seed,status\n";
  for (const auto& r : result.rows) {
    out << r.samples << ',';
    if (r.ok)
      out << csv::format_real(r.report.relative_error) << ',' << r.report.false_positives << ','
          << r.report.false_negatives << ',';
    else
      out << "nan,,,";
    // Commas would break the row; failures keep only the message text.
    std::string status = r.ok ? "ok" : r.error;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << csv::format_real(r.wall_time_s) << ',' << r.seed << ',' << status << '\n';
  }
}

std::vector<std::string> fixture_names() { return {"path3", "star4", "cycle4", "loopy5"}; }

GridGraph fixture_graph(const std::string& name, std::uint64_t seed) {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> shape;
  if (name == "path3") {
    n = 3;
    shape = {{0, 1}, {1, 2}};
  } else if (name == "star4") {
    n = 4;
    shape = {{0, 1}, {0, 2}, {0, 3}};
  } else if (name == "cycle4") {
    n = 4;
    shape = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  } else if (name == "loopy5") {
    n = 5;
    shape = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {0, 2}};
  } else {
    throw Error(ErrorKind::Config, "unknown fixture '" + name + "'");
  }
  constexpr double ts = 0.01;
  SplitMix64 rng(mix_seed(seed, n));
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_unit(); };
  std::vector<NodeParams> nodes(n);
  for (auto& p : nodes) {
    p.inertia = uniform(0.75, 0.85) * ts * ts;
    p.damping = uniform(1.45, 1.55) * ts;
  }
  std::vector<Edge> edges;
  for (const auto& [a, b] : shape) edges.push_back({a, b, uniform(0.28, 0.32)});
  return GridGraph(std::move(nodes), std::move(edges));
}

}  // namespace gridtopo
