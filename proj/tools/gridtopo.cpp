// gridtopo: generate cases, simulate swing dynamics, learn topology.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridtopo/dynamics.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/experiments.hpp"
#include "gridtopo/grid.hpp"
#include "gridtopo/spectral.hpp"
#include "gridtopo/topology.hpp"

namespace fs = std::filesystem;
using namespace gridtopo;

namespace {

// Flag name -> config key; values stay textual so flags and file entries go
// through the same parser.
const std::vector<std::pair<std::string, std::string>> kRunFlags = {
    {"--ts", "ts"},
    {"--samples", "samples"},
    {"--burn-in", "burn_in"},
    {"--seed", "seed"},
    {"--psd", "psd"},
    {"--fir-order", "fir_order"},
    {"--rho", "rho"},
    {"--tau", "tau"},
    {"--omega-points", "omega_points"},
    {"--threads", "threads"},
    {"--prefilter", "prefilter"},
    {"--sample-list", "sample_list"},
};

struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::string config_file;
  bool no_prune = false;
  bool no_timing = false;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* app) {
    for (const auto& [flag, key] : kRunFlags)
      options.push_back(app->add_option(flag, values[key], "override config key " + key));
    app->add_option("--config", config_file, "key = value config file");
  }

  RunConfig resolve() {
    std::map<std::string, std::string> cli;
    for (std::size_t k = 0; k < kRunFlags.size(); ++k)
      if (options[k]->count() > 0) cli[kRunFlags[k].second] = values[kRunFlags[k].second];
    if (no_prune) cli["prune"] = "false";
    if (no_timing) cli["timing"] = "false";
    const auto file = config_file.empty() ? std::map<std::string, std::string>{}
                                          : read_config_file(config_file);
    return resolve_config(file, cli);
  }
};

Interval parse_interval(const std::vector<double>& v, const char* what) {
  if (v.empty()) return {1.0, 1.0};
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() == 2 && v[0] <= v[1]) return {v[0], v[1]};
  throw Error(ErrorKind::Config, std::string(what) + " expects LO [HI] with LO <= HI");
}

void write_verdicts(const TopologyEstimate& est, const fs::path& file) {
  std::FILE* out = std::fopen(file.string().c_str(), "w");
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  std::fprintf(out, "from,to,verdict_fwd,verdict_rev,pruned\n");
  for (const auto& d : est.diagnostics)
    std::fprintf(out, "%zu,%zu,%s,%s,%d\n", d.pair.first + 1, d.pair.second + 1,
                 to_string(d.verdict_forward), to_string(d.verdict_reverse), d.pruned ? 1 : 0);
  std::fclose(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid topology learning from phase-angle time series"};
  app.require_subcommand(1);

  // gen-case
  auto* gen = app.add_subcommand("gen-case", "generate a synthetic case directory");
  std::string kind = "path", fixture;
  std::size_t nodes = 3;
  std::uint64_t gen_seed = 0;
  std::vector<double> b_range, m_range, d_range;
  std::string gen_out;
  gen->add_option("--kind", kind, "path | cycle | star | random_loopy");
  gen->add_option("--n", nodes, "node count");
  gen->add_option("--seed", gen_seed, "shape/parameter seed");
  gen->add_option("--fixture", fixture, "named fixture: path3 star4 cycle4 loopy5");
  gen->add_option("--susceptance", b_range, "LO [HI]")->expected(1, 2);
  gen->add_option("--inertia", m_range, "LO [HI]")->expected(1, 2);
  gen->add_option("--damping", d_range, "LO [HI]")->expected(1, 2);
  gen->add_option("--out", gen_out, "output case directory")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a case and write a GRIDTS01 panel");
  ConfigFlags sim_flags;
  std::string sim_case, sim_out;
  sim_flags.attach(sim);
  sim->add_option("--case", sim_case, "case directory")->required();
  sim->add_option("--out", sim_out, "output panel file")->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "learn the topology from a panel");
  ConfigFlags est_flags;
  std::string est_panel, est_truth, est_out;
  est_flags.attach(est);
  est->add_option("--panel", est_panel, "GRIDTS01 panel file")->required();
  est->add_option("--truth", est_truth, "true case directory (optional)");
  est->add_option("--out", est_out, "edges CSV")->required();
  est->add_flag("--no-prune", est_flags.no_prune, "keep the Wiener edge set unpruned");

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact Wiener responses of the model");
  ConfigFlags orc_flags;
  std::string orc_case, orc_out;
  orc_flags.attach(orc);
  orc->add_option("--case", orc_case, "case directory")->required();
  orc->add_option("--out", orc_out, "response CSV")->required();

  // evaluate
  auto* eva = app.add_subcommand("evaluate", "score an edges CSV against a case");
  std::string eva_edges, eva_truth;
  eva->add_option("edges", eva_edges, "edges CSV written by estimate")->required();
  eva->add_option("--truth", eva_truth, "true case directory")->required();

  // sweep
  auto* swp = app.add_subcommand("sweep", "error versus samples per node");
  ConfigFlags swp_flags;
  std::string swp_case, swp_out;
  swp_flags.attach(swp);
  swp->add_option("--case", swp_case, "case directory")->required();
  swp->add_option("--out", swp_out, "sweep CSV")->required();
  swp->add_flag("--no-prune", swp_flags.no_prune, "keep the Wiener edge set unpruned");
  swp->add_flag("--no-timing", swp_flags.no_timing, "write wall_time_s as 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*gen) {
      if (!fixture.empty()) {
        write_case(fixture_graph(fixture, gen_seed), gen_out);
      } else {
        GraphSpec spec;
        spec.kind = parse_graph_kind(kind);
        spec.n = nodes;
        spec.seed = gen_seed;
        spec.susceptance = parse_interval(b_range, "--susceptance");
        spec.inertia = parse_interval(m_range, "--inertia");
        spec.damping = parse_interval(d_range, "--damping");
        write_case(generate_graph(spec), gen_out);
      }
      std::cout << "wrote case " << gen_out << '\n';
    } else if (*sim) {
      const auto config = sim_flags.resolve();
      const auto g = load_case(fs::path(sim_case));
      const auto panel = run_simulation(g, config);
      write_panel(panel, sim_out);
      std::cout << "N=" << panel.n_nodes() << " T=" << panel.n_samples() << " ts=" << panel.ts
                << " seed=" << config.seed << '\n';
    } else if (*est) {
      const auto config = est_flags.resolve();
      const auto panel = read_panel(est_panel);
      const auto outcome = run_estimation(panel, config);
      for (std::size_t j = 0; j < outcome.bank.n_nodes(); ++j)
        if (const auto& r = outcome.bank.report(j); r.ridge_applied)
          std::cerr << "warning: ridge " << r.ridge << " applied for node " << j + 1
                    << " (condition " << r.condition << ")\n";
      write_edges_csv(outcome.topology, est_out);
      fs::path verdicts = est_out;
      verdicts.replace_extension(".verdicts.csv");
      write_verdicts(outcome.topology, verdicts);
      std::cout << "wiener=" << outcome.topology.wiener_edges.size()
                << " pruned=" << outcome.topology.pruned_edges.size()
                << " final=" << outcome.topology.final_edges.size() << '\n';
      if (!est_truth.empty())
        std::cout << score(load_case(fs::path(est_truth)), outcome.topology, panel.n_nodes())
                         .to_line()
                  << '\n';
    } else if (*orc) {
      const auto config = orc_flags.resolve();
      const auto g = load_case(fs::path(orc_case));
      const auto report = stability_check(g, config.ts);
      if (!report.stable)
        throw Error(ErrorKind::Instability,
                    "spectral radius " + std::to_string(report.spectral_radius) + " >= 1");
      const auto set = oracle_wiener_response(g, noise_psd_vector(g, config), config.ts,
                                              make_grid(config), config.threads);
      write_response_csv(set, orc_out);
      std::cout << "pairs=" << g.node_count() * (g.node_count() - 1)
                << " points=" << set.grid().size() << '\n';
    } else if (*eva) {
      const auto truth = load_case(fs::path(eva_truth));
      std::cout << score(truth, read_edges_csv(eva_edges), truth.node_count()).to_line() << '\n';
    } else if (*swp) {
      const auto config = swp_flags.resolve();
      const auto g = load_case(fs::path(swp_case));
      const auto result = run_sweep(g, config);
      write_sweep_csv(result, swp_out);
      for (const auto& row : result.rows) {
        std::cout << "samples=" << row.samples << " seed=" << row.seed << ' ';
        if (row.ok)
          std::cout << row.report.to_line() << '\n';
        else
          std::cout << "failed: " << row.error << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << to_string(e.kind()) << " error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
