#include "gridtopo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "csv.hpp"
#include "gridtopo/error.hpp"

namespace gridtopo {

NodePair make_pair_sorted(std::size_t a, std::size_t b) {
  return a < b ? NodePair{a, b} : NodePair{b, a};
}

EdgeSet edge_set(const GridGraph& g) {
  EdgeSet out;
  for (const auto& e : g.edges()) out.insert(make_pair_sorted(e.from, e.to));
  return out;
}

EdgeSet detect_edges(const FirWienerBank& bank, double rho) {
  EdgeSet out;
  for (std::size_t j = 0; j < bank.n_nodes(); ++j)
    for (std::size_t i = 0; i < bank.n_nodes(); ++i)
      if (i != j && bank.norm(j, i) > rho) out.insert(make_pair_sorted(i, j));
  return out;
}

const char* to_string(DirectionVerdict v) {
  switch (v) {
    case DirectionVerdict::Spurious: return "spurious";
    case DirectionVerdict::Genuine: return "genuine";
    case DirectionVerdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

double distance_from_pi(double phase) {
  return std::min(std::abs(phase - std::numbers::pi), std::abs(phase + std::numbers::pi));
}

DirectionVerdict classify_direction(std::span<const Complex> response, double tau) {
  double peak = 0.0;
  for (const auto& v : response) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return DirectionVerdict::Indeterminate;

  bool any_determinate = false;
  for (const auto& v : response) {
    if (std::abs(v) < kIndeterminateRelMagnitude * peak) continue;
    any_determinate = true;
    if (!(distance_from_pi(principal_phase(v)) < tau)) return DirectionVerdict::Genuine;
  }
  return any_determinate ? DirectionVerdict::Spurious : DirectionVerdict::Indeterminate;
}

TopologyEstimate prune(const EdgeSet& wiener_edges, const FrequencyResponseSet& responses,
                       double tau) {
  TopologyEstimate est;
  est.wiener_edges = wiener_edges;
  est.tau = tau;
  est.grid_points = responses.grid().size();
  for (const auto& pair : wiener_edges) {
    const auto [a, b] = pair;
    if (a >= responses.n_nodes() || b >= responses.n_nodes())
      throw Error(ErrorKind::Spectral, "missing response for pair (" + std::to_string(a + 1) +
                                           "," + std::to_string(b + 1) + ")");
    PairDiagnostics d;
    d.pair = pair;
    d.verdict_forward = classify_direction(responses.response(a, b), tau);
    d.verdict_reverse = classify_direction(responses.response(b, a), tau);
    d.pruned = d.verdict_forward == DirectionVerdict::Spurious &&
               d.verdict_reverse == DirectionVerdict::Spurious;
    if (d.pruned)
      est.pruned_edges.insert(pair);
    else
      est.final_edges.insert(pair);
    est.diagnostics.push_back(d);
  }
  return est;
}

TopologyEstimate learn_topology(const FirWienerBank& bank, const FrequencyGrid& grid,
                                double rho, double tau, bool apply_pruning) {
  const auto wiener = detect_edges(bank, rho);
  const auto responses = fir_frequency_response(bank, grid);
  auto est = prune(wiener, responses, tau);
  est.rho = rho;
  for (auto& d : est.diagnostics) {
    d.norm_forward = bank.norm(d.pair.second, d.pair.first);
    d.norm_reverse = bank.norm(d.pair.first, d.pair.second);
  }
  if (!apply_pruning) {
    for (auto& d : est.diagnostics) d.pruned = false;
    est.pruned_edges.clear();
    est.final_edges = est.wiener_edges;
  }
  return est;
}

std::string ErrorReport::to_line() const {
  std::ostringstream out;
  out << "fp=" << false_positives << " fn=" << false_negatives << " true=" << true_edge_count
      << " rel_err=" << csv::format_real(relative_error);
  return out.str();
}

ErrorReport score(const GridGraph& truth, const EdgeSet& estimated_edges,
                  std::size_t estimate_nodes) {
  if (estimate_nodes != truth.node_count())
    throw Error(ErrorKind::Validation, "node-set mismatch: estimate has " +
                                           std::to_string(estimate_nodes) +
                                           " nodes, truth has " +
                                           std::to_string(truth.node_count()));
  const auto true_edges = edge_set(truth);
  ErrorReport r;
  r.true_edge_count = true_edges.size();
  for (const auto& e : estimated_edges) {
    if (e.second >= estimate_nodes)
      throw Error(ErrorKind::Validation, "estimated edge references unknown node");
    if (!true_edges.contains(e)) ++r.false_positives;
  }
  for (const auto& e : true_edges)
    if (!estimated_edges.contains(e)) ++r.false_negatives;
  r.relative_error = static_cast<double>(r.false_positives + r.false_negatives) /
                     static_cast<double>(r.true_edge_count);
  return r;
}

ErrorReport score(const GridGraph& truth, const TopologyEstimate& estimate,
                  std::size_t estimate_nodes) {
  return score(truth, estimate.final_edges, estimate_nodes);
}

void write_edges_csv(const TopologyEstimate& estimate, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << "from,to,norm_fwd,norm_rev,pruned\n";
  for (const auto& d : estimate.diagnostics)
    out << d.pair.first + 1 << ',' << d.pair.second + 1 << ','
        << csv::format_real(d.norm_forward) << ',' << csv::format_real(d.norm_reverse) << ','
        << (d.pruned ? 1 : 0) << '\n';
}

EdgeSet read_edges_csv(const std::filesystem::path& file) {
  const auto table = csv::read(file, {"from", "to", "norm_fwd", "norm_rev", "pruned"});
  EdgeSet out;
  for (const auto& row : table.rows) {
    const auto where = file.filename().string() + " row " + std::to_string(row.line);
    const auto from = csv::parse_index(row.fields[0], where);
    const auto to = csv::parse_index(row.fields[1], where);
    const auto pruned = csv::parse_index(row.fields[4], where);
    if (from < 1 || to < 1 || from == to)
      throw Error(ErrorKind::Parse, where + ": invalid node pair");
    if (pruned > 1) throw Error(ErrorKind::Parse, where + ": pruned must be 0 or 1");
    if (pruned == 0) out.insert(make_pair_sorted(from - 1, to - 1));
  }
  return out;
}

}  // namespace gridtopo
