#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridtopo/estimation.hpp"
#include "gridtopo/grid.hpp"
#include "gridtopo/spectral.hpp"

namespace gridtopo {

/// Unordered node pair stored with first < second (0-based).
using NodePair = std::pair<std::size_t, std::size_t>;
using EdgeSet = std::set<NodePair>;

NodePair make_pair_sorted(std::size_t a, std::size_t b);
EdgeSet edge_set(const GridGraph& g);

/// Pairs (i, j) with ||h_{j<-i}||_2 > rho or ||h_{i<-j}||_2 > rho.
EdgeSet detect_edges(const FirWienerBank& bank, double rho);

enum class DirectionVerdict { Spurious, Genuine, Indeterminate };

const char* to_string(DirectionVerdict v);

/// Distance of a phase from the negative real axis: min(|phi - pi|, |phi + pi|).
double distance_from_pi(double phase);

/// Spurious iff every non-indeterminate point has phase within tau of +-pi.
/// Indeterminate iff every point is magnitude-flagged (or the response is
/// identically zero).
DirectionVerdict classify_direction(std::span<const Complex> response, double tau);

struct PairDiagnostics {
  NodePair pair;
  /// ||h_{second<-first}|| and ||h_{first<-second}||; zero when no bank was
  /// supplied.
  double norm_forward = 0.0;
  double norm_reverse = 0.0;
  /// Verdict for W_{first,second} and W_{second,first}.
  DirectionVerdict verdict_forward = DirectionVerdict::Indeterminate;
  DirectionVerdict verdict_reverse = DirectionVerdict::Indeterminate;
  bool pruned = false;
};

struct TopologyEstimate {
  EdgeSet wiener_edges;
  EdgeSet pruned_edges;
  EdgeSet final_edges;
  std::vector<PairDiagnostics> diagnostics;  // one per wiener edge, sorted
  double rho = 0.0;
  double tau = 0.0;
  std::size_t grid_points = 0;
};

/// Removes a pair only when both directions are classified spurious.
TopologyEstimate prune(const EdgeSet& wiener_edges, const FrequencyResponseSet& responses,
                       double tau);

/// Runs detect_edges and prune, filling norms into the diagnostics. With
/// `apply_pruning` false the final set equals the Wiener set.
TopologyEstimate learn_topology(const FirWienerBank& bank, const FrequencyGrid& grid,
                                double rho, double tau, bool apply_pruning = true);

struct ErrorReport {
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t true_edge_count = 0;
  double relative_error = 0.0;

  /// `fp=<int> fn=<int> true=<int> rel_err=<decimal>`
  std::string to_line() const;
};

ErrorReport score(const GridGraph& truth, const EdgeSet& estimated_edges,
                  std::size_t estimate_nodes);
ErrorReport score(const GridGraph& truth, const TopologyEstimate& estimate,
                  std::size_t estimate_nodes);

/// Header `from,to,norm_fwd,norm_rev,pruned`; one row per Wiener edge.
void write_edges_csv(const TopologyEstimate& estimate, const std::filesystem::path& file);

/// Reads the final edges (rows with pruned=0) of an edges CSV.
EdgeSet read_edges_csv(const std::filesystem::path& file);

}  // namespace gridtopo
