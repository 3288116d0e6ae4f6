#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gridtopo {

/// Line between two nodes. Node ids are 0-based; `from < to` always holds.
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double susceptance = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct NodeParams {
  double inertia = 0.0;
  double damping = 0.0;

  friend bool operator==(const NodeParams&, const NodeParams&) = default;
};

/// Undirected, connected grid graph with positive line susceptances and
/// positive per-node inertia and damping. Immutable once constructed.
class GridGraph {
 public:
  /// Validates and normalises the input (edges are reordered so that
  /// from < to and sorted lexicographically). Throws Error{Validation}.
  GridGraph(std::vector<NodeParams> nodes, std::vector<Edge> edges);

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeParams>& nodes() const { return nodes_; }
  const NodeParams& node(std::size_t j) const { return nodes_.at(j); }

  /// B_j, the total susceptance incident to node j.
  double total_susceptance(std::size_t j) const { return total_b_.at(j); }

  /// b_ij, or 0 when i and j are not adjacent.
  double susceptance(std::size_t i, std::size_t j) const;
  bool adjacent(std::size_t i, std::size_t j) const;

  /// Weighted Laplacian: diag(B) - [b_ij].
  Eigen::MatrixXd laplacian() const;

  friend bool operator==(const GridGraph& a, const GridGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<NodeParams> nodes_;
  std::vector<Edge> edges_;
  std::vector<double> total_b_;
  Eigen::MatrixXd weights_;
};

/// Neighbour and two-hop neighbour sets per node (sorted, 0-based, never
/// containing the node itself).
struct NeighborSets {
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<std::size_t>> two_hop;
  /// two_hop minus neighbours: graph distance exactly two.
  std::vector<std::vector<std::size_t>> strict_two_hop;

  bool is_neighbor(std::size_t j, std::size_t i) const;
  bool is_two_hop(std::size_t j, std::size_t i) const;
  bool is_strict_two_hop(std::size_t j, std::size_t i) const;
};

NeighborSets neighbor_sets(const GridGraph& g);

/// True when no three nodes are mutually adjacent.
bool triangle_free(const GridGraph& g);

/// Reads `edges.csv` and `nodes.csv` (1-based node ids on disk).
GridGraph load_case(const std::filesystem::path& edge_file,
                    const std::filesystem::path& node_file);
GridGraph load_case(const std::filesystem::path& case_dir);

/// Writes `edges.csv` and `nodes.csv` into `case_dir` (created if needed).
/// Values are printed with round-trip precision.
void write_case(const GridGraph& g, const std::filesystem::path& case_dir);

enum class GraphKind { Path, Cycle, Star, RandomLoopy };

GraphKind parse_graph_kind(const std::string& name);
const char* to_string(GraphKind kind);

struct Interval {
  double lo = 1.0;
  double hi = 1.0;
};

struct GraphSpec {
  GraphKind kind = GraphKind::Path;
  std::size_t n = 3;
  std::uint64_t seed = 0;
  Interval susceptance;
  Interval inertia;
  Interval damping;
};

/// Deterministic for a fixed seed. Path, cycle and star shapes do not depend
/// on the seed; random_loopy is a random spanning tree plus chords until the
/// edge count reaches n (so at least one cycle exists).
GridGraph generate_graph(const GraphSpec& spec);

}  // namespace gridtopo
