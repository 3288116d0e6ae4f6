#include "gridtopo/grid.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "csv.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/rng.hpp"

namespace gridtopo {
namespace {

bool connected(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

std::string edge_label(const Edge& e) {
  return "(" + std::to_string(e.from + 1) + "," + std::to_string(e.to + 1) + ")";
}

}  // namespace

GridGraph::GridGraph(std::vector<NodeParams> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const auto n = nodes_.size();
  if (n == 0) throw Error(ErrorKind::Validation, "graph has no nodes");
  for (std::size_t j = 0; j < n; ++j) {
    const auto& p = nodes_[j];
    if (!(p.inertia > 0.0))
      throw Error(ErrorKind::Validation,
                  "node " + std::to_string(j + 1) + ": inertia must be > 0");
    if (!(p.damping > 0.0))
      throw Error(ErrorKind::Validation,
                  "node " + std::to_string(j + 1) + ": damping must be > 0");
  }

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto& e : edges_) {
    if (e.from >= n || e.to >= n)
      throw Error(ErrorKind::Validation,
                  "edge " + edge_label(e) + ": node id out of range");
    if (e.from == e.to)
      throw Error(ErrorKind::Validation, "edge " + edge_label(e) + ": self-loop");
    if (!(e.susceptance > 0.0))
      throw Error(ErrorKind::Validation,
                  "edge " + edge_label(e) + ": susceptance must be > 0");
    if (e.from > e.to) std::swap(e.from, e.to);
    if (!seen.emplace(e.from, e.to).second)
      throw Error(ErrorKind::Validation, "edge " + edge_label(e) + ": duplicate");
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.from, a.to) < std::pair(b.from, b.to);
  });
  if (!connected(n, edges_))
    throw Error(ErrorKind::Validation, "graph is not connected");

  weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(n));
  total_b_.assign(n, 0.0);
  for (const auto& e : edges_) {
    const auto i = static_cast<Eigen::Index>(e.from);
    const auto j = static_cast<Eigen::Index>(e.to);
    weights_(i, j) = weights_(j, i) = e.susceptance;
    total_b_[e.from] += e.susceptance;
    total_b_[e.to] += e.susceptance;
  }
}

double GridGraph::susceptance(std::size_t i, std::size_t j) const {
  return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

bool GridGraph::adjacent(std::size_t i, std::size_t j) const {
  return i != j && susceptance(i, j) > 0.0;
}

Eigen::MatrixXd GridGraph::laplacian() const {
  Eigen::MatrixXd lap = -weights_;
  for (std::size_t j = 0; j < nodes_.size(); ++j)
    lap(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = total_b_[j];
  return lap;
}

bool NeighborSets::is_neighbor(std::size_t j, std::size_t i) const {
  return std::binary_search(neighbors.at(j).begin(), neighbors.at(j).end(), i);
}

bool NeighborSets::is_two_hop(std::size_t j, std::size_t i) const {
  return std::binary_search(two_hop.at(j).begin(), two_hop.at(j).end(), i);
}

bool NeighborSets::is_strict_two_hop(std::size_t j, std::size_t i) const {
  return std::binary_search(strict_two_hop.at(j).begin(),
                            strict_two_hop.at(j).end(), i);
}

NeighborSets neighbor_sets(const GridGraph& g) {
  const auto n = g.node_count();
  NeighborSets sets;
  sets.neighbors.resize(n);
  sets.two_hop.resize(n);
  sets.strict_two_hop.resize(n);
  for (const auto& e : g.edges()) {
    sets.neighbors[e.from].push_back(e.to);
    sets.neighbors[e.to].push_back(e.from);
  }
  for (auto& nb : sets.neighbors) std::sort(nb.begin(), nb.end());

  for (std::size_t j = 0; j < n; ++j) {
    std::set<std::size_t> reach;
    for (auto k : sets.neighbors[j])
      for (auto i : sets.neighbors[k])
        if (i != j) reach.insert(i);
    sets.two_hop[j].assign(reach.begin(), reach.end());
    for (auto i : reach)
      if (!sets.is_neighbor(j, i)) sets.strict_two_hop[j].push_back(i);
  }
  return sets;
}

bool triangle_free(const GridGraph& g) {
  const auto sets = neighbor_sets(g);
  for (const auto& e : g.edges())
    if (sets.is_two_hop(e.from, e.to)) return false;
  return true;
}

GridGraph load_case(const std::filesystem::path& edge_file,
                    const std::filesystem::path& node_file) {
  const auto node_rows = csv::read(node_file, {"node", "inertia", "damping"});
  std::vector<NodeParams> nodes(node_rows.rows.size());
  std::vector<bool> present(node_rows.rows.size(), false);
  for (std::size_t r = 0; r < node_rows.rows.size(); ++r) {
    const auto& row = node_rows.rows[r];
    const auto where = node_file.filename().string() + " row " +
                       std::to_string(row.line);
    const auto id = csv::parse_index(row.fields[0], where);
    if (id < 1 || id > nodes.size())
      throw Error(ErrorKind::Validation,
                  where + ": node id " + std::to_string(id) +
                      " outside 1.." + std::to_string(nodes.size()));
    if (present[id - 1])
      throw Error(ErrorKind::Validation,
                  where + ": node " + std::to_string(id) + " listed twice");
    present[id - 1] = true;
    NodeParams p{csv::parse_real(row.fields[1], where),
                 csv::parse_real(row.fields[2], where)};
    if (!(p.inertia > 0.0))
      throw Error(ErrorKind::Validation, where + ": inertia must be > 0");
    if (!(p.damping > 0.0))
      throw Error(ErrorKind::Validation, where + ": damping must be > 0");
    nodes[id - 1] = p;
  }
  if (nodes.empty())
    throw Error(ErrorKind::Validation, node_file.string() + ": no nodes");

  const auto edge_rows = csv::read(edge_file, {"from", "to", "susceptance"});
  std::vector<Edge> edges;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& row : edge_rows.rows) {
    const auto where = edge_file.filename().string() + " row " +
                       std::to_string(row.line);
    const auto from = csv::parse_index(row.fields[0], where);
    const auto to = csv::parse_index(row.fields[1], where);
    const auto b = csv::parse_real(row.fields[2], where);
    if (from < 1 || from > nodes.size() || to < 1 || to > nodes.size())
      throw Error(ErrorKind::Validation, where + ": node id out of range");
    if (from == to) throw Error(ErrorKind::Validation, where + ": self-loop");
    if (!(b > 0.0))
      throw Error(ErrorKind::Validation, where + ": susceptance must be > 0");
    if (!seen.emplace(std::min(from, to), std::max(from, to)).second)
      throw Error(ErrorKind::Validation, where + ": duplicate edge");
    edges.push_back({from - 1, to - 1, b});
  }
  return GridGraph(std::move(nodes), std::move(edges));
}

GridGraph load_case(const std::filesystem::path& case_dir) {
  return load_case(case_dir / "edges.csv", case_dir / "nodes.csv");
}

void write_case(const GridGraph& g, const std::filesystem::path& case_dir) {
  std::error_code ec;
  std::filesystem::create_directories(case_dir, ec);
  if (ec)
    throw Error(ErrorKind::Io, "cannot create " + case_dir.string() + ": " +
                                   ec.message());
  {
    std::ofstream out(case_dir / "edges.csv");
    if (!out) throw Error(ErrorKind::Io, "cannot write edges.csv");
    out << "from,to,susceptance\n";
    for (const auto& e : g.edges())
      out << e.from + 1 << ',' << e.to + 1 << ',' << csv::format_real(e.susceptance)
          << '\n';
  }
  {
    std::ofstream out(case_dir / "nodes.csv");
    if (!out) throw Error(ErrorKind::Io, "cannot write nodes.csv");
    out << "node,inertia,damping\n";
    for (std::size_t j = 0; j < g.node_count(); ++j)
      out << j + 1 << ',' << csv::format_real(g.node(j).inertia) << ','
          << csv::format_real(g.node(j).damping) << '\n';
  }
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "path") return GraphKind::Path;
  if (name == "cycle") return GraphKind::Cycle;
  if (name == "star") return GraphKind::Star;
  if (name == "random_loopy") return GraphKind::RandomLoopy;
  throw Error(ErrorKind::Config, "unknown graph kind '" + name + "'");
}

const char* to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::Path: return "path";
    case GraphKind::Cycle: return "cycle";
    case GraphKind::Star: return "star";
    case GraphKind::RandomLoopy: return "random_loopy";
  }
  return "?";
}

GridGraph generate_graph(const GraphSpec& spec) {
  const auto n = spec.n;
  if (n < 2) throw Error(ErrorKind::Config, "generate_graph: n must be >= 2");
  if (spec.kind == GraphKind::Cycle && n < 3)
    throw Error(ErrorKind::Config, "generate_graph: cycle needs n >= 3");
  if (spec.kind == GraphKind::RandomLoopy && n < 4)
    throw Error(ErrorKind::Config, "generate_graph: random_loopy needs n >= 4");
  for (const auto* iv : {&spec.susceptance, &spec.inertia, &spec.damping}) {
    if (!(iv->lo > 0.0) || !(iv->hi >= iv->lo))
      throw Error(ErrorKind::Config,
                  "generate_graph: parameter ranges must satisfy 0 < lo <= hi");
  }

  // Shape and parameters draw from separate streams so that shape does not
  // depend on how many parameters were sampled.
  SplitMix64 shape_rng(mix_seed(spec.seed, 0x5348415045ULL));
  SplitMix64 param_rng(mix_seed(spec.seed, 0x504152414dULL));
  auto sample = [&](const Interval& iv) {
    return iv.lo + (iv.hi - iv.lo) * param_rng.next_unit();
  };

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  switch (spec.kind) {
    case GraphKind::Path:
      for (std::size_t j = 0; j + 1 < n; ++j) pairs.emplace_back(j, j + 1);
      break;
    case GraphKind::Cycle:
      for (std::size_t j = 0; j + 1 < n; ++j) pairs.emplace_back(j, j + 1);
      pairs.emplace_back(0, n - 1);
      break;
    case GraphKind::Star:
      for (std::size_t j = 1; j < n; ++j) pairs.emplace_back(0, j);
      break;
    case GraphKind::RandomLoopy: {
      // Random spanning tree: attach node order[k] to a uniformly chosen
      // earlier node, then add chords until |E| >= n.
      std::vector<std::size_t> order(n);
      for (std::size_t j = 0; j < n; ++j) order[j] = j;
      for (std::size_t k = n - 1; k > 0; --k)
        std::swap(order[k], order[shape_rng.next_below(k + 1)]);
      std::set<std::pair<std::size_t, std::size_t>> used;
      for (std::size_t k = 1; k < n; ++k) {
        const auto parent = order[shape_rng.next_below(k)];
        const auto child = order[k];
        used.emplace(std::min(parent, child), std::max(parent, child));
      }
      while (used.size() < n) {
        const auto a = shape_rng.next_below(n);
        const auto b = shape_rng.next_below(n);
        if (a == b) continue;
        used.emplace(std::min(a, b), std::max(a, b));
      }
      pairs.assign(used.begin(), used.end());
      break;
    }
  }

  std::vector<NodeParams> nodes(n);
  for (auto& p : nodes) {
    p.inertia = sample(spec.inertia);
    p.damping = sample(spec.damping);
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) edges.push_back({a, b, sample(spec.susceptance)});
  return GridGraph(std::move(nodes), std::move(edges));
}

}  // namespace gridtopo
