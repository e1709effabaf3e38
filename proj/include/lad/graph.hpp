#pragma once

// Snapshot / temporal graph data model, edge-list I/O, Laplacian construction
// and per-snapshot structural statistics.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lad/error.hpp"

namespace lad {

using NodeId = std::uint32_t;

struct Edge {
  NodeId source = 0;
  NodeId target = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One timestamped weighted graph over the id space [0, node_count).
///
/// Edges are stored sorted by (source, target) with duplicates merged by
/// summing their weights. Undirected snapshots store each edge once with
/// source <= target. A snapshot is immutable once built.
class Snapshot {
 public:
  Snapshot() = default;

  static Snapshot from_edges(std::size_t time_index, std::size_t node_count,
                             std::vector<Edge> edges, bool directed = false) {
    for (const auto& e : edges) {
      if (e.source >= node_count || e.target >= node_count) {
        throw DimensionError("edge (" + std::to_string(e.source) + ", " +
                             std::to_string(e.target) + ") outside id space of size " +
                             std::to_string(node_count));
      }
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw ValidationError("edge weight must be positive and finite, got " +
                              std::to_string(e.weight));
      }
    }
    if (!directed) {
      for (auto& e : edges) {
        if (e.source > e.target) std::swap(e.source, e.target);
      }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    std::vector<Edge> merged;
    merged.reserve(edges.size());
    for (const auto& e : edges) {
      if (!merged.empty() && merged.back().source == e.source && merged.back().target == e.target) {
        merged.back().weight += e.weight;
      } else {
        merged.push_back(e);
      }
    }
    Snapshot s;
    s.time_index_ = time_index;
    s.node_count_ = node_count;
    s.directed_ = directed;
    s.edges_ = std::move(merged);
    return s;
  }

  std::size_t time_index() const noexcept { return time_index_; }
  std::size_t node_count() const noexcept { return node_count_; }
  bool directed() const noexcept { return directed_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  bool empty() const noexcept { return edges_.empty(); }

  /// Ids incident to at least one edge (self-loops included), ascending.
  std::vector<NodeId> active_nodes() const {
    std::vector<NodeId> ids;
    ids.reserve(edges_.size() * 2);
    for (const auto& e : edges_) {
      ids.push_back(e.source);
      ids.push_back(e.target);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

  /// Same edges under a new time index and/or a larger id space.
  Snapshot relabeled(std::size_t time_index, std::size_t node_count) const {
    if (node_count < node_count_) {
      throw DimensionError("cannot shrink the id space of a snapshot");
    }
    Snapshot s = *this;
    s.time_index_ = time_index;
    s.node_count_ = node_count;
    return s;
  }

  friend bool operator==(const Snapshot&, const Snapshot&) = default;

 private:
  std::size_t time_index_ = 0;
  std::size_t node_count_ = 0;
  bool directed_ = false;
  std::vector<Edge> edges_;
};

/// Gap-free, time-ordered sequence of snapshots sharing one global id space.
class TemporalGraph {
 public:
  TemporalGraph() = default;

  explicit TemporalGraph(std::vector<Snapshot> snapshots) : snapshots_(std::move(snapshots)) {
    for (std::size_t t = 0; t < snapshots_.size(); ++t) {
      if (snapshots_[t].time_index() != t) {
        throw ValidationError("snapshots must be indexed 0..T-1 without gaps; position " +
                              std::to_string(t) + " has time index " +
                              std::to_string(snapshots_[t].time_index()));
      }
      if (t > 0 && snapshots_[t].directed() != snapshots_[0].directed()) {
        throw ValidationError("snapshots mix directed and undirected edges");
      }
      global_node_count_ = std::max(global_node_count_, snapshots_[t].node_count());
    }
  }

  std::span<const Snapshot> snapshots() const noexcept { return snapshots_; }
  const Snapshot& operator[](std::size_t t) const { return snapshots_.at(t); }
  std::size_t size() const noexcept { return snapshots_.size(); }
  std::size_t global_node_count() const noexcept { return global_node_count_; }
  bool directed() const noexcept { return !snapshots_.empty() && snapshots_.front().directed(); }

  friend bool operator==(const TemporalGraph&, const TemporalGraph&) = default;

 private:
  std::vector<Snapshot> snapshots_;
  std::size_t global_node_count_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

constexpr std::string_view kEdgeListHeader = "# lad-edgelist";

}  // namespace detail

/// Parses the "t u v [w]" edge-list format from a stream.
///
/// Lines starting with '#' are comments. The one exception is a header of the
/// form "# lad-edgelist snapshots=T nodes=N", written by write_snapshots, which
/// preserves trailing empty snapshots and isolated trailing ids on reload.
inline TemporalGraph read_snapshots(std::istream& in, bool directed) {
  std::map<std::size_t, std::vector<Edge>> by_time;
  std::size_t max_node = 0;
  bool any_edge = false;
  std::size_t declared_steps = 0;
  std::size_t declared_nodes = 0;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with(detail::kEdgeListHeader)) {
        for (auto tok : detail::split_ws(line.substr(detail::kEdgeListHeader.size()))) {
          const auto eq = tok.find('=');
          if (eq == std::string_view::npos) continue;
          const auto key = tok.substr(0, eq);
          std::size_t value = 0;
          if (!detail::parse_number(tok.substr(eq + 1), value)) {
            throw ParseError("bad header value '" + std::string(tok) + "'", line_no);
          }
          if (key == "snapshots") declared_steps = value;
          if (key == "nodes") declared_nodes = value;
        }
      }
      continue;
    }
    const auto toks = detail::split_ws(line);
    if (toks.size() != 3 && toks.size() != 4) {
      throw ParseError("expected 't u v [w]', got " + std::to_string(toks.size()) + " fields",
                       line_no);
    }
    std::size_t t = 0;
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (!detail::parse_number(toks[0], t) || !detail::parse_number(toks[1], u) ||
        !detail::parse_number(toks[2], v)) {
      throw ParseError("t, u and v must be nonnegative integers", line_no);
    }
    if (u > UINT32_MAX - 1 || v > UINT32_MAX - 1) {
      throw ParseError("node id out of range", line_no);
    }
    double w = 1.0;
    if (toks.size() == 4 && !detail::parse_number(toks[3], w)) {
      throw ParseError("weight is not a number: '" + std::string(toks[3]) + "'", line_no);
    }
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": edge weight must be positive and finite");
    }
    by_time[t].push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), w});
    max_node = std::max<std::size_t>({max_node, u, v});
    any_edge = true;
  }
  if (in.bad()) throw IoError("read failure");

  std::size_t steps = by_time.empty() ? 0 : by_time.rbegin()->first + 1;
  steps = std::max(steps, declared_steps);
  std::size_t nodes = any_edge ? max_node + 1 : 0;
  nodes = std::max(nodes, declared_nodes);

  std::vector<Snapshot> snaps;
  snaps.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    auto it = by_time.find(t);
    std::vector<Edge> edges = it == by_time.end() ? std::vector<Edge>{} : std::move(it->second);
    snaps.push_back(Snapshot::from_edges(t, nodes, std::move(edges), directed));
  }
  return TemporalGraph(std::move(snaps));
}

inline TemporalGraph load_snapshots(const std::string& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_snapshots(in, directed);
}

inline void write_snapshots(std::ostream& out, const TemporalGraph& g) {
  out << detail::kEdgeListHeader << " snapshots=" << g.size() << " nodes=" << g.global_node_count()
      << '\n';
  for (const auto& s : g.snapshots()) {
    for (const auto& e : s.edges()) {
      out << s.time_index() << ' ' << e.source << ' ' << e.target << ' '
          << detail::format_double(e.weight) << '\n';
    }
  }
}

/// Weighted adjacency on an n-id space; symmetric for undirected snapshots.
inline Eigen::SparseMatrix<double> adjacency(const Snapshot& s, std::size_t n) {
  if (n < s.node_count()) {
    throw DimensionError("dimension " + std::to_string(n) + " smaller than snapshot id space " +
                         std::to_string(s.node_count()));
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(s.edges().size() * 2);
  for (const auto& e : s.edges()) {
    trips.emplace_back(e.source, e.target, e.weight);
    if (!s.directed() && e.source != e.target) trips.emplace_back(e.target, e.source, e.weight);
  }
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::SparseMatrix<double> a(dim, dim);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

/// L = D - A with D the diagonal of row sums of A.
///
/// Self-loops appear in both D and A and therefore cancel. Ids without
/// edges produce all-zero rows and columns.
inline Eigen::SparseMatrix<double> laplacian(const Snapshot& s, std::size_t n) {
  const auto a = adjacency(s, n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros()) + n);
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      degree(it.row()) += it.value();
      if (it.row() != it.col()) trips.emplace_back(it.row(), it.col(), -it.value());
    }
  }
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    // the self-loop weight is in the degree and cancels against A's diagonal
    double diag = degree(i) - a.coeff(i, i);
    if (diag != 0.0) trips.emplace_back(i, i, diag);
  }
  Eigen::SparseMatrix<double> l(a.rows(), a.cols());
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

struct GraphStats {
  std::size_t edge_count = 0;
  double avg_degree = 0.0;
  double avg_edge_weight = 0.0;
  std::size_t connected_components = 0;
  double transitivity = 0.0;

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace detail

/// Structural statistics of one snapshot.
///
/// edge_count, connected_components and transitivity are computed on the
/// undirected, unweighted, loop-free skeleton over the active nodes.
/// avg_degree is the mean weighted degree (incident weight, loops counted
/// once) per active node; avg_edge_weight is the mean over stored edges.
inline GraphStats graph_stats(const Snapshot& s) {
  GraphStats st;
  const auto active = s.active_nodes();
  if (active.empty()) return st;

  // compact ids so the work is proportional to the active set
  std::vector<std::size_t> local(s.node_count(), 0);
  for (std::size_t i = 0; i < active.size(); ++i) local[active[i]] = i;
  const std::size_t m = active.size();

  std::vector<std::vector<std::size_t>> nbrs(m);
  // summed in sorted order so relabelling cannot change the rounding
  std::vector<double> weights;
  std::vector<double> degree_terms;
  weights.reserve(s.edges().size());
  degree_terms.reserve(s.edges().size());
  for (const auto& e : s.edges()) {
    weights.push_back(e.weight);
    degree_terms.push_back(e.source == e.target ? e.weight : 2.0 * e.weight);
    if (e.source == e.target) continue;
    nbrs[local[e.source]].push_back(local[e.target]);
    nbrs[local[e.target]].push_back(local[e.source]);
  }
  for (auto& nb : nbrs) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  detail::DisjointSets ds(m);
  std::size_t components = m;
  std::size_t skeleton_edges = 0;
  double wedges = 0.0;
  double triangles_x3 = 0.0;  // each triangle is seen once per edge
  for (std::size_t u = 0; u < m; ++u) {
    const double d = static_cast<double>(nbrs[u].size());
    wedges += d * (d - 1.0) / 2.0;
    for (auto v : nbrs[u]) {
      if (v <= u) continue;
      ++skeleton_edges;
      if (ds.unite(u, v)) --components;
      // common neighbours of u and v
      const auto& a = nbrs[u];
      const auto& b = nbrs[v];
      std::size_t i = 0;
      std::size_t j = 0;
      while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
          ++i;
        } else if (b[j] < a[i]) {
          ++j;
        } else {
          triangles_x3 += 1.0;
          ++i;
          ++j;
        }
      }
    }
  }

  std::sort(weights.begin(), weights.end());
  std::sort(degree_terms.begin(), degree_terms.end());
  const double total_weight = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double degree_sum = std::accumulate(degree_terms.begin(), degree_terms.end(), 0.0);

  st.edge_count = skeleton_edges;
  st.avg_degree = degree_sum / static_cast<double>(m);
  st.avg_edge_weight = total_weight / static_cast<double>(s.edges().size());
  st.connected_components = components;
  // transitivity = 3 * triangles / wedges; triangles_x3 already counts each triangle 3 times
  st.transitivity = wedges > 0.0 ? triangles_x3 / wedges : 0.0;
  return st;
}

/// Relabels every edge (u, v, w) to (perm[u], perm[v], w).
inline Snapshot permute_nodes(const Snapshot& s, std::span<const NodeId> perm) {
  if (perm.size() != s.node_count()) {
    throw ValidationError("permutation has " + std::to_string(perm.size()) +
                          " entries, expected " + std::to_string(s.node_count()));
  }
  std::vector<char> seen(perm.size(), 0);
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) throw ValidationError("permutation is not a bijection");
    seen[p] = 1;
  }
  std::vector<Edge> edges;
  edges.reserve(s.edges().size());
  for (const auto& e : s.edges()) edges.push_back({perm[e.source], perm[e.target], e.weight});
  return Snapshot::from_edges(s.time_index(), s.node_count(), std::move(edges), s.directed());
}

}  // namespace lad
