#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "lad/graph.hpp"

namespace lad_test {

/// Random undirected simple graph, each pair present with probability p,
/// integer-ish positive weights when `weighted`.
inline lad::Snapshot random_graph(std::mt19937_64& gen, std::size_t n, double p, bool weighted = false,
                                  bool directed = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<lad::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      if (u(gen) < p) {
        const double w = weighted ? 0.5 + 4.5 * u(gen) : 1.0;
        edges.push_back({static_cast<lad::NodeId>(i), static_cast<lad::NodeId>(j), w});
      }
    }
  }
  return lad::Snapshot::from_edges(0, n, std::move(edges), directed);
}

inline std::vector<lad::NodeId> random_perm(std::mt19937_64& gen, std::size_t n) {
  std::vector<lad::NodeId> p(n);
  std::iota(p.begin(), p.end(), lad::NodeId{0});
  std::shuffle(p.begin(), p.end(), gen);
  return p;
}

}  // namespace lad_test
