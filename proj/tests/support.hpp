#pragma once

// Test-only helpers: independent oracles and seeded ensemble generators.

#include <cstdint>
#include <vector>

#include "pushsum/graph.hpp"
#include "pushsum/rng.hpp"

namespace pushsum::testing {

/// Transitive closure by Floyd-Warshall on the boolean adjacency; true iff every pair reaches.
inline bool brute_force_strongly_connected(const DiGraph& g) {
  const Index n = g.size();
  DiGraph::Adjacency reach = g.adjacency();
  for (Index i = 0; i < n; ++i) reach(i, i) = true;
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        reach(i, j) = reach(i, j) || (reach(i, k) && reach(k, j));
  return reach.all();
}

/// Digraph on n nodes whose off-diagonal edges are the bits of `mask` (row-major), loops optional.
inline DiGraph graph_from_mask(Index n, std::uint64_t mask, bool loops) {
  std::vector<DiGraph::Edge> edges;
  int bit = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mask & (std::uint64_t{1} << bit)) edges.emplace_back(i, j);
      ++bit;
    }
  return loops ? DiGraph::with_self_loops(n, edges) : DiGraph(n, edges);
}

/// Ensemble of k random graphs with edge density q; a directed cycle is spread across the
/// graphs so the union is strongly connected. Probabilities are random and normalized.
inline GraphEnsemble random_ensemble(Index n, std::size_t k, double q, std::uint64_t seed) {
  Engine engine = make_stream(seed, 99);
  std::vector<std::vector<DiGraph::Edge>> edges(k);
  for (Index i = 0; i < n; ++i) {
    const auto owner = static_cast<std::size_t>(uniform01(engine) * static_cast<double>(k)) % k;
    edges[owner].emplace_back(i, (i + 1) % n);
  }
  for (auto& list : edges)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (i != j && uniform01(engine) < q) list.emplace_back(i, j);
  std::vector<DiGraph> graphs;
  std::vector<double> probs;
  double total = 0.0;
  for (auto& list : edges) {
    graphs.push_back(DiGraph::with_self_loops(n, list));
    probs.push_back(0.2 + uniform01(engine));
    total += probs.back();
  }
  for (auto& p : probs) p /= total;
  // Renormalize the last entry so the sum is 1 to the last bit.
  double head = 0.0;
  for (std::size_t b = 0; b + 1 < probs.size(); ++b) head += probs[b];
  probs.back() = 1.0 - head;
  return GraphEnsemble(std::move(graphs), std::move(probs));
}

/// Two graphs splitting the edges of the cycle 1 -> 2 -> ... -> n -> 1 by parity, p = 1/2 each.
inline GraphEnsemble half_cycle_ensemble(Index n) {
  std::vector<DiGraph::Edge> odd, even;
  for (Index i = 0; i < n; ++i) (i % 2 == 0 ? odd : even).emplace_back(i, (i + 1) % n);
  return GraphEnsemble({DiGraph::with_self_loops(n, odd), DiGraph::with_self_loops(n, even)}, {0.5, 0.5});
}

/// 1 -> 2 with p = 1/2 and 2 -> 1 with p = 1/2 (loops implied).
inline GraphEnsemble two_node_ensemble() {
  const std::vector<DiGraph::Edge> forward{{0, 1}}, backward{{1, 0}};
  return GraphEnsemble({DiGraph::with_self_loops(2, forward), DiGraph::with_self_loops(2, backward)}, {0.5, 0.5});
}

}  // namespace pushsum::testing
