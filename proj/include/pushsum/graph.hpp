#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pushsum/rng.hpp"
#include "pushsum/types.hpp"

namespace pushsum {

/// Directed graph on nodes 0..n-1. Edge (i, j) means node i sends to node j.
///
/// Nodes are 0-based in code; files and printed output use 1-based labels.
/// The graph is immutable once built. It may lack self-loops (e.g. the support of an
/// arbitrary matrix); communication graphs are built with `with_self_loops`.
class DiGraph {
 public:
  using Edge = std::pair<Index, Index>;
  using Adjacency = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

  DiGraph() = default;
  DiGraph(Index n, std::span<const Edge> edges);
  explicit DiGraph(Adjacency adjacency);

  /// Graph with the given edges plus a self-loop at every node.
  static DiGraph with_self_loops(Index n, std::span<const Edge> edges = {});

  Index size() const { return adjacency_.rows(); }
  bool has_edge(Index from, Index to) const { return adjacency_(from, to); }
  Index out_degree(Index node) const { return adjacency_.row(node).count(); }
  Index edge_count() const { return adjacency_.count(); }
  bool has_all_self_loops() const;

  /// Edges in row-major order (by source, then target).
  std::vector<Edge> edges() const;
  const Adjacency& adjacency() const { return adjacency_; }

  friend bool operator==(const DiGraph& a, const DiGraph& b) {
    return a.size() == b.size() && (a.adjacency_ == b.adjacency_).all();
  }

 private:
  Adjacency adjacency_;
};

/// i -> i+1 (mod n) plus self-loops.
DiGraph cycle_graph(Index n);
/// Every ordered pair, loops included.
DiGraph complete_graph(Index n);

/// True iff every ordered pair of nodes is joined by a directed path.
bool is_strongly_connected(const DiGraph& g);

/// Edge-set union. Throws DimensionError on mismatched node counts or an empty list.
DiGraph graph_union(std::span<const DiGraph> graphs);

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const;
  std::vector<std::string> failures() const;
};

/// Finite distribution over communication graphs, drawn i.i.d. each round.
/// Construction does not validate; call `validate_ensemble`.
class GraphEnsemble {
 public:
  GraphEnsemble() = default;
  GraphEnsemble(std::vector<DiGraph> graphs, std::vector<double> probs);

  std::size_t size() const { return graphs_.size(); }
  Index node_count() const { return graphs_.empty() ? 0 : graphs_.front().size(); }
  const DiGraph& graph(std::size_t b) const { return graphs_.at(b); }
  double prob(std::size_t b) const { return probs_.at(b); }
  const std::vector<DiGraph>& graphs() const { return graphs_; }
  const std::vector<double>& probs() const { return probs_; }

  /// Smallest strictly positive probability.
  double min_positive_prob() const;
  /// Union of graphs drawn with positive probability.
  DiGraph support_union() const;

 private:
  std::vector<DiGraph> graphs_;
  std::vector<double> probs_;
};

inline constexpr double kProbabilityTolerance = 1e-12;

/// Checks every ensemble invariant independently and never throws.
ValidationReport validate_ensemble(const GraphEnsemble& e);

/// i.i.d. sequence of communication graphs for one trial.
class GraphSequenceSampler {
 public:
  struct Draw {
    std::size_t id;  // 0-based index into the ensemble
    const DiGraph* graph;
  };

  /// Throws ConfigError when the ensemble fails validation.
  GraphSequenceSampler(GraphEnsemble ensemble, std::uint64_t seed);

  Draw next();

  std::uint64_t round() const { return round_; }
  std::uint64_t seed() const { return seed_; }
  const GraphEnsemble& ensemble() const { return ensemble_; }

 private:
  GraphEnsemble ensemble_;
  std::vector<double> cumulative_;
  std::size_t last_positive_ = 0;
  std::uint64_t seed_;
  Engine engine_;
  std::uint64_t round_ = 0;
};

}  // namespace pushsum
