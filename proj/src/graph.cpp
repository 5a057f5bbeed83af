#include "pushsum/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pushsum/errors.hpp"

namespace pushsum {

namespace {

void check_endpoint(Index n, Index v) {
  if (v < 0 || v >= n) {
    std::ostringstream msg;
    msg << "edge endpoint " << v + 1 << " outside [1, " << n << "]";
    throw DomainError(msg.str());
  }
}

// Nodes reachable from `root` following edges forward (or backward when `reverse`).
std::vector<bool> reachable(const DiGraph::Adjacency& adj, Index root, bool reverse) {
  const Index n = adj.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Index> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index v = 0; v < n; ++v) {
      const bool edge = reverse ? adj(v, u) : adj(u, v);
      if (edge && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

DiGraph::DiGraph(Index n, std::span<const Edge> edges) : adjacency_(Adjacency::Constant(n, n, false)) {
  if (n <= 0) throw DomainError("graph must have at least one node");
  for (const auto& [from, to] : edges) {
    check_endpoint(n, from);
    check_endpoint(n, to);
    adjacency_(from, to) = true;
  }
}

DiGraph::DiGraph(Adjacency adjacency) : adjacency_(std::move(adjacency)) {
  if (adjacency_.rows() != adjacency_.cols()) throw DimensionError("adjacency matrix must be square");
  if (adjacency_.rows() == 0) throw DomainError("graph must have at least one node");
}

DiGraph DiGraph::with_self_loops(Index n, std::span<const Edge> edges) {
  DiGraph g(n, edges);
  g.adjacency_.matrix().diagonal().setConstant(true);
  return g;
}

bool DiGraph::has_all_self_loops() const { return adjacency_.matrix().diagonal().all(); }

std::vector<DiGraph::Edge> DiGraph::edges() const {
  std::vector<Edge> out;
  for (Index i = 0; i < size(); ++i)
    for (Index j = 0; j < size(); ++j)
      if (adjacency_(i, j)) out.emplace_back(i, j);
  return out;
}

DiGraph cycle_graph(Index n) {
  std::vector<DiGraph::Edge> edges;
  for (Index i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return DiGraph::with_self_loops(n, edges);
}

DiGraph complete_graph(Index n) {
  if (n <= 0) throw DomainError("graph must have at least one node");
  return DiGraph(DiGraph::Adjacency::Constant(n, n, true));
}

bool is_strongly_connected(const DiGraph& g) {
  const auto& adj = g.adjacency();
  const auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
  return all(reachable(adj, 0, false)) && all(reachable(adj, 0, true));
}

DiGraph graph_union(std::span<const DiGraph> graphs) {
  if (graphs.empty()) throw DimensionError("union of an empty graph list");
  DiGraph::Adjacency adj = graphs.front().adjacency();
  for (const auto& g : graphs.subspan(1)) {
    if (g.size() != adj.rows()) throw DimensionError("union of graphs with different node counts");
    adj = adj || g.adjacency();
  }
  return DiGraph(std::move(adj));
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(c.name + ": " + c.detail);
  return out;
}

GraphEnsemble::GraphEnsemble(std::vector<DiGraph> graphs, std::vector<double> probs)
    : graphs_(std::move(graphs)), probs_(std::move(probs)) {}

double GraphEnsemble::min_positive_prob() const {
  double best = 0.0;
  for (double p : probs_)
    if (p > 0.0 && (best == 0.0 || p < best)) best = p;
  return best;
}

DiGraph GraphEnsemble::support_union() const {
  std::vector<DiGraph> used;
  for (std::size_t b = 0; b < graphs_.size() && b < probs_.size(); ++b)
    if (probs_[b] > 0.0) used.push_back(graphs_[b]);
  return graph_union(used);
}

ValidationReport validate_ensemble(const GraphEnsemble& e) {
  ValidationReport report;
  auto add = [&report](std::string name, bool passed, std::string detail = {}) {
    report.checks.push_back({std::move(name), passed, passed ? std::string{} : std::move(detail)});
  };

  add("nonempty", e.size() > 0, "ensemble has no graphs");

  const Index n = e.node_count();
  bool same_n = true;
  for (const auto& g : e.graphs()) same_n = same_n && g.size() == n;
  add("common_node_count", same_n, "graphs disagree on the number of nodes");

  add("probability_count", e.probs().size() == e.size(),
      "got " + std::to_string(e.probs().size()) + " probabilities for " + std::to_string(e.size()) + " graphs");

  const bool nonneg = std::all_of(e.probs().begin(), e.probs().end(), [](double p) { return p >= 0.0 && std::isfinite(p); });
  add("probabilities_nonnegative", nonneg, "a probability is negative or not finite");

  const double sum = std::accumulate(e.probs().begin(), e.probs().end(), 0.0);
  {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << sum;
    add("probabilities_normalized", std::abs(sum - 1.0) <= kProbabilityTolerance, msg.str());
  }

  std::string missing;
  for (std::size_t b = 0; b < e.size(); ++b)
    if (!e.graph(b).has_all_self_loops()) missing += (missing.empty() ? "" : ",") + std::to_string(b + 1);
  add("self_loops", missing.empty(), "graphs without all self-loops: " + missing);

  bool connected = false;
  std::string why = "union of positive-probability graphs is not strongly connected";
  if (e.size() > 0 && same_n && e.probs().size() == e.size() && e.min_positive_prob() > 0.0) {
    connected = is_strongly_connected(e.support_union());
  } else {
    why = "union could not be formed";
  }
  add("union_strongly_connected", connected, why);
  return report;
}

GraphSequenceSampler::GraphSequenceSampler(GraphEnsemble ensemble, std::uint64_t seed)
    : ensemble_(std::move(ensemble)), seed_(seed), engine_(make_stream(seed, streams::graphs)) {
  const auto report = validate_ensemble(ensemble_);
  if (!report.ok()) {
    std::string msg = "invalid ensemble:";
    for (const auto& f : report.failures()) msg += " [" + f + "]";
    throw ConfigError(msg);
  }
  double acc = 0.0;
  for (std::size_t b = 0; b < ensemble_.size(); ++b) {
    acc += ensemble_.prob(b);
    cumulative_.push_back(acc);
    if (ensemble_.prob(b) > 0.0) last_positive_ = b;
  }
}

GraphSequenceSampler::Draw GraphSequenceSampler::next() {
  const double u = uniform01(engine_);
  std::size_t b = last_positive_;
  for (std::size_t k = 0; k < last_positive_; ++k) {
    if (ensemble_.prob(k) > 0.0 && u < cumulative_[k]) {
      b = k;
      break;
    }
  }
  ++round_;
  return {b, &ensemble_.graph(b)};
}

}  // namespace pushsum
