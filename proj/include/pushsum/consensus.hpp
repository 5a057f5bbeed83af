#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "pushsum/errors.hpp"
#include "pushsum/graph.hpp"
#include "pushsum/rng.hpp"
#include "pushsum/types.hpp"
#include "pushsum/weights.hpp"

namespace pushsum {

/// Per-node push-sum variables, one row per node. y is strictly positive.
template <typename Scalar = double>
struct NodeState {
  Matrix<Scalar> x;  // n x d
  Matrix<Scalar> w;  // n x d, last mixed value
  Vector<Scalar> y;  // n
  Matrix<Scalar> z;  // n x d, w / y

  Index size() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  /// y = 1, w = z = x.
  static NodeState initial(const Matrix<Scalar>& x0) {
    return {x0, x0, Vector<Scalar>::Ones(x0.rows()), x0};
  }

  /// Network average x̄ = 1'x / n.
  Vector<Scalar> mean() const { return x.colwise().mean().transpose(); }
};

/// 1 / n^(2n), the y level below which a node stops sending.
inline double gating_threshold(Index n) {
  const double nd = static_cast<double>(n);
  return std::exp(-2.0 * nd * std::log(nd));
}

/// Drops every outgoing edge j -> i (i != j) of nodes with y_j < delta.
/// Self-loops are always kept so each column of W still sums to 1.
template <typename Derived>
DiGraph effective_graph(const DiGraph& available, const Eigen::MatrixBase<Derived>& y, double delta) {
  if (y.size() != available.size()) throw DimensionError("y has wrong length for graph");
  DiGraph::Adjacency adj = available.adjacency();
  for (Index j = 0; j < adj.rows(); ++j) {
    if (static_cast<double>(y(j)) < delta) {
      adj.row(j).setConstant(false);
      adj(j, j) = true;
    }
  }
  adj.matrix().diagonal().setConstant(true);
  return DiGraph(std::move(adj));
}

/// max_i ||z_i - mean||_inf.
template <typename DerivedZ, typename DerivedM>
typename DerivedZ::Scalar consensus_error(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedM>& mean) {
  if (z.rows() == 0) return 0;
  return (z.rowwise() - mean.transpose()).cwiseAbs().maxCoeff();
}

/// One synchronous round: w = W x, y = W y, z = w / y, x = w.
template <typename Scalar>
NodeState<Scalar> mix(const NodeState<Scalar>& s, const WeightMatrix<Scalar>& W) {
  if (W.size() != s.size()) throw DimensionError("weight matrix and state disagree on n");
  NodeState<Scalar> next;
  next.w = W.matrix() * s.x;
  next.y = W.matrix() * s.y;
  next.z = next.w.array().colwise() / next.y.array();
  next.x = next.w;
  return next;
}

/// Plain push-sum over the full available graph (no gating).
template <typename Scalar>
NodeState<Scalar> pushsum_step(const NodeState<Scalar>& s, const DiGraph& available) {
  return mix(s, weight_matrix<Scalar>(available));
}

/// Perturbation source: called after mixing with the round index t+1 and the mixed state,
/// returns the n x d matrix eps(t+1). `cap` is U; each round must satisfy ||eps(t)||_1 <= U / t^gamma.
template <typename Scalar = double>
struct PerturbationSchedule {
  std::function<Matrix<Scalar>(std::uint64_t, const NodeState<Scalar>&)> generate;
  double cap = std::numeric_limits<double>::infinity();
  double gamma = 0.6;

  double envelope(std::uint64_t t) const { return cap / std::pow(static_cast<double>(t), gamma); }
};

template <typename Scalar = double>
PerturbationSchedule<Scalar> zero_perturbations() {
  return {[](std::uint64_t, const NodeState<Scalar>& s) { return Matrix<Scalar>::Zero(s.size(), s.dim()); },
          std::numeric_limits<double>::infinity(), 0.6};
}

/// eps_i(t) = U / (n t^gamma) * u_i(t), u uniform on [-1, 1]^d, rescaled onto the l1 envelope
/// when the draw exceeds it (possible once d > 1). Keyed by (seed, t), so it is reproducible.
template <typename Scalar = double>
PerturbationSchedule<Scalar> uniform_perturbations(double U, double gamma, std::uint64_t seed) {
  if (!(U > 0.0)) throw ConfigError("perturbation cap U must be positive");
  auto gen = [U, gamma, seed](std::uint64_t t, const NodeState<Scalar>& s) {
    Engine engine = make_stream(seed, streams::perturbations, t);
    const double envelope = U / std::pow(static_cast<double>(t), gamma);
    const double scale = envelope / static_cast<double>(s.size());
    Matrix<Scalar> eps(s.size(), s.dim());
    for (Index i = 0; i < eps.rows(); ++i)
      for (Index k = 0; k < eps.cols(); ++k) eps(i, k) = Scalar(scale * uniform(engine, -1.0, 1.0));
    const double norm = static_cast<double>(eps.cwiseAbs().sum());
    if (norm > envelope) eps *= Scalar(envelope / norm);
    return eps;
  };
  return {gen, U, gamma};
}

/// One recorded round. Row t holds the state after t rounds and the graph drawn at t-1.
template <typename Scalar = double>
struct RoundTrace {
  std::uint64_t t = 0;
  std::optional<std::size_t> graph_id;  // 0-based; empty for the initial row
  DiGraph effective;
  std::vector<Index> gated;             // nodes with y_j(t-1) < delta
  NodeState<Scalar> state;
  Vector<Scalar> previous_mean;         // x̄(t-1)
  Scalar perturbation_mass = 0;         // 1' eps(t), summed over coordinates
  Scalar error = 0;                     // max_i ||z_i(t) - x̄(t-1)||_inf
  Scalar min_y = 0;
};

template <typename Scalar>
Scalar consensus_error(const RoundTrace<Scalar>& row) {
  return consensus_error(row.state.z, row.previous_mean);
}

template <typename Scalar>
RoundTrace<Scalar> initial_trace(const NodeState<Scalar>& s) {
  RoundTrace<Scalar> row;
  row.effective = DiGraph::with_self_loops(s.size());
  row.state = s;
  row.previous_mean = s.mean();
  row.error = consensus_error(row);
  row.min_y = s.y.minCoeff();
  return row;
}

/// Modified perturbed push: gate on y(t), mix over the effective graph, then add eps(t+1).
/// `t` is the index of the incoming state. Throws ScheduleViolation when eps(t+1) leaves the
/// schedule's envelope.
template <typename Scalar>
RoundTrace<Scalar> mpp_step(const NodeState<Scalar>& s, std::uint64_t t, const DiGraph& available,
                            std::optional<std::size_t> graph_id, const PerturbationSchedule<Scalar>& schedule,
                            double delta) {
  RoundTrace<Scalar> row;
  row.t = t + 1;
  row.graph_id = graph_id;
  row.effective = effective_graph(available, s.y, delta);
  for (Index j = 0; j < s.size(); ++j)
    if (static_cast<double>(s.y(j)) < delta) row.gated.push_back(j);
  row.previous_mean = s.mean();

  row.state = mix(s, weight_matrix<Scalar>(row.effective));
  const Matrix<Scalar> eps = schedule.generate(t + 1, row.state);
  if (eps.rows() != s.size() || eps.cols() != s.dim()) throw DimensionError("perturbation has wrong shape");
  const double mass = static_cast<double>(eps.cwiseAbs().sum());
  const double envelope = schedule.envelope(t + 1);
  if (mass > envelope * (1.0 + 1e-12))
    throw ScheduleViolation("||eps(" + std::to_string(t + 1) + ")||_1 = " + std::to_string(mass) +
                            " exceeds U / t^gamma = " + std::to_string(envelope));
  row.state.x += eps;
  row.perturbation_mass = eps.sum();
  row.error = consensus_error(row);
  row.min_y = row.state.y.minCoeff();
  return row;
}

struct RunOptions {
  std::optional<double> delta;  // defaults to gating_threshold(n); 0 disables gating
  std::uint64_t decimation = 1; // keep every k-th row (plus the first and last)
};

/// Runs T rounds on graphs drawn from the ensemble with the given seed; y(0) = 1.
template <typename Scalar>
std::vector<RoundTrace<Scalar>> run_mpp(const GraphEnsemble& ensemble, const Matrix<Scalar>& x0,
                                        const PerturbationSchedule<Scalar>& schedule, std::uint64_t horizon,
                                        std::uint64_t seed, const RunOptions& options = {}) {
  if (x0.rows() != ensemble.node_count()) throw DimensionError("x(0) must have one row per node");
  if (options.decimation == 0) throw ConfigError("trace decimation must be at least 1");
  GraphSequenceSampler sampler(ensemble, seed);
  const double delta = options.delta.value_or(gating_threshold(x0.rows()));

  std::vector<RoundTrace<Scalar>> trace;
  NodeState<Scalar> state = NodeState<Scalar>::initial(x0);
  trace.push_back(initial_trace(state));
  for (std::uint64_t t = 0; t < horizon; ++t) {
    const auto draw = sampler.next();
    auto row = mpp_step(state, t, *draw.graph, draw.id, schedule, delta);
    state = row.state;
    if (row.t % options.decimation == 0 || row.t == horizon) trace.push_back(std::move(row));
  }
  return trace;
}

/// Ungated, unperturbed push-sum on the sampled sequence.
template <typename Scalar>
std::vector<RoundTrace<Scalar>> run_pushsum(const GraphEnsemble& ensemble, const Matrix<Scalar>& x0,
                                            std::uint64_t horizon, std::uint64_t seed, std::uint64_t decimation = 1) {
  return run_mpp(ensemble, x0, zero_perturbations<Scalar>(), horizon, seed, RunOptions{0.0, decimation});
}

}  // namespace pushsum
