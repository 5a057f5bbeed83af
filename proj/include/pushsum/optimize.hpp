#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "pushsum/bounds.hpp"
#include "pushsum/consensus.hpp"
#include "pushsum/objectives.hpp"
#include "pushsum/step_size.hpp"

namespace pushsum {

namespace detail {

template <typename Scalar>
NodeState<Scalar> descend(NodeState<Scalar> mixed, const ObjectiveFamily<Scalar>& fam, Scalar alpha) {
  mixed.x = mixed.w - alpha * fam.subgradients(mixed.z);
  return mixed;
}

}  // namespace detail

/// Subgradient-push round over the full available graph:
/// w = W x, y = W y, z = w / y, x = w - alpha(t+1) g(z).
template <typename Scalar>
NodeState<Scalar> sp_step(const NodeState<Scalar>& s, const DiGraph& available, const ObjectiveFamily<Scalar>& fam,
                          std::uint64_t t, const StepSize& step) {
  return detail::descend(mix(s, weight_matrix<Scalar>(available)), fam, Scalar(step(t + 1)));
}

/// Modified subgradient-push round: as sp_step, but nodes with y_j(t) < delta only keep their
/// own mass. The returned trace row carries the new state.
template <typename Scalar>
RoundTrace<Scalar> msp_step(const NodeState<Scalar>& s, const DiGraph& available, std::optional<std::size_t> graph_id,
                            const ObjectiveFamily<Scalar>& fam, std::uint64_t t, const StepSize& step, double delta) {
  RoundTrace<Scalar> row;
  row.t = t + 1;
  row.graph_id = graph_id;
  row.effective = effective_graph(available, s.y, delta);
  for (Index j = 0; j < s.size(); ++j)
    if (static_cast<double>(s.y(j)) < delta) row.gated.push_back(j);
  row.previous_mean = s.mean();
  row.state = detail::descend(mix(s, weight_matrix<Scalar>(row.effective)), fam, Scalar(step(t + 1)));
  row.perturbation_mass = (row.state.x - row.state.w).sum();
  row.error = consensus_error(row);
  row.min_y = row.state.y.minCoeff();
  return row;
}

/// The subgradient term viewed as a perturbation: eps(t) = -alpha(t) g(z(t)).
/// Its cap is U = L sqrt(d), since ||g_i||_1 <= sqrt(d) ||g_i|| <= sqrt(d) L_i.
template <typename Scalar>
PerturbationSchedule<Scalar> subgradient_perturbations(const ObjectiveFamily<Scalar>& fam, const StepSize& step) {
  auto gen = [&fam, step](std::uint64_t t, const NodeState<Scalar>& s) {
    return Matrix<Scalar>(-Scalar(step(t)) * fam.subgradients(s.z));
  };
  const double U = static_cast<double>(fam.lipschitz_sum()) * std::sqrt(static_cast<double>(fam.dim()));
  return {gen, U > 0.0 ? U : std::numeric_limits<double>::infinity(), step.gamma()};
}

/// z̃(t+1) = (alpha(t+1) z(t+1) + S(t) z̃(t)) / S(t+1), with S(t+1) = S(t) + alpha(t+1).
/// Works row-wise on whole n x d blocks as well as single vectors.
template <typename DerivedA, typename DerivedZ>
auto averaged_iterate_update(const Eigen::MatrixBase<DerivedA>& z_avg, const Eigen::MatrixBase<DerivedZ>& z,
                             typename DerivedA::Scalar S, typename DerivedA::Scalar alpha) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar next = S + alpha;
  if (!(next > Scalar(0))) throw DomainError("step-size sum must be positive");
  return Matrix<Scalar>((alpha * z + S * z_avg) / next);
}

/// MSP variables plus the running average z̃ and S(t) = sum_{s<t} alpha(s+1).
template <typename Scalar = double>
struct MspState {
  NodeState<Scalar> core;
  Matrix<Scalar> z_avg;
  Scalar S = 0;
  std::uint64_t t = 0;

  static MspState initial(const Matrix<Scalar>& x0, const Matrix<Scalar>& z_avg0) {
    return {NodeState<Scalar>::initial(x0), z_avg0, Scalar(0), 0};
  }
  static MspState initial(const Matrix<Scalar>& x0) { return initial(x0, Matrix<Scalar>::Zero(x0.rows(), x0.cols())); }
};

/// Powers of two up to the horizon, any extra points, and the horizon itself.
inline std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t horizon, const std::vector<std::uint64_t>& extra = {}) {
  std::set<std::uint64_t> points;
  for (std::uint64_t t = 1; t <= horizon; t *= 2) points.insert(t);
  for (auto t : extra)
    if (t >= 1 && t <= horizon) points.insert(t);
  if (horizon >= 1) points.insert(horizon);
  return {points.begin(), points.end()};
}

struct Checkpoint {
  std::uint64_t t = 0;
  std::size_t graph_id = 0;   // 0-based id of the graph drawn in round t-1
  double gap_max = 0.0;       // max_i F(z̃_i(t)) - F*
  double gap_mean = 0.0;      // mean_i F(z̃_i(t)) - F*
  double consensus_error = 0.0;
  double min_y = 0.0;
  std::optional<LogValue> bound;  // expected-gap bound at t (needs n >= 2)
};

enum class Variant { sp, msp };

struct OptimizationOptions {
  Variant variant = Variant::msp;
  std::vector<std::uint64_t> checkpoints;  // defaults to geometric_checkpoints(horizon)
  std::optional<double> delta;
  bool keep_trace = false;
};

struct OptimizationRun {
  std::vector<Checkpoint> checkpoints;
  std::vector<RoundTrace<double>> trace;  // only when keep_trace
  MspState<double> final_state;
  Certificate<double> certificate;
  std::optional<RateBoundInputs> bound_inputs;
  std::uint64_t gated_rounds = 0;  // rounds in which at least one node was gated
};

/// Runs SP or MSP with the averaged iterate for `horizon` rounds. Gaps are measured against
/// the family's certificate (solved on demand). The bound reported with z̃(t) is the
/// expected-gap bound evaluated at t-1.
OptimizationRun run_optimization(const GraphEnsemble& ensemble, const ObjectiveFamily<double>& fam,
                                 const MatrixXd& x0, double gamma, std::uint64_t horizon, std::uint64_t seed,
                                 const OptimizationOptions& options = {});

inline OptimizationRun run_msp(const GraphEnsemble& ensemble, const ObjectiveFamily<double>& fam, const MatrixXd& x0,
                               double gamma, std::uint64_t horizon, std::uint64_t seed,
                               OptimizationOptions options = {}) {
  options.variant = Variant::msp;
  return run_optimization(ensemble, fam, x0, gamma, horizon, seed, options);
}

}  // namespace pushsum
