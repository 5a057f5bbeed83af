#include "pushsum/optimize.hpp"

namespace pushsum {

OptimizationRun run_optimization(const GraphEnsemble& ensemble, const ObjectiveFamily<double>& fam,
                                 const MatrixXd& x0, double gamma, std::uint64_t horizon, std::uint64_t seed,
                                 const OptimizationOptions& options) {
  const Index n = ensemble.node_count();
  if (x0.rows() != n || fam.size() != n) throw DimensionError("need one objective and one initial state per node");
  if (x0.cols() != fam.dim()) throw DimensionError("initial states and objectives differ in dimension");
  const StepSize step(gamma);
  GraphSequenceSampler sampler(ensemble, seed);
  const double delta = options.variant == Variant::sp ? 0.0 : options.delta.value_or(gating_threshold(n));

  OptimizationRun run;
  run.certificate = fam.certificate() ? *fam.certificate() : solve_centralized(fam);
  if (n >= 2) {
    run.bound_inputs = make_rate_bound_inputs(x0, run.certificate.optimizer, fam.lipschitz_sum(), gamma,
                                              bound_constants(ensemble));
  }

  const auto points = options.checkpoints.empty() ? geometric_checkpoints(horizon) : options.checkpoints;
  auto next_point = points.begin();

  MspState<double> s = MspState<double>::initial(x0);
  if (options.keep_trace) run.trace.push_back(initial_trace(s.core));
  for (std::uint64_t t = 0; t < horizon; ++t) {
    const auto draw = sampler.next();
    auto row = msp_step(s.core, *draw.graph, draw.id, fam, t, step, delta);
    const double alpha = step(t + 1);
    s.z_avg = averaged_iterate_update(s.z_avg, row.state.z, s.S, alpha);
    s.S += alpha;
    s.t = t + 1;
    s.core = row.state;
    if (!row.gated.empty()) ++run.gated_rounds;

    while (next_point != points.end() && *next_point < s.t) ++next_point;
    if (next_point != points.end() && *next_point == s.t) {
      Checkpoint cp;
      cp.t = s.t;
      cp.graph_id = draw.id;
      double worst = -std::numeric_limits<double>::infinity(), total = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double gap = fam.value(s.z_avg.row(i).transpose()) - run.certificate.value;
        worst = std::max(worst, gap);
        total += gap;
      }
      cp.gap_max = worst;
      cp.gap_mean = total / static_cast<double>(n);
      cp.consensus_error = row.error;
      cp.min_y = row.min_y;
      if (run.bound_inputs) cp.bound = expected_gap_bound(*run.bound_inputs, static_cast<double>(s.t - 1));
      run.checkpoints.push_back(cp);
      ++next_point;
    }
    if (options.keep_trace) run.trace.push_back(std::move(row));
  }
  run.final_state = std::move(s);
  return run;
}

}  // namespace pushsum
