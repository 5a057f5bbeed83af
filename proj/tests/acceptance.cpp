// Acceptance gates: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pushsum/consensus.hpp"
#include "pushsum/harness.hpp"
#include "pushsum/optimize.hpp"
#include "pushsum/weights.hpp"
#include "support.hpp"

using namespace pushsum;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> body;
};

MatrixXd column(const std::vector<double>& values) {
  MatrixXd m(static_cast<Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Index>(i), 0) = values[i];
  return m;
}

ObjectiveFamily<double> abs_family(const std::vector<double>& anchors) {
  std::vector<ObjectivePtr<double>> members;
  for (double a : anchors) members.push_back(abs_objective<double>(VectorXd::Constant(1, a)));
  return ObjectiveFamily<double>(members);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Ordinary least-squares slope of y against x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto m = static_cast<Index>(x.size());
  MatrixXd A(m, 2);
  A.col(0).setOnes();
  A.col(1) = Eigen::Map<const VectorXd>(x.data(), m);
  const VectorXd coef = A.colPivHouseholderQr().solve(Eigen::Map<const VectorXd>(y.data(), m));
  return coef(1);
}

Outcome stochasticity_and_conservation() {
  double worst_col = 0.0, worst_y = 0.0, worst_drift = 0.0;
  for (std::uint64_t run = 0; run < 20; ++run) {
    const Index n = 2 + static_cast<Index>(run % 7);
    const auto e = testing::random_ensemble(n, 3, 0.2, 500 + run);
    Engine engine = make_stream(run, 0);
    MatrixXd x0(n, 2);
    for (Index i = 0; i < x0.size(); ++i) x0(i) = uniform(engine, -10.0, 10.0);
    const auto sched = uniform_perturbations<double>(1.0, 0.6, run);
    const double delta = gating_threshold(n);
    GraphSequenceSampler sampler(e, run);
    auto s = NodeState<double>::initial(x0);
    double injected = 0.0;
    for (std::uint64_t t = 0; t < 10000; ++t) {
      const auto draw = sampler.next();
      const auto w = weight_matrix(effective_graph(*draw.graph, s.y, delta));
      worst_col = std::max(worst_col, (w.matrix().colwise().sum().array() - 1.0).abs().maxCoeff());
      const auto row = mpp_step(s, t, *draw.graph, draw.id, sched, delta);
      s = row.state;
      injected += row.perturbation_mass;
      worst_y = std::max(worst_y, std::abs(s.y.sum() - static_cast<double>(n)));
    }
    worst_drift = std::max(worst_drift, std::abs(s.x.sum() - x0.sum() - injected));
  }
  return {worst_col <= 1e-12 && worst_y <= 1e-10 && worst_drift < 1e-7,
          "max column error " + fmt(worst_col) + ", max |1'y - n| " + fmt(worst_y) + ", max drift " + fmt(worst_drift)};
}

Outcome pushsum_three_cycle() {
  const GraphEnsemble e({cycle_graph(3)}, {1.0});
  const auto trace = run_pushsum(e, column({3, 0, 0}), 500, 0);
  const double err = (trace.back().state.z.array() - 1.0).abs().maxCoeff();
  return {err < 1e-6, "max |z_i(500) - 1| = " + fmt(err)};
}

Outcome random_graph_consensus() {
  const auto e = testing::half_cycle_ensemble(5);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto trace = run_mpp(e, column({0, 1, 2, 8, 9}), zero_perturbations<double>(), 5000, seed);
    worst = std::max(worst, static_cast<double>(trace.back().error));
  }
  return {worst < 1e-6, "worst consensus error at t = 5000 over 10 seeds: " + fmt(worst)};
}

// Shared by criteria 4 and 5.
const ExperimentResult& median_run() {
  static const ExperimentResult result = [] {
    ExperimentConfig cfg;
    cfg.ensemble_source = "inline";
    cfg.ensemble = testing::half_cycle_ensemble(5);
    ObjectiveSpec spec;
    for (double a : {0.0, 1.0, 2.0, 8.0, 9.0}) spec.anchors.push_back(VectorXd::Constant(1, a));
    cfg.objective = spec;
    cfg.gamma = 0.6;
    cfg.horizon = 10000;
    cfg.trials = 20;
    cfg.seed = 1000;
    cfg.extra_checkpoints = {100};
    cfg.algo = Algorithm::msp;
    cfg.workers = 4;
    cfg.fit_low = 100;
    cfg.fit_high = 10000;
    return run_experiment(cfg);
  }();
  return result;
}

std::vector<MetricsRow> mean_rows(const ExperimentResult& r) {
  std::vector<MetricsRow> out;
  for (const auto& row : r.rows)
    if (!row.trial) out.push_back(row);
  return out;
}

Outcome msp_optimization() {
  // Optimal value by brute-force grid evaluation of F, independent of the median solver.
  const auto fam = abs_family({0, 1, 2, 8, 9});
  double grid_best = std::numeric_limits<double>::infinity(), grid_arg = 0.0;
  for (long k = 0; k <= 110000; ++k) {
    const double z = -1.0 + 1e-4 * static_cast<double>(k);
    const double f = fam.value(VectorXd::Constant(1, z));
    if (f < grid_best) {
      grid_best = f;
      grid_arg = z;
    }
  }
  const auto& r = median_run();
  bool ok = std::abs(grid_best - r.certificate->value) <= 1e-9 && std::abs(grid_arg - 2.0) <= 1e-4;

  const auto means = mean_rows(r);
  double at100 = 0.0, atT = 0.0, prev = std::numeric_limits<double>::infinity();
  bool monotone = true, positive = true;
  for (const auto& row : means) {
    const double g = *row.gap_mean;
    if (row.t == 100) at100 = g;
    if (row.t == 10000) atT = g;
    positive = positive && g > 0.0;
    // The extra point t = 100 is not on the geometric grid.
    if (row.t != 100 && (row.t & (row.t - 1)) == 0) {
      monotone = monotone && g <= prev * 1.05;
      prev = g;
    } else if (row.t == 10000) {
      monotone = monotone && g <= prev * 1.05;
    }
  }
  ok = ok && positive && monotone && atT * 3.0 <= at100;
  return {ok, "F* = " + fmt(r.certificate->value) + " (grid " + fmt(grid_best) + "), mean gap " + fmt(at100) +
                  " at t=100 -> " + fmt(atT) + " at t=1e4 (" + fmt(at100 / atT) + "x), monotone " +
                  (monotone ? "yes" : "no") + ", positive " + (positive ? "yes" : "no")};
}

Outcome rate_envelope() {
  const auto& r = median_run();
  const auto means = mean_rows(r);
  const auto fit = fit_rate(means, 100, 10000);
  double worst_ratio = 0.0;
  for (const auto& c : compare_bound(r.rows, *r.bound_inputs)) worst_ratio = std::max(worst_ratio, c.ratio);
  const bool ok = fit.slope >= -1.0 && fit.slope <= -0.2 && worst_ratio <= 1.0;
  return {ok, "slope " + fmt(fit.slope) + " (R^2 " + fmt(fit.r_squared) + "), max gap/bound " + fmt(worst_ratio) +
                  ", log bracket " + fmt(rate_bound_bracket(*r.bound_inputs).log)};
}

Outcome msp_equals_sp() {
  const GraphEnsemble e({complete_graph(5)}, {1.0});
  const auto fam = abs_family({0, 1, 2, 8, 9});
  const MatrixXd x0 = column({0, 1, 2, 8, 9});
  OptimizationOptions opts;
  opts.keep_trace = true;
  opts.variant = Variant::sp;
  const auto sp = run_optimization(e, fam, x0, 0.6, 1000, 3, opts);
  opts.variant = Variant::msp;
  const auto msp = run_optimization(e, fam, x0, 0.6, 1000, 3, opts);
  double diff = 0.0, ydev = 0.0;
  for (std::size_t k = 0; k < sp.trace.size(); ++k) {
    diff = std::max(diff, (sp.trace[k].state.z - msp.trace[k].state.z).cwiseAbs().maxCoeff());
    diff = std::max(diff, (sp.trace[k].state.x - msp.trace[k].state.x).cwiseAbs().maxCoeff());
    ydev = std::max(ydev, (msp.trace[k].state.y.array() - 1.0).abs().maxCoeff());
  }
  diff = std::max(diff, (sp.final_state.z_avg - msp.final_state.z_avg).cwiseAbs().maxCoeff());
  return {diff <= 1e-12 && ydev <= 1e-12 && msp.gated_rounds == 0,
          "max trajectory difference " + fmt(diff) + ", max |y - 1| " + fmt(ydev)};
}

Outcome msp_equals_mpp() {
  const auto e = testing::half_cycle_ensemble(5);
  const auto fam = abs_family({0, 1, 2, 8, 9});
  const StepSize step(0.6);
  const auto sched = subgradient_perturbations(fam, step);
  const double delta = gating_threshold(5);
  double diff = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GraphSequenceSampler sampler(e, seed);
    auto a = NodeState<double>::initial(column({0, 1, 2, 8, 9}));
    auto b = a;
    for (std::uint64_t t = 0; t < 2000; ++t) {
      const auto draw = sampler.next();
      a = msp_step(a, *draw.graph, draw.id, fam, t, step, delta).state;
      b = mpp_step(b, t, *draw.graph, draw.id, sched, delta).state;
      diff = std::max(diff, (a.x - b.x).cwiseAbs().maxCoeff());
      diff = std::max(diff, (a.z - b.z).cwiseAbs().maxCoeff());
    }
  }
  return {diff <= 1e-12, "max difference over 5 seeds x 2000 rounds: " + fmt(diff)};
}

Outcome averaged_iterate() {
  Engine engine = make_stream(77, 0);
  const StepSize step(0.6);
  double worst = 0.0;
  bool first_step_exact = true;
  for (int seq = 0; seq < 100; ++seq) {
    MatrixXd avg = MatrixXd::Constant(3, 2, uniform(engine, -100.0, 100.0));
    MatrixXd num = MatrixXd::Zero(3, 2);
    double S = 0.0;
    for (std::uint64_t t = 1; t <= 1000; ++t) {
      MatrixXd z(3, 2);
      for (Index i = 0; i < z.size(); ++i) z(i) = uniform(engine, -5.0, 5.0);
      const double a = step(t);
      const MatrixXd next = averaged_iterate_update(avg, z, S, a);
      if (t == 1) first_step_exact = first_step_exact && next == z;
      avg = next;
      S += a;
      num += a * z;
      worst = std::max(worst, (avg - num / S).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-10 && first_step_exact,
          "max recursion vs closed form " + fmt(worst) + ", z~(1) independent of z~(0): " +
              (first_step_exact ? "yes" : "no")};
}

Outcome window_irreducibility() {
  const auto e = testing::two_node_ensemble();
  const double exact = window_irreducibility_probability(e, 2);
  GraphSequenceSampler sampler(e, 2024);
  const int windows = 10000;
  int hits = 0;
  for (int k = 0; k < windows; ++k) {
    const auto first = weight_matrix(*sampler.next().graph);
    const auto second = weight_matrix(*sampler.next().graph);
    hits += is_irreducible(second.matrix() * first.matrix()) ? 1 : 0;
  }
  const double freq = static_cast<double>(hits) / windows;
  const double sigma = std::sqrt(exact * (1.0 - exact) / windows);
  const bool ok = exact >= 0.25 && std::abs(freq - exact) <= 3.0 * sigma;
  return {ok, "exact " + fmt(exact) + " (>= 0.25), Monte Carlo " + fmt(freq) + ", 3 sigma " + fmt(3.0 * sigma)};
}

Outcome infinite_flow() {
  std::vector<GraphEnsemble> ensembles{testing::two_node_ensemble(), testing::half_cycle_ensemble(3),
                                       testing::half_cycle_ensemble(4), testing::half_cycle_ensemble(5),
                                       testing::half_cycle_ensemble(6), testing::random_ensemble(6, 4, 0.1, 3)};
  double smallest = std::numeric_limits<double>::infinity();
  std::size_t cuts = 0;
  const std::uint64_t T = 1000;
  std::vector<double> ts(T);
  for (std::uint64_t t = 0; t < T; ++t) ts[t] = static_cast<double>(t + 1);
  for (std::size_t k = 0; k < ensembles.size(); ++k) {
    const auto& e = ensembles[k];
    const Index n = e.node_count();
    const auto trace = run_mpp(e, MatrixXd(MatrixXd::Zero(n, 1)), zero_perturbations<double>(), T, 40 + k);
    std::vector<WeightMatrix<double>> ws;
    for (std::size_t r = 1; r < trace.size(); ++r) ws.push_back(weight_matrix(trace[r].effective));
    for (const auto& S : nontrivial_subsets(n)) {
      smallest = std::min(smallest, ols_slope(ts, cumulative_flow(ws, S)));
      ++cuts;
    }
  }
  return {smallest > 0.0, std::to_string(cuts) + " cuts over " + std::to_string(ensembles.size()) +
                              " ensembles, smallest fitted flow rate c = " + fmt(smallest)};
}

Outcome constants_regression() {
  const auto c = bound_constants(testing::two_node_ensemble());
  const double approx = -64.0 * std::log(2.0) + std::log(1.0 / 32.0);
  const double rel = std::abs(c.log_one_minus_lambda - approx) / std::abs(approx);
  const bool ok = c.B == 2 && c.p == 0.25 && c.delta == 0.0625 && c.c1 == 0.0078125 && rel <= 0.01;
  return {ok, "B " + std::to_string(c.B) + ", p " + fmt(c.p) + ", delta " + fmt(c.delta) + ", c1 " + fmt(c.c1) +
                  ", log(1-lambda) " + fmt(c.log_one_minus_lambda) + " vs " + fmt(approx)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "stochasticity and conservation", 30, stochasticity_and_conservation},
      {2, "push-sum on the 3-cycle", 1, pushsum_three_cycle},
      {3, "random-graph consensus", 5, random_graph_consensus},
      {4, "MSP optimization", 60, msp_optimization},
      {5, "rate envelope", 60, rate_envelope},
      {6, "MSP equals SP without gating", 1, msp_equals_sp},
      {7, "MSP equals MPP with subgradient perturbation", 5, msp_equals_mpp},
      {8, "averaged iterate recursion", 5, averaged_iterate},
      {9, "window irreducibility at n = 2", 5, window_irreducibility},
      {10, "directed infinite flow", 10, infinite_flow},
      {11, "constants regression", 1, constants_regression},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.ok && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.3f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", too slow");
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
