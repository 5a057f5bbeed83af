#include "pushsum/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pushsum/errors.hpp"

namespace pushsum {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Below this exp() underflows; 1 - lambda is then k * q to relative accuracy O(q).
constexpr double kLogUnderflow = -700.0;

double log_sum_exp(const std::vector<double>& logs) {
  double hi = kNegInf;
  for (double v : logs) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

}  // namespace

BoundConstants bound_constants(Index n, double min_positive_prob) {
  if (n < 2) throw DomainError("bound constants need n >= 2");
  if (!(min_positive_prob > 0.0 && min_positive_prob <= 1.0))
    throw DomainError("minimum positive probability must lie in (0, 1]");

  BoundConstants c;
  c.n = n;
  c.B = 2 * n - 2;
  const double nd = static_cast<double>(n);
  const double Bd = static_cast<double>(c.B);
  c.p = std::pow(min_positive_prob, Bd);
  c.log_delta = -2.0 * nd * std::log(nd);
  c.delta = std::exp(c.log_delta);
  c.c1 = c.p * c.p / (4.0 * Bd);

  // lambda = (1 - q)^k with q = n^(-4nB/p), k = p / (2nB).
  const double log_q = -(4.0 * nd * Bd / c.p) * std::log(nd);
  const double k = c.p / (2.0 * nd * Bd);
  if (log_q > kLogUnderflow) {
    c.log_lambda = k * std::log1p(-std::exp(log_q));
    c.log_one_minus_lambda = std::log(-std::expm1(c.log_lambda));
  } else {
    c.log_lambda = -k * std::exp(log_q);
    c.log_one_minus_lambda = std::log(k) + log_q;
  }
  c.lambda = std::exp(c.log_lambda);
  return c;
}

BoundConstants bound_constants(const GraphEnsemble& e) {
  const auto report = validate_ensemble(e);
  if (!report.ok()) throw ConfigError("bound constants need a valid ensemble");
  return bound_constants(e.node_count(), e.min_positive_prob());
}

void check_gamma(double gamma) {
  if (!(gamma > 0.5 && gamma < 1.0)) throw DomainError("gamma must lie in (0.5, 1), got " + std::to_string(gamma));
}

double step_sum_lower_bound(double t, double gamma) {
  check_gamma(gamma);
  if (!(t >= 0.0)) throw DomainError("round index must be non-negative");
  const double a = 1.0 - gamma;
  return std::expm1(a * std::log(t + 2.0)) / a;
}

double gamma_factor(double t, double gamma) {
  check_gamma(gamma);
  if (!(t >= 0.0)) throw DomainError("round index must be non-negative");
  const double a = 1.0 - gamma;
  return a / std::expm1(a * std::log(t + 2.0));
}

RateBoundInputs make_rate_bound_inputs(const MatrixXd& x0, const VectorXd& optimizer, double lipschitz_sum,
                                       double gamma, const BoundConstants& constants) {
  if (x0.cols() != optimizer.size()) throw DimensionError("initial states and optimizer differ in dimension");
  RateBoundInputs in;
  in.n = x0.rows();
  in.d = x0.cols();
  in.gamma = gamma;
  in.lipschitz_sum = lipschitz_sum;
  in.mean_initial = x0.colwise().mean().transpose();
  in.optimizer = optimizer;
  in.initial_norms = x0.cwiseAbs().sum();
  in.constants = constants;
  return in;
}

double LogValue::value() const { return std::exp(log); }

LogValue rate_bound_bracket(const RateBoundInputs& in) {
  check_gamma(in.gamma);
  if (in.d < 1) throw DomainError("dimension must be at least 1");
  if (in.n < 1) throw DomainError("node count must be positive");
  if (!(in.lipschitz_sum >= 0.0)) throw DomainError("Lipschitz sum must be non-negative");
  if (in.mean_initial.size() != in.d || in.optimizer.size() != in.d)
    throw DimensionError("bound vectors must have dimension d");

  const double n = static_cast<double>(in.n);
  const double d = static_cast<double>(in.d);
  const double L = in.lipschitz_sum;
  const double tail = 1.0 + 1.0 / (2.0 * in.gamma - 1.0);
  // log(1 / (delta (1 - lambda)))
  const double log_k = -in.constants.log_delta - in.constants.log_one_minus_lambda;

  const double dist = (in.mean_initial - in.optimizer).lpNorm<1>();
  std::vector<double> logs{
      safe_log(n * dist / 2.0),
      safe_log(tail * L * L / (2.0 * n)),
      safe_log(60.0 * L * in.initial_norms) + log_k,
      safe_log(60.0 * d * L * L * tail) + log_k,
  };
  return {log_sum_exp(logs)};
}

LogValue expected_gap_bound(const RateBoundInputs& in, double t) {
  const LogValue bracket = rate_bound_bracket(in);
  if (bracket.is_zero()) return bracket;
  return {std::log(gamma_factor(t, in.gamma)) + bracket.log};
}

double bound_ratio(double gap, const LogValue& bound) {
  if (gap <= 0.0) return 0.0;
  if (bound.is_zero()) return std::numeric_limits<double>::infinity();
  return std::exp(std::log(gap) - bound.log);
}

}  // namespace pushsum
