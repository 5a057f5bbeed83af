#pragma once

#include <limits>

#include "pushsum/graph.hpp"
#include "pushsum/types.hpp"

namespace pushsum {

/// Closed-form constants of the random-graph convergence analysis.
///
/// lambda sits within 2^-64 of 1 already at n = 2 and rounds to 1.0 in double, so the
/// contraction is carried as log(lambda) and log(1 - lambda); `lambda` itself is kept only
/// for display.
struct BoundConstants {
  Index n = 0;
  Index B = 0;              // 2n - 2
  double p = 0.0;           // (min positive p_b)^(2n-2)
  double delta = 0.0;       // 1 / n^(2n)
  double log_delta = 0.0;
  double lambda = 0.0;      // (1 - n^(-4nB/p))^(p/(2nB)), rounded
  double log_lambda = 0.0;
  double log_one_minus_lambda = 0.0;
  double c1 = 0.0;          // p^2 / (4B)
};

/// Requires n >= 2 and 0 < min_positive_prob <= 1.
BoundConstants bound_constants(Index n, double min_positive_prob);
/// Validates the ensemble first (ConfigError on failure).
BoundConstants bound_constants(const GraphEnsemble& e);

/// Threads gamma through the (0.5, 1) domain check; throws DomainError otherwise.
void check_gamma(double gamma);

/// (1 - gamma) / ((t + 2)^(1 - gamma) - 1), for t >= 0.
double gamma_factor(double t, double gamma);

/// ((t + 2)^(1 - gamma) - 1) / (1 - gamma): lower bound on sum_{k=0}^{t} 1/(k+1)^gamma.
double step_sum_lower_bound(double t, double gamma);

struct RateBoundInputs {
  Index n = 0;
  Index d = 1;
  double gamma = 0.6;
  double lipschitz_sum = 0.0;   // L = sum of L_i
  VectorXd mean_initial;        // x̄(0)
  VectorXd optimizer;           // z*
  double initial_norms = 0.0;   // sum_j ||x_j(0)||_1
  BoundConstants constants;
};

/// Assembles bound inputs from the n x d initial states.
RateBoundInputs make_rate_bound_inputs(const MatrixXd& x0, const VectorXd& optimizer, double lipschitz_sum,
                                       double gamma, const BoundConstants& constants);

/// A non-negative quantity that may overflow double, carried as its logarithm.
struct LogValue {
  double log = -std::numeric_limits<double>::infinity();

  double value() const;  // may be +inf
  bool is_zero() const { return log == -std::numeric_limits<double>::infinity(); }
};

/// Bracketed constant C of the expected-gap bound, so that bound(t) = Gamma(t) * C.
LogValue rate_bound_bracket(const RateBoundInputs& in);

/// Expected optimality-gap bound for the averaged iterate z̃(t + 1).
LogValue expected_gap_bound(const RateBoundInputs& in, double t);

/// gap / bound, evaluated in log space. Defined as 0 when both are 0.
double bound_ratio(double gap, const LogValue& bound);

}  // namespace pushsum
