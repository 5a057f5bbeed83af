#include "pushsum/weights.hpp"

#include <cmath>

namespace pushsum {

double window_irreducibility_probability(const GraphEnsemble& e, Index window) {
  if (window < 1) throw DomainError("window must contain at least one matrix");
  const std::size_t k = e.size();
  if (std::pow(static_cast<double>(k), static_cast<double>(window)) > 1e7)
    throw DomainError("too many graph sequences to enumerate");

  std::vector<WeightMatrix<double>> ws;
  for (const auto& g : e.graphs()) ws.push_back(weight_matrix<double>(g));

  const Index n = e.node_count();
  std::vector<std::size_t> digits(static_cast<std::size_t>(window), 0);
  double total = 0.0;
  for (;;) {
    double prob = 1.0;
    MatrixXd acc = MatrixXd::Identity(n, n);
    for (std::size_t b : digits) {
      prob *= e.prob(b);
      acc = ws[b].matrix() * acc;
    }
    if (prob > 0.0 && is_irreducible(acc)) total += prob;

    std::size_t pos = 0;
    while (pos < digits.size() && ++digits[pos] == k) digits[pos++] = 0;
    if (pos == digits.size()) break;
  }
  return total;
}

}  // namespace pushsum
