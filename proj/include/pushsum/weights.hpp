#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pushsum/errors.hpp"
#include "pushsum/graph.hpp"
#include "pushsum/types.hpp"

namespace pushsum {

inline constexpr double kColumnSumTolerance = 1e-12;

/// Column-stochastic matrix W with W(i, j) = 1 / outdeg(j) when j sends to i.
template <typename Scalar = double>
class WeightMatrix {
 public:
  WeightMatrix() = default;

  /// Wraps an existing matrix after checking it is square, non-negative and column-stochastic.
  static WeightMatrix from_column_stochastic(Matrix<Scalar> m, double tol = kColumnSumTolerance) {
    if (m.rows() != m.cols()) throw DimensionError("weight matrix must be square");
    if ((m.array() < Scalar(0)).any()) throw ContractViolation("weight matrix has a negative entry");
    const auto sums = m.colwise().sum();
    for (Index j = 0; j < m.cols(); ++j)
      if (std::abs(static_cast<double>(sums(j)) - 1.0) > tol)
        throw ContractViolation("column " + std::to_string(j + 1) + " does not sum to 1");
    WeightMatrix w;
    w.m_ = std::move(m);
    return w;
  }

  Index size() const { return m_.rows(); }
  const Matrix<Scalar>& matrix() const { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }

 private:
  template <typename S>
  friend WeightMatrix<S> weight_matrix(const DiGraph& effective);

  Matrix<Scalar> m_;
};

/// Builds W from an effective communication graph. Every node needs at least one
/// out-edge (normally its self-loop), otherwise ContractViolation.
template <typename Scalar = double>
WeightMatrix<Scalar> weight_matrix(const DiGraph& effective) {
  const Index n = effective.size();
  WeightMatrix<Scalar> w;
  w.m_ = Matrix<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const Index degree = effective.out_degree(j);
    if (degree == 0) throw ContractViolation("node " + std::to_string(j + 1) + " has no out-edges");
    const Scalar share = Scalar(1) / Scalar(degree);
    for (Index i = 0; i < n; ++i)
      if (effective.has_edge(j, i)) w.m_(i, j) = share;
  }
  return w;
}

/// W(b) * W(b-1) * ... * W(a) for `ws` ordered by ascending round a..b.
/// An empty list yields the n x n identity.
template <typename Scalar>
Matrix<Scalar> product(std::span<const WeightMatrix<Scalar>> ws, Index n = 0) {
  if (!ws.empty()) n = ws.front().size();
  Matrix<Scalar> acc = Matrix<Scalar>::Identity(n, n);
  for (const auto& w : ws) {
    if (w.size() != n) throw DimensionError("product of weight matrices with different sizes");
    acc = w.matrix() * acc;
  }
  return acc;
}

template <typename Scalar>
Matrix<Scalar> product(const std::vector<WeightMatrix<Scalar>>& ws, Index n = 0) {
  return product(std::span<const WeightMatrix<Scalar>>(ws), n);
}

/// Node subset, 0-based labels.
using NodeSet = std::vector<Index>;

namespace detail {
inline std::vector<bool> membership(const NodeSet& s, Index n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index v : s) {
    if (v < 0 || v >= n) throw DomainError("subset node outside [1, n]");
    if (in[static_cast<std::size_t>(v)]) throw DomainError("subset lists a node twice");
    in[static_cast<std::size_t>(v)] = true;
  }
  if (s.empty() || static_cast<Index>(s.size()) == n) throw DomainError("subset must be nontrivial");
  return in;
}
}  // namespace detail

/// Total weight W(i, j) with i in S and j outside S.
template <typename Derived>
typename Derived::Scalar cut_flow(const Eigen::MatrixBase<Derived>& w, const NodeSet& s) {
  const auto in = detail::membership(s, w.rows());
  typename Derived::Scalar flow(0);
  for (Index i = 0; i < w.rows(); ++i) {
    if (!in[static_cast<std::size_t>(i)]) continue;
    for (Index j = 0; j < w.cols(); ++j)
      if (!in[static_cast<std::size_t>(j)]) flow += w(i, j);
  }
  return flow;
}

template <typename Scalar>
Scalar cut_flow(const WeightMatrix<Scalar>& w, const NodeSet& s) {
  return cut_flow(w.matrix(), s);
}

/// Running sums over rounds 0..T of the cut flow into S.
template <typename Scalar>
std::vector<Scalar> cumulative_flow(std::span<const WeightMatrix<Scalar>> seq, const NodeSet& s) {
  std::vector<Scalar> sums;
  sums.reserve(seq.size());
  Scalar acc(0);
  for (const auto& w : seq) {
    acc += cut_flow(w, s);
    sums.push_back(acc);
  }
  return sums;
}

template <typename Scalar>
std::vector<Scalar> cumulative_flow(const std::vector<WeightMatrix<Scalar>>& seq, const NodeSet& s) {
  return cumulative_flow(std::span<const WeightMatrix<Scalar>>(seq), s);
}

inline constexpr Index kMaxEnumeratedNodes = 16;

/// All 2^n - 2 nontrivial subsets; n is capped at 16, beyond that callers pass explicit subsets.
inline std::vector<NodeSet> nontrivial_subsets(Index n) {
  if (n > kMaxEnumeratedNodes) throw DomainError("subset enumeration limited to n <= 16");
  std::vector<NodeSet> out;
  const std::uint32_t full = (1u << n) - 1u;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    NodeSet s;
    for (Index v = 0; v < n; ++v)
      if (mask & (1u << v)) s.push_back(v);
    out.push_back(std::move(s));
  }
  return out;
}

/// Digraph of positive entries: i -> j iff m(j, i) > 0. Self-loops are added, which does not
/// change connectivity.
template <typename Derived>
DiGraph support_graph(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw DimensionError("support graph needs a square matrix");
  DiGraph::Adjacency adj = (m.transpose().array() > typename Derived::Scalar(0));
  adj.matrix().diagonal().setConstant(true);
  return DiGraph(std::move(adj));
}

template <typename Derived>
bool is_irreducible(const Eigen::MatrixBase<Derived>& m) {
  return is_strongly_connected(support_graph(m));
}

/// Column-disagreement coefficient: max over column pairs of half their l1 distance.
/// Zero iff all columns coincide. Used as an empirical proxy for how far a product of
/// weight matrices is from rank one.
template <typename Derived>
typename Derived::Scalar ergodicity_coefficient(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Scalar worst(0);
  for (Index i = 0; i < m.cols(); ++i)
    for (Index j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, Scalar(0.5) * (m.col(i) - m.col(j)).template lpNorm<1>());
  return worst;
}

/// Number of factors in the window W(t+2n-3 : t).
inline Index irreducibility_window(Index n) { return 2 * n - 2; }

/// Exact probability that the product of `window` consecutive weight matrices built from
/// ungated i.i.d. draws is irreducible, by enumerating every graph sequence.
double window_irreducibility_probability(const GraphEnsemble& e, Index window);

}  // namespace pushsum
