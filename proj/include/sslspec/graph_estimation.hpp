#ifndef SSLSPEC_GRAPH_ESTIMATION_HPP
#define SSLSPEC_GRAPH_ESTIMATION_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "losses.hpp"

namespace sslspec {

enum class DistanceMetric { cosine, l2_squared };
enum class ConstraintSet { simple, right_stochastic };

inline MatrixXd pairwise_distance(const MatrixXd& z, DistanceMetric metric) {
  if (metric == DistanceMetric::cosine) {
    const VectorXd n = z.rowwise().norm();
    for (Index i = 0; i < n.size(); ++i)
      if (n(i) == 0.0) throw std::domain_error("pairwise_distance: zero-norm row under cosine");
    MatrixXd d = (1.0 - detail::cosine_similarity(z, 0.0).array()).matrix();
    d = d.cwiseMax(0.0).cwiseMin(2.0);
    d.diagonal().setZero();
    return d;
  }
  return detail::squared_distances(z);
}

inline Metric to_metric(DistanceMetric m) { return m == DistanceMetric::cosine ? Metric::cosine : Metric::l2; }

inline void check_distance_matrix(const MatrixXd& d) {
  if (d.rows() != d.cols()) throw std::invalid_argument("distance matrix is not square");
}

// Minimizer of Tr(DW) + tau * sum_{i!=j} W_ij (log W_ij - 1).
inline MatrixXd estimate_graph_log(const MatrixXd& d, double tau, ConstraintSet c) {
  check_distance_matrix(d);
  if (!(tau > 0.0)) throw std::invalid_argument("estimate_graph_log: tau must be positive");
  if (c == ConstraintSet::right_stochastic) return detail::offdiag_softmax(-d / tau);
  MatrixXd w = (-d / tau).array().exp().matrix();
  w.diagonal().setZero();
  return w;
}

struct FrobeniusEstimate {
  MatrixXd weights;    // after the relu clamp
  MatrixXd pre_clamp;  // stationary point of the Lagrangian, may be negative
  // largest |row sum - 1| of the clamped matrix (right-stochastic only)
  double feasibility_gap = 0.0;
};

// Minimizer of Tr(DW) + tau * sum_{i!=j} W_ij (W_ij / 2 - 1).
inline FrobeniusEstimate estimate_graph_frobenius_full(const MatrixXd& d, double tau, ConstraintSet c) {
  check_distance_matrix(d);
  if (!(tau > 0.0)) throw std::invalid_argument("estimate_graph_frobenius: tau must be positive");
  const Index n = d.rows();
  FrobeniusEstimate out;
  if (c == ConstraintSet::simple) {
    out.pre_clamp = (MatrixXd::Ones(n, n) - d / tau);
  } else {
    if (n < 2) throw std::invalid_argument("estimate_graph_frobenius: need at least two rows");
    const double m1 = static_cast<double>(n - 1);
    const VectorXd rs = d.rowwise().sum();
    out.pre_clamp = MatrixXd::Constant(n, n, 1.0 / m1);
    out.pre_clamp -= (d.colwise() - rs / m1) / tau;
  }
  out.pre_clamp.diagonal().setZero();
  out.weights = out.pre_clamp.cwiseMax(0.0);
  if (c == ConstraintSet::right_stochastic)
    out.feasibility_gap = (out.weights.rowwise().sum().array() - 1.0).abs().maxCoeff();
  return out;
}

inline MatrixXd estimate_graph_frobenius(const MatrixXd& d, double tau, ConstraintSet c) {
  return estimate_graph_frobenius_full(d, tau, c).weights;
}

inline double default_frobenius_tau(const MatrixXd& d) {
  const double m = d.size() ? d.maxCoeff() : 0.0;
  return m > 0.0 ? m : 1.0;
}

}  // namespace sslspec

#endif  // SSLSPEC_GRAPH_ESTIMATION_HPP
