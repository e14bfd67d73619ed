#ifndef SSLSPEC_LOSSES_HPP
#define SSLSPEC_LOSSES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "graph.hpp"

namespace sslspec {

enum class VarianceMode { hinge, squared };
enum class Metric { cosine, l2 };

struct LossConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  double tau = 1.0;
  double eps = 1e-12;
  double alpha_bt = 5e-3;
  VarianceMode variance_mode = VarianceMode::hinge;

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0) || !(alpha_bt >= 0.0))
      throw std::invalid_argument("LossConfig: weights must be nonnegative");
    if (!(tau > 0.0)) throw std::invalid_argument("LossConfig: tau must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("LossConfig: eps must be positive");
  }
};

inline MatrixXd center_columns(const MatrixXd& z) {
  if (z.rows() == 0) return z;
  return z.rowwise() - z.colwise().mean();
}

// (1/N) (Z - mean)'(Z - mean)
inline MatrixXd covariance(const MatrixXd& z) {
  if (z.rows() == 0) throw std::invalid_argument("covariance: empty embedding");
  const MatrixXd c = center_columns(z);
  MatrixXd cov = (c.transpose() * c) / static_cast<double>(z.rows());
  return 0.5 * (cov + cov.transpose());
}

struct VicregTerms {
  double variance = 0.0;    // sum over dimensions, before alpha
  double covariance = 0.0;  // sum over off-diagonal squares, before beta
  double invariance = 0.0;  // sum_ij G_ij ||z_i - z_j||^2, before gamma/N
  double total = 0.0;
};

inline VicregTerms vicreg_terms(const MatrixXd& z, const RelationGraph& g, const LossConfig& cfg) {
  cfg.validate();
  if (z.rows() != g.n()) throw std::invalid_argument("vicreg_loss: shape mismatch");
  const double n = static_cast<double>(z.rows());
  const MatrixXd c = covariance(z);
  VicregTerms t;
  for (Index k = 0; k < c.rows(); ++k) {
    if (cfg.variance_mode == VarianceMode::hinge)
      t.variance += std::max(0.0, 1.0 - std::sqrt(std::max(0.0, c(k, k))));
    else
      t.variance += (1.0 - c(k, k)) * (1.0 - c(k, k));
  }
  t.covariance = c.squaredNorm() - c.diagonal().squaredNorm();
  // both orientations of each edge
  t.invariance = 2.0 * dirichlet_energy(z, g);
  t.total = cfg.alpha * t.variance + cfg.beta * t.covariance + cfg.gamma / n * t.invariance;
  return t;
}

inline double vicreg_loss(const MatrixXd& z, const RelationGraph& g, const LossConfig& cfg) {
  return vicreg_terms(z, g, cfg).total;
}

namespace detail {

inline VectorXd guarded_row_norms(const MatrixXd& z, double eps) {
  VectorXd n = z.rowwise().norm();
  for (Index i = 0; i < n.size(); ++i) n(i) = std::max(n(i), eps);
  return n;
}

// Cosine similarity with row norms floored at eps.
inline MatrixXd cosine_similarity(const MatrixXd& z, double eps) {
  const VectorXd n = guarded_row_norms(z, eps);
  MatrixXd u = z;
  for (Index i = 0; i < z.rows(); ++i) u.row(i) /= n(i);
  MatrixXd s = u * u.transpose();
  return 0.5 * (s + s.transpose());
}

inline MatrixXd squared_distances(const MatrixXd& z) {
  const VectorXd sq = z.rowwise().squaredNorm();
  MatrixXd d = (-2.0 * z * z.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  d = 0.5 * (d + d.transpose());
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

// Row-wise softmax of `logits` over j != i; diagonal is zero.
inline MatrixXd offdiag_softmax(const MatrixXd& logits) {
  const Index n = logits.rows();
  MatrixXd out = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
      if (j != i) mx = std::max(mx, logits(i, j));
    double s = 0.0;
    for (Index j = 0; j < n; ++j)
      if (j != i) s += std::exp(logits(i, j) - mx);
    for (Index j = 0; j < n; ++j)
      if (j != i) out(i, j) = std::exp(logits(i, j) - mx) / s;
  }
  return out;
}

}  // namespace detail

// Softmax similarity estimate. For l2 the distance is the squared Euclidean
// one so that it agrees with pairwise_distance(l2_squared).
inline MatrixXd simclr_estimate(const MatrixXd& z, double tau, Metric metric, double eps = 1e-12) {
  if (z.rows() < 2) throw std::invalid_argument("simclr_estimate: need at least two rows");
  if (!(tau > 0.0)) throw std::invalid_argument("simclr_estimate: tau must be positive");
  MatrixXd logits;
  if (metric == Metric::cosine)
    logits = detail::cosine_similarity(z, eps) / tau;
  else
    logits = -detail::squared_distances(z) / tau;
  return detail::offdiag_softmax(logits);
}

inline double cross_entropy(const MatrixXd& target, const MatrixXd& estimate) {
  if (target.rows() != estimate.rows() || target.cols() != estimate.cols())
    throw std::invalid_argument("cross_entropy: shape mismatch");
  double s = 0.0;
  for (Index i = 0; i < target.rows(); ++i)
    for (Index j = 0; j < target.cols(); ++j)
      if (target(i, j) != 0.0) s -= target(i, j) * std::log(estimate(i, j));
  return s;
}

inline double infonce_loss(const RelationGraph& g, const MatrixXd& z, const LossConfig& cfg,
                           Metric metric = Metric::cosine) {
  cfg.validate();
  if (z.rows() != g.n()) throw std::invalid_argument("infonce_loss: shape mismatch");
  const MatrixXd gbar = row_normalize(g);
  return cross_entropy(gbar, simclr_estimate(z, cfg.tau, metric, cfg.eps));
}

inline double row_entropy(const MatrixXd& p) {
  double s = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) s -= p(i, j) * std::log(p(i, j));
  return s;
}

inline double euclidean_match_loss(const MatrixXd& g, const MatrixXd& g_hat) {
  if (g.rows() != g_hat.rows() || g.cols() != g_hat.cols())
    throw std::invalid_argument("euclidean_match_loss: shape mismatch");
  return (g - g_hat).squaredNorm();
}

inline double euclidean_match_loss(const RelationGraph& g, const MatrixXd& g_hat) {
  return euclidean_match_loss(g.to_dense(), g_hat);
}

// Cross-correlation of column-centered views with the eps guard.
inline MatrixXd barlow_twins_correlation(const MatrixXd& z_left, const MatrixXd& z_right, double eps) {
  if (z_left.rows() != z_right.rows() || z_left.cols() != z_right.cols())
    throw std::invalid_argument("barlow_twins_loss: shape mismatch");
  const MatrixXd a = center_columns(z_left), b = center_columns(z_right);
  const VectorXd na = a.colwise().norm().transpose(), nb = b.colwise().norm().transpose();
  MatrixXd c = a.transpose() * b;
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j) c(i, j) /= na(i) * nb(j) + eps;
  return c;
}

inline double barlow_twins_from_correlation(const MatrixXd& c, double alpha_bt) {
  double diag = 0.0, off = 0.0;
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j) {
      if (i == j)
        diag += (c(i, j) - 1.0) * (c(i, j) - 1.0);
      else
        off += c(i, j) * c(i, j);
    }
  return diag + alpha_bt * off;
}

inline double barlow_twins_loss(const MatrixXd& z_left, const MatrixXd& z_right, const LossConfig& cfg) {
  cfg.validate();
  return barlow_twins_from_correlation(barlow_twins_correlation(z_left, z_right, cfg.eps), cfg.alpha_bt);
}

}  // namespace sslspec

#endif  // SSLSPEC_LOSSES_HPP
