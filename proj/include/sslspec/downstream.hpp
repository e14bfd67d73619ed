#ifndef SSLSPEC_DOWNSTREAM_HPP
#define SSLSPEC_DOWNSTREAM_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "closed_form.hpp"
#include "eigensolver.hpp"

namespace sslspec {

struct ProbeResult {
  MatrixXd w_star;
  double min_loss = 0.0;
  double achieved_loss = 0.0;
  Index rank_z = 0;
};

struct SpanCheck {
  bool holds = false;
  double angle = 0.0;
};

struct RankBoundResult {
  double lower = 0.0;
  double upper = 0.0;
  Index relation_rank = 0;
  Index target_rank = 0;
  double simclr_loss = 0.0;
  double vicreg_loss = 0.0;
  double gap = 0.0;
  bool target_rank_exceeds_k = false;
};

inline MatrixXd with_bias(const MatrixXd& z) {
  MatrixXd out(z.rows(), z.cols() + 1);
  out << z, VectorXd::Ones(z.rows());
  return out;
}

inline MatrixXd left_singular_basis(const MatrixXd& m, double tol_rel = kRankTol) {
  return orthonormal_basis(m, tol_rel);
}

// 1/2 ||Y||^2 - 1/2 ||U_z' Y||^2 with U_z the nonzero left singular vectors.
inline double minimal_probe_loss(const MatrixXd& z, const MatrixXd& y) {
  if (z.rows() != y.rows()) throw std::invalid_argument("minimal_probe_loss: row mismatch");
  const MatrixXd u = left_singular_basis(z);
  const double kept = u.cols() ? (u.transpose() * y).squaredNorm() : 0.0;
  return std::max(0.0, 0.5 * y.squaredNorm() - 0.5 * kept);
}

inline ProbeResult least_squares_probe(const MatrixXd& z, const MatrixXd& y) {
  if (z.rows() != y.rows()) throw std::invalid_argument("least_squares_probe: row mismatch");
  ProbeResult r;
  SvdResult s = svd(z);
  r.rank_z = numerical_rank(s.s, kRankTol);
  r.w_star = MatrixXd::Zero(z.cols(), y.cols());
  if (r.rank_z > 0) {
    const Index q = r.rank_z;
    const MatrixXd uy = s.u.leftCols(q).transpose() * y;
    r.w_star = s.v.leftCols(q) * (uy.array().colwise() / s.s.head(q).array()).matrix();
  }
  r.achieved_loss = 0.5 * (y - z * r.w_star).squaredNorm();
  r.min_loss = minimal_probe_loss(z, y);
  return r;
}

// Basis of the null space of Z within R^K (the free part of the optimal family).
inline MatrixXd probe_null_space(const MatrixXd& z) {
  SvdResult s = svd(z);
  const Index r = numerical_rank(s.s, kRankTol);
  Eigen::JacobiSVD<MatrixXd> full(z, Eigen::ComputeFullV);
  return full.matrixV().rightCols(z.cols() - r);
}

inline SpanCheck span_condition(const MatrixXd& z, const MatrixXd& y, double angle_tol) {
  if (z.rows() != y.rows()) throw std::invalid_argument("span_condition: row mismatch");
  const MatrixXd uy = left_singular_basis(y);
  const MatrixXd uz = left_singular_basis(z);
  SpanCheck c;
  if (uy.cols() == 0) {
    c.holds = true;
    return c;
  }
  if (uz.cols() == 0) {
    c.angle = std::acos(0.0);
    return c;
  }
  c.angle = subspace_angle(uz, uy);
  c.holds = c.angle <= angle_tol;
  return c;
}

// argmax of each row, lowest index on ties
inline std::vector<Index> row_argmax(const MatrixXd& m) {
  std::vector<Index> out(static_cast<std::size_t>(m.rows()), 0);
  for (Index i = 0; i < m.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < m.cols(); ++j)
      if (m(i, j) > m(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

// Fraction of rows where the least-squares probe (with bias) picks the same
// argmax as Y.
inline double probe_accuracy(const MatrixXd& z, const MatrixXd& y) {
  const MatrixXd zb = with_bias(z);
  const ProbeResult p = least_squares_probe(zb, y);
  const std::vector<Index> pred = row_argmax(zb * p.w_star), truth = row_argmax(y);
  Index hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

// Unhalved residual ||Y - [Z 1] W||^2 of the best probe with bias.
inline double probe_residual(const MatrixXd& z, const MatrixXd& y) {
  return 2.0 * minimal_probe_loss(with_bias(z), y);
}

// Best/worst-case bounds on the probe-loss gap between the contrastive and
// non-contrastive optima, alongside the measured gap. Probes carry a bias, so
// the bounds are taken on the column-centered targets.
inline RankBoundResult rank_bound_gap(const RelationGraph& g, const MatrixXd& y, Index k, double alpha = 1.0,
                                      double gamma = 1e-2) {
  if (y.rows() != g.n()) throw std::invalid_argument("rank_bound_gap: row mismatch");
  RankBoundResult r;
  const MatrixXd yc = y.rowwise() - y.colwise().mean();
  const VectorXd sy = singular_values(yc);
  r.target_rank = numerical_rank(sy, kRankTol);
  r.target_rank_exceeds_k = r.target_rank > k;
  r.relation_rank = relation_rank(g);
  r.upper = yc.squaredNorm();
  // energy of the target outside its R leading directions, up to K
  for (Index i = r.relation_rank; i < std::min<Index>(k, sy.size()); ++i) r.lower += sy(i) * sy(i);
  const SimclrOptimum sc = simclr_optimal(g, k);
  const VicregOptimum vc = vicreg_optimal(g, alpha, gamma, k);
  r.simclr_loss = probe_residual(sc.z_star, y);
  r.vicreg_loss = probe_residual(vc.z_star, y);
  r.gap = r.simclr_loss - r.vicreg_loss;
  return r;
}

}  // namespace sslspec

#endif  // SSLSPEC_DOWNSTREAM_HPP
