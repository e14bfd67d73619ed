#ifndef SSLSPEC_CLOSED_FORM_HPP
#define SSLSPEC_CLOSED_FORM_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "eigensolver.hpp"
#include "graph.hpp"
#include "losses.hpp"

namespace sslspec {

struct VicregOptimum {
  MatrixXd z_star;
  double min_loss = 0.0;
  SpectralDecomposition spectrum;  // the K retained eigenpairs
  // sparse route only: the discarded leading eigenpair of the bordered matrix
  double border_value = 0.0;
  VectorXd border_vector;
};

struct SimclrOptimum {
  MatrixXd z_star;
  double min_loss = 0.0;
  SpectralDecomposition spectrum;  // full spectrum of the centered target
  MatrixXd target;
};

struct LppResult {
  MatrixXd weights;
  VectorXd eigenvalues;
};

struct CcaWeights {
  MatrixXd w_a;
  MatrixXd w_b;
  VectorXd correlations;
  VectorXd eigenvalues;  // squared canonical correlations before clamping
};

inline MatrixXd centering_matrix(Index n) {
  return MatrixXd::Identity(n, n) - MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
}

inline MatrixXd vicreg_combined_matrix(const RelationGraph& g, double alpha, double gamma) {
  if (!(alpha > 0.0)) throw std::invalid_argument("vicreg_combined_matrix: alpha must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("vicreg_combined_matrix: gamma must be nonnegative");
  const Index n = g.n();
  MatrixXd m = centering_matrix(n);
  if (gamma > 0.0) m -= (gamma / alpha) * laplacian(g).to_dense();
  return 0.5 * (m + m.transpose());
}

namespace detail {

// Eigenvalues at or below kRankTol * max|lambda| are treated as zero.
inline double clamp_eigenvalue(double l, double scale) { return l > kRankTol * scale ? l : 0.0; }

}  // namespace detail

// Columns p_k * sqrt(N * lambda_k), clamped lambda.
inline MatrixXd vicreg_embedding(const MatrixXd& p, const VectorXd& lambda, double scale = -1.0) {
  const double n = static_cast<double>(p.rows());
  if (scale < 0.0) scale = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
  MatrixXd z = p;
  for (Index k = 0; k < lambda.size(); ++k) z.col(k) *= std::sqrt(n * detail::clamp_eigenvalue(lambda(k), scale));
  return z;
}

// Squared-mode loss (alpha = beta) of the embedding built from the chosen
// eigenvalues.
inline double vicreg_selection_loss(const VectorXd& lambda, double alpha) {
  double s = 0.0;
  for (Index k = 0; k < lambda.size(); ++k) {
    const double l = std::max(lambda(k), 0.0);
    s += 1.0 - l * l;
  }
  return alpha * s;
}

inline VicregOptimum vicreg_optimal(const RelationGraph& g, double alpha, double gamma, Index k) {
  if (!(alpha > 0.0)) throw std::invalid_argument("vicreg_optimal: alpha must be positive");
  if (k < 1 || k > g.n()) throw std::invalid_argument("vicreg_optimal: k must be in [1, N]");
  SpectralDecomposition full = sym_eig(vicreg_combined_matrix(g, alpha, gamma));
  VicregOptimum out;
  out.spectrum.values = full.values.head(k);
  out.spectrum.vectors = full.vectors.leftCols(k);
  out.z_star = vicreg_embedding(out.spectrum.vectors, out.spectrum.values, full.values.cwiseAbs().maxCoeff());
  out.min_loss = vicreg_selection_loss(out.spectrum.values, alpha);
  return out;
}

// [[0, 1'], [1, I - (gamma/alpha) L]]
inline Eigen::SparseMatrix<double> vicreg_bordered_matrix(const RelationGraph& g, double alpha, double gamma) {
  if (!(alpha > 0.0)) throw std::invalid_argument("vicreg_bordered_matrix: alpha must be positive");
  const Index n = g.n();
  const double c = gamma / alpha;
  const VectorXd d = degree(g);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * n + g.nnz()));
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(0, i + 1, 1.0);
    t.emplace_back(i + 1, 0, 1.0);
    t.emplace_back(i + 1, i + 1, 1.0 - c * d(i));
  }
  if (c != 0.0) g.for_each_entry([&](Index i, Index j, double w) { t.emplace_back(i + 1, j + 1, c * w); });
  Eigen::SparseMatrix<double> j(n + 1, n + 1);
  j.setFromTriplets(t.begin(), t.end());
  return j;
}

inline VicregOptimum vicreg_optimal_sparse(const RelationGraph& g, double alpha, double gamma, Index k,
                                           const LobpcgOptions& opt = {}) {
  if (k < 1 || k > g.n() - 1) throw std::invalid_argument("vicreg_optimal_sparse: k must be in [1, N-1]");
  const Index n = g.n();
  const Eigen::SparseMatrix<double> j = vicreg_bordered_matrix(g, alpha, gamma);
  SpectralDecomposition top = lobpcg_topk(LinearOperator::from_sparse(j), k + 1, opt);
  if (!top.converged) {
    std::ostringstream os;
    os << "vicreg_optimal_sparse: eigensolver did not converge after " << top.iterations
       << " iterations, residuals:";
    for (Index i = 0; i < top.residuals.size(); ++i) os << ' ' << top.residuals(i);
    throw std::runtime_error(os.str());
  }
  VicregOptimum out;
  out.border_value = top.values(0);
  out.border_vector = top.vectors.col(0);
  out.spectrum.values = top.values.segment(1, k);
  out.spectrum.residuals = top.residuals.segment(1, k);
  out.spectrum.iterations = top.iterations;
  MatrixXd p = top.vectors.block(1, 1, n, k);
  for (Index c = 0; c < k; ++c) {
    const double nc = p.col(c).norm();
    if (nc > 0.0) p.col(c) /= nc;
  }
  out.spectrum.vectors = p;
  out.z_star = vicreg_embedding(p, out.spectrum.values);
  out.min_loss = vicreg_selection_loss(out.spectrum.values, alpha);
  return out;
}

// H (G + I) H, the Gram matrix the contrastive optimum fits.
inline MatrixXd simclr_target(const RelationGraph& g) {
  const Index n = g.n();
  MatrixXd t = g.to_dense() + MatrixXd::Identity(n, n);
  t = t.rowwise() - t.colwise().mean();
  t = t.colwise() - t.rowwise().mean();
  return 0.5 * (t + t.transpose());
}

inline SimclrOptimum simclr_optimal(const RelationGraph& g, Index k) {
  if (k < 1 || k > g.n()) throw std::invalid_argument("simclr_optimal: k must be in [1, N]");
  SimclrOptimum out;
  out.target = simclr_target(g);
  out.spectrum = sym_eig(out.target);
  const VectorXd& lam = out.spectrum.values;
  out.z_star = out.spectrum.vectors.leftCols(k);
  const double scale = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
  double kept = 0.0;
  for (Index c = 0; c < k; ++c) {
    const double l = detail::clamp_eigenvalue(lam(c), scale);
    out.z_star.col(c) *= std::sqrt(l);
    kept += l * l;
  }
  out.min_loss = std::max(0.0, lam.squaredNorm() - kept);
  return out;
}

// Rank of the relation structure as seen by the contrastive optimum.
inline Index relation_rank(const RelationGraph& g, double tol_rel = kRankTol) {
  const VectorXd lam = sym_eig(simclr_target(g)).values;
  VectorXd pos = lam.cwiseMax(0.0);
  return numerical_rank(pos, tol_rel);
}

inline double default_ridge(const MatrixXd& c) {
  return c.rows() > 0 ? 1e-8 * c.trace() / static_cast<double>(c.rows()) : 0.0;
}

namespace detail {

inline MatrixXd add_ridge(const MatrixXd& c, double ridge, const char* who) {
  MatrixXd r = 0.5 * (c + c.transpose());
  const double lam = ridge < 0.0 ? default_ridge(r) : ridge;
  r.diagonal().array() += lam;
  Eigen::LLT<MatrixXd> llt(r);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const VectorXd dg = MatrixXd(llt.matrixL()).diagonal();
    ok = dg.minCoeff() > 1e-7 * dg.maxCoeff();
  }
  if (!ok) throw std::domain_error(std::string(who) + ": matrix is singular beyond the ridge tolerance");
  return r;
}

}  // namespace detail

// Generalized eigenvectors of B v = lambda A v with A = Cov(X) and
// B = A - gamma/(alpha N) X'LX, scaled so that W'AW = diag(lambda_+).
inline SpectralDecomposition vicreg_linear_spectrum(const MatrixXd& x, const RelationGraph& g, double alpha,
                                                    double gamma, Index k, double ridge = -1.0) {
  if (!(alpha > 0.0)) throw std::invalid_argument("vicreg_linear_weights: alpha must be positive");
  if (x.rows() != g.n()) throw std::invalid_argument("vicreg_linear_weights: shape mismatch");
  if (k < 1 || k > x.cols()) throw std::invalid_argument("vicreg_linear_weights: k must be in [1, D]");
  const double n = static_cast<double>(x.rows());
  const MatrixXd a = detail::add_ridge(covariance(x), ridge, "vicreg_linear_weights");
  const MatrixXd xc = center_columns(x);
  const MatrixXd xlx = xc.transpose() * laplacian(g).apply(xc);
  MatrixXd b = a - (gamma / (alpha * n)) * 0.5 * (xlx + xlx.transpose());
  return generalized_topk(b, a, k);
}

inline MatrixXd vicreg_linear_weights(const MatrixXd& x, const RelationGraph& g, double alpha, double gamma,
                                      Index k, double ridge = -1.0) {
  SpectralDecomposition s = vicreg_linear_spectrum(x, g, alpha, gamma, k, ridge);
  MatrixXd w = s.vectors;
  for (Index c = 0; c < k; ++c) w.col(c) *= std::sqrt(std::max(s.values(c), 0.0));
  return w;
}

inline double vicreg_linear_min_loss(const MatrixXd& x, const RelationGraph& g, double alpha, double gamma,
                                     Index k, double ridge = -1.0) {
  return vicreg_selection_loss(vicreg_linear_spectrum(x, g, alpha, gamma, k, ridge).values, alpha);
}

// Principal square root with negative eigenvalues clamped to zero.
inline MatrixXd psd_sqrt(const MatrixXd& m) {
  SpectralDecomposition s = sym_eig(0.5 * (m + m.transpose()));
  const VectorXd r = s.values.cwiseMax(0.0).cwiseSqrt();
  return s.vectors * r.asDiagonal() * s.vectors.transpose();
}

// Cov(X)^{-1} (Cov(X) - gamma/(alpha N) X'LX)^{1/2}, first k columns.
inline MatrixXd vicreg_linear_weights_closed(const MatrixXd& x, const RelationGraph& g, double alpha,
                                             double gamma, Index k, double ridge = -1.0) {
  if (!(alpha > 0.0)) throw std::invalid_argument("vicreg_linear_weights: alpha must be positive");
  if (k < 1 || k > x.cols()) throw std::invalid_argument("vicreg_linear_weights: k must be in [1, D]");
  const double n = static_cast<double>(x.rows());
  const MatrixXd a = detail::add_ridge(covariance(x), ridge, "vicreg_linear_weights");
  const MatrixXd xc = center_columns(x);
  const MatrixXd xlx = xc.transpose() * laplacian(g).apply(xc);
  const MatrixXd b = a - (gamma / (alpha * n)) * 0.5 * (xlx + xlx.transpose());
  const MatrixXd w = a.llt().solve(psd_sqrt(b));
  return w.leftCols(k);
}

inline LppResult lpp_lda_weights(const MatrixXd& x, const RelationGraph& g, Index k, double ridge = -1.0) {
  if (x.rows() != g.n()) throw std::invalid_argument("lpp_lda_weights: shape mismatch");
  if (k < 1 || k > x.cols()) throw std::invalid_argument("lpp_lda_weights: k must be in [1, D]");
  const MatrixXd xc = center_columns(x);
  MatrixXd xgx = xc.transpose() * g.multiply(xc);
  xgx = 0.5 * (xgx + xgx.transpose());
  const double scale = std::max(1e-300, (xc.transpose() * xc).cwiseAbs().maxCoeff());
  if (xgx.cwiseAbs().maxCoeff() <= 1e-14 * scale)
    throw std::domain_error("lpp_lda_weights: between-pair scatter vanishes");
  const MatrixXd xlx = xc.transpose() * laplacian(g).apply(xc);
  const MatrixXd b = detail::add_ridge(xlx, ridge, "lpp_lda_weights");
  SpectralDecomposition s = generalized_topk(xgx, b, k);
  return {s.vectors, s.values};
}

inline CcaWeights cca_weights(const MatrixXd& x_a, const MatrixXd& x_b, Index k, double ridge = -1.0) {
  if (x_a.rows() != x_b.rows()) throw std::invalid_argument("cca_weights: row mismatch");
  if (k < 1 || k > std::min(x_a.cols(), x_b.cols())) throw std::invalid_argument("cca_weights: k out of range");
  const MatrixXd a = center_columns(x_a), b = center_columns(x_b);
  const MatrixXd caa = detail::add_ridge(a.transpose() * a, ridge, "cca_weights");
  const MatrixXd cbb = detail::add_ridge(b.transpose() * b, ridge, "cca_weights");
  const MatrixXd cab = a.transpose() * b;
  Eigen::LLT<MatrixXd> la(caa), lb(cbb);
  const MatrixXd l = la.matrixL();
  const auto tl = l.triangularView<Eigen::Lower>();
  // L^{-1} Cab Cbb^{-1} Cba L^{-T}
  const MatrixXd t = tl.solve(cab);
  MatrixXd m = t * lb.solve(t.transpose());
  m = 0.5 * (m + m.transpose());
  SpectralDecomposition s = sym_eig(m);
  CcaWeights out;
  out.eigenvalues = s.values.head(k);
  out.correlations = out.eigenvalues.cwiseMax(0.0).cwiseMin(1.0).cwiseSqrt();
  out.w_a = l.transpose().triangularView<Eigen::Upper>().solve(s.vectors.leftCols(k));
  out.w_b = lb.solve(cab.transpose() * out.w_a);
  for (Index c = 0; c < k; ++c) {
    detail::fix_sign(out.w_a.col(c));
    VectorXd wb = lb.solve(cab.transpose() * out.w_a.col(c));
    const double nb = std::sqrt(std::max(0.0, wb.dot(cbb * wb)));
    out.w_b.col(c) = nb > 0.0 ? VectorXd(wb / nb) : VectorXd(wb);
  }
  return out;
}

// Largest residual of C_ab w_b = rho C_aa w_a and C_ba w_a = rho C_bb w_b,
// relative to the size of the terms.
inline double cca_stationarity(const MatrixXd& x_a, const MatrixXd& x_b, const CcaWeights& w, double ridge = -1.0) {
  const MatrixXd a = center_columns(x_a), b = center_columns(x_b);
  const MatrixXd caa = detail::add_ridge(a.transpose() * a, ridge, "cca_weights");
  const MatrixXd cbb = detail::add_ridge(b.transpose() * b, ridge, "cca_weights");
  const MatrixXd cab = a.transpose() * b;
  double worst = 0.0;
  for (Index c = 0; c < w.w_a.cols(); ++c) {
    const double rho = w.correlations(c);
    const VectorXd r1 = cab * w.w_b.col(c) - rho * caa * w.w_a.col(c);
    const VectorXd r2 = cab.transpose() * w.w_a.col(c) - rho * cbb * w.w_b.col(c);
    const double s1 = (cab * w.w_b.col(c)).norm() + (caa * w.w_a.col(c)).norm();
    const double s2 = (cab.transpose() * w.w_a.col(c)).norm() + (cbb * w.w_b.col(c)).norm();
    worst = std::max({worst, r1.norm() / std::max(s1, 1e-300), r2.norm() / std::max(s2, 1e-300)});
  }
  return worst;
}

}  // namespace sslspec

#endif  // SSLSPEC_CLOSED_FORM_HPP
