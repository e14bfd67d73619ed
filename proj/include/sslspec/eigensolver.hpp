#ifndef SSLSPEC_EIGENSOLVER_HPP
#define SSLSPEC_EIGENSOLVER_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sslspec {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kRankTol = 1e-10;

// Eigenpairs sorted by decreasing eigenvalue. `residuals` is only filled by
// the iterative solver.
struct SpectralDecomposition {
  VectorXd values;
  MatrixXd vectors;
  double rank_tol = kRankTol;
  VectorXd residuals;
  bool converged = true;
  int iterations = 0;

  Index size() const { return values.size(); }

  Index rank() const {
    if (values.size() == 0) return 0;
    const double top = values.cwiseAbs().maxCoeff();
    if (top == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < values.size(); ++i)
      if (std::abs(values(i)) > rank_tol * top) ++r;
    return r;
  }
};

struct SvdResult {
  MatrixXd u;
  VectorXd s;
  MatrixXd v;
};

namespace detail {

inline void fix_sign(Eigen::Ref<VectorXd> v) {
  Index arg = 0;
  double best = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    // strict comparison with a small slack keeps the first index on ties
    if (a > best * (1.0 + 1e-12) + 1e-300) {
      best = a;
      arg = i;
    }
  }
  if (v(arg) < 0) v = -v;
}

// Replace the basis of a degenerate cluster by the orthonormalized
// projections of e_0, e_1, ... so the result does not depend on the basis
// the backend happened to return.
inline void canonical_cluster_basis(Eigen::Ref<MatrixXd> q) {
  const Index n = q.rows(), m = q.cols();
  if (m < 2) return;
  MatrixXd out(n, m);
  Index found = 0;
  for (Index i = 0; i < n && found < m; ++i) {
    VectorXd v = q * q.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < found; ++j) v -= out.col(j).dot(v) * out.col(j);
    const double nv = v.norm();
    if (nv > 1e-6) out.col(found++) = v / nv;
  }
  if (found == m) q = out;
}

inline void finalize_ordering(VectorXd& values, MatrixXd& vectors) {
  const Index m = values.size();
  if (m == 0) return;
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  const double tie = 1e-9 * scale;
  Index start = 0;
  while (start < m) {
    Index stop = start + 1;
    while (stop < m && std::abs(values(stop - 1) - values(stop)) <= tie) ++stop;
    if (stop - start > 1 && vectors.rows() > 0)
      canonical_cluster_basis(vectors.middleCols(start, stop - start));
    start = stop;
  }
  for (Index j = 0; j < m; ++j) fix_sign(vectors.col(j));
}

}  // namespace detail

inline double symmetry_defect(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix is not square");
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

// Dense symmetric eigendecomposition, descending order.
inline SpectralDecomposition sym_eig(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("sym_eig: matrix is not square");
  SpectralDecomposition out;
  const Index n = a.rows();
  if (n == 0) return out;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (symmetry_defect(a) > 1e-8 * scale)
    throw std::invalid_argument("sym_eig: matrix is not symmetric");
  const MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("sym_eig: decomposition failed");
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  detail::finalize_ordering(out.values, out.vectors);
  return out;
}

// Thin SVD, singular values descending.
inline SvdResult svd(const MatrixXd& m) {
  SvdResult r;
  if (m.size() == 0) {
    r.u = MatrixXd(m.rows(), 0);
    r.v = MatrixXd(m.cols(), 0);
    return r;
  }
  Eigen::BDCSVD<MatrixXd> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  r.u = s.matrixU();
  r.s = s.singularValues();
  r.v = s.matrixV();
  if (!r.s.allFinite() || !r.u.allFinite() || !r.v.allFinite()) {
    // divide-and-conquer can break down on exactly repeated values
    Eigen::JacobiSVD<MatrixXd> j(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    r.u = j.matrixU();
    r.s = j.singularValues();
    r.v = j.matrixV();
  }
  return r;
}

inline VectorXd singular_values(const MatrixXd& m) {
  if (m.size() == 0) return VectorXd();
  VectorXd s = Eigen::BDCSVD<MatrixXd>(m).singularValues();
  if (!s.allFinite()) s = Eigen::JacobiSVD<MatrixXd>(m).singularValues();
  return s;
}

inline Index numerical_rank(const VectorXd& s, double tol_rel = kRankTol) {
  if (s.size() == 0) return 0;
  const double top = s.maxCoeff();
  if (!(top > 0.0)) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol_rel * top) ++r;
  return r;
}

inline Index matrix_rank(const MatrixXd& m, double tol_rel = kRankTol) {
  return numerical_rank(singular_values(m), tol_rel);
}

// Largest principal angle between the column spaces of two matrices with
// orthonormal columns; measures how far col(b) sticks out of col(a).
inline double subspace_angle(const MatrixXd& a, const MatrixXd& b) {
  if (b.cols() == 0) return 0.0;
  const MatrixXd resid = b - a * (a.transpose() * b);
  const double s = singular_values(resid).maxCoeff();
  return std::asin(std::min(1.0, s));
}

inline MatrixXd orthonormal_basis(const MatrixXd& m, double tol_rel = kRankTol) {
  if (m.cols() == 0) return MatrixXd(m.rows(), 0);
  SvdResult s = svd(m);
  const Index r = numerical_rank(s.s, tol_rel);
  return s.u.leftCols(r);
}

// Symmetric operator given only through block products y = A x.
struct LinearOperator {
  Index n = 0;
  std::function<void(const MatrixXd&, MatrixXd&)> apply;
  VectorXd diagonal;  // optional, used by the Jacobi preconditioner

  MatrixXd operator()(const MatrixXd& x) const {
    MatrixXd y(x.rows(), x.cols());
    apply(x, y);
    return y;
  }

  static LinearOperator from_dense(const MatrixXd& a) {
    LinearOperator op;
    op.n = a.rows();
    auto held = std::make_shared<const MatrixXd>(a);
    op.apply = [held](const MatrixXd& x, MatrixXd& y) { y.noalias() = (*held) * x; };
    op.diagonal = a.diagonal();
    return op;
  }

  static LinearOperator from_sparse(const Eigen::SparseMatrix<double>& a) {
    LinearOperator op;
    op.n = a.rows();
    auto held = std::make_shared<const Eigen::SparseMatrix<double>>(a);
    op.apply = [held](const MatrixXd& x, MatrixXd& y) { y.noalias() = (*held) * x; };
    op.diagonal = a.diagonal();
    return op;
  }
};

// Returns max |u'Av - v'Au| / (|u||v|) over a few random probes.
inline double symmetry_probe(const LinearOperator& op, int probes = 4, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    VectorXd u(op.n), v(op.n);
    for (Index i = 0; i < op.n; ++i) {
      u(i) = nd(rng);
      v(i) = nd(rng);
    }
    const VectorXd au = op(u), av = op(v);
    worst = std::max(worst, std::abs(u.dot(av) - v.dot(au)) / (u.norm() * v.norm()));
  }
  return worst;
}

enum class Preconditioner { identity, jacobi };

struct LobpcgOptions {
  double tol = 1e-10;
  int max_iter = 2000;
  std::uint64_t seed = 0;
  Preconditioner preconditioner = Preconditioner::identity;
};

namespace detail {

// Modified Gram-Schmidt against `basis` (already orthonormal) and then
// within `block`; columns that vanish are dropped. A second pass runs when a
// column loses more than 30% of its norm.
inline MatrixXd orthonormalize_against(const MatrixXd& basis, const MatrixXd& block,
                                       double drop_tol = 1e-10) {
  MatrixXd out(block.rows(), block.cols());
  Index kept = 0;
  for (Index j = 0; j < block.cols(); ++j) {
    VectorXd v = block.col(j);
    const double n0 = v.norm();
    if (n0 == 0.0) continue;
    double before = n0;
    for (int pass = 0; pass < 3; ++pass) {
      for (Index i = 0; i < basis.cols(); ++i) v -= basis.col(i).dot(v) * basis.col(i);
      for (Index i = 0; i < kept; ++i) v -= out.col(i).dot(v) * out.col(i);
      const double after = v.norm();
      if (after >= 0.7 * before) break;
      before = after;
    }
    const double nv = v.norm();
    if (nv > drop_tol * n0) out.col(kept++) = v / nv;
  }
  return out.leftCols(kept);
}

}  // namespace detail

// Block LOBPCG for the k algebraically largest eigenpairs.
inline SpectralDecomposition lobpcg_topk(const LinearOperator& op, Index k,
                                         const LobpcgOptions& opt = {}) {
  const Index n = op.n;
  if (k < 1 || k > n) throw std::invalid_argument("lobpcg_topk: need 1 <= k <= n");
  const Index m = std::min(n, k + std::min<Index>(k, 4));

  // Small problems are handled by the dense path.
  if (3 * m >= n) {
    MatrixXd dense = op(MatrixXd::Identity(n, n));
    dense = 0.5 * (dense + dense.transpose());
    SpectralDecomposition full = sym_eig(dense);
    SpectralDecomposition out;
    out.values = full.values.head(k);
    out.vectors = full.vectors.leftCols(k);
    out.residuals = (dense * out.vectors - out.vectors * out.values.asDiagonal()).colwise().norm();
    return out;
  }

  VectorXd inv_diag;
  if (opt.preconditioner == Preconditioner::jacobi) {
    if (op.diagonal.size() != n) throw std::invalid_argument("lobpcg_topk: jacobi needs a diagonal");
    inv_diag = op.diagonal;
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  MatrixXd x0(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) x0(i, j) = nd(rng);
  MatrixXd x = detail::orthonormalize_against(MatrixXd(n, 0), x0);
  MatrixXd ax = op(x);
  {
    // initial Rayleigh-Ritz
    MatrixXd g = x.transpose() * ax;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (g + g.transpose()));
    MatrixXd c = es.eigenvectors().rowwise().reverse();
    x = x * c;
    ax = ax * c;
  }
  VectorXd theta = (x.transpose() * ax).diagonal();
  MatrixXd p(n, 0), ap(n, 0);

  SpectralDecomposition out;
  VectorXd res(k);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    MatrixXd r = ax - x * theta.asDiagonal();
    Index active = 0;
    for (Index j = 0; j < k; ++j) {
      res(j) = r.col(j).norm();
      if (res(j) > opt.tol * std::abs(theta(j)) + opt.tol) ++active;
    }
    if (active == 0) break;

    MatrixXd w = r;
    if (opt.preconditioner == Preconditioner::jacobi) {
      for (Index j = 0; j < w.cols(); ++j)
        for (Index i = 0; i < n; ++i) {
          const double d = inv_diag(i) - theta(j);
          w(i, j) /= (std::abs(d) > 1e-12 ? std::abs(d) : 1.0);
        }
    }
    // drop residual directions of already well converged trailing vectors
    MatrixXd wn = detail::orthonormalize_against(x, w, 1e-12);
    MatrixXd pn = p.cols() > 0 ? detail::orthonormalize_against(x, p, 1e-12) : MatrixXd(n, 0);
    MatrixXd extra(n, wn.cols() + pn.cols());
    extra << wn, pn;
    MatrixXd s_rest = detail::orthonormalize_against(x, extra, 1e-12);
    MatrixXd s(n, x.cols() + s_rest.cols());
    s << x, s_rest;
    MatrixXd as(n, s.cols());
    as.leftCols(x.cols()) = ax;
    if (s_rest.cols() > 0) as.rightCols(s_rest.cols()) = op(s_rest);
    MatrixXd g = s.transpose() * as;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (g + g.transpose()));
    MatrixXd c = es.eigenvectors().rowwise().reverse().leftCols(m);
    theta = es.eigenvalues().reverse().head(m);
    MatrixXd xn = s * c;
    MatrixXd axn = as * c;
    if (s_rest.cols() > 0) {
      p = s_rest * c.bottomRows(s_rest.cols());
      ap = as.rightCols(s_rest.cols()) * c.bottomRows(s_rest.cols());
    } else {
      p.resize(n, 0);
      ap.resize(n, 0);
    }
    x = xn;
    ax = axn;
    // refresh the products now and then to limit drift
    if ((it + 1) % 50 == 0) {
      x = detail::orthonormalize_against(MatrixXd(n, 0), x);
      ax = op(x);
      MatrixXd gx = x.transpose() * ax;
      Eigen::SelfAdjointEigenSolver<MatrixXd> ex(0.5 * (gx + gx.transpose()));
      MatrixXd cx = ex.eigenvectors().rowwise().reverse();
      x = x * cx;
      ax = ax * cx;
      theta = ex.eigenvalues().reverse();
    }
  }
  // final clean Rayleigh-Ritz on the converged block
  x = detail::orthonormalize_against(MatrixXd(n, 0), x);
  ax = op(x);
  MatrixXd gx = x.transpose() * ax;
  Eigen::SelfAdjointEigenSolver<MatrixXd> ex(0.5 * (gx + gx.transpose()));
  MatrixXd cx = ex.eigenvectors().rowwise().reverse();
  x = x * cx;
  ax = ax * cx;
  theta = ex.eigenvalues().reverse();

  out.values = theta.head(k);
  out.vectors = x.leftCols(k);
  out.iterations = it;
  detail::finalize_ordering(out.values, out.vectors);
  const MatrixXd av = op(out.vectors);
  out.residuals = (av - out.vectors * out.values.asDiagonal()).colwise().norm();
  out.converged = true;
  for (Index j = 0; j < k; ++j)
    if (out.residuals(j) > opt.tol * std::abs(out.values(j)) + opt.tol) out.converged = false;
  return out;
}

inline SpectralDecomposition lobpcg_topk(const LinearOperator& op, Index k, double tol,
                                         int max_iter, std::uint64_t seed) {
  LobpcgOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  opt.seed = seed;
  return lobpcg_topk(op, k, opt);
}

// A v = lambda B v with B symmetric positive definite, via B = L L'.
// Eigenvectors are B-orthonormal.
inline SpectralDecomposition generalized_topk(const MatrixXd& a, const MatrixXd& b, Index k) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n)
    throw std::invalid_argument("generalized_topk: shape mismatch");
  if (k < 0 || k > n) throw std::invalid_argument("generalized_topk: k out of range");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (symmetry_defect(b) > 1e-8 * scale) throw std::invalid_argument("generalized_topk: b not symmetric");
  Eigen::LLT<MatrixXd> llt(0.5 * (b + b.transpose()));
  if (llt.info() != Eigen::Success) throw std::invalid_argument("generalized_topk: b is not SPD");
  const MatrixXd l = llt.matrixL();
  if (l.diagonal().minCoeff() <= 1e-14 * l.diagonal().maxCoeff())
    throw std::invalid_argument("generalized_topk: b is not SPD");
  const auto tl = l.triangularView<Eigen::Lower>();
  MatrixXd c = tl.solve(tl.solve(0.5 * (a + a.transpose())).transpose());
  SpectralDecomposition s = sym_eig(0.5 * (c + c.transpose()));
  SpectralDecomposition out;
  out.values = s.values.head(k);
  out.vectors = l.transpose().triangularView<Eigen::Upper>().solve(s.vectors.leftCols(k));
  for (Index j = 0; j < k; ++j) detail::fix_sign(out.vectors.col(j));
  return out;
}

inline SpectralDecomposition generalized_topk(const LinearOperator& a_op, const MatrixXd& b, Index k) {
  MatrixXd a = a_op(MatrixXd::Identity(a_op.n, a_op.n));
  return generalized_topk(a, b, k);
}

}  // namespace sslspec

#endif  // SSLSPEC_EIGENSOLVER_HPP
