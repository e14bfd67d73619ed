#ifndef SSLSPEC_GRAPH_HPP
#define SSLSPEC_GRAPH_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace sslspec {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Edge {
  Index i = 0;
  Index j = 0;
  double w = 0.0;
};

enum class Storage { dense, triplets };

// Symmetric, nonnegative, zero-diagonal weight matrix. Small graphs are kept
// dense; larger ones as sorted (row, col) triplets holding both directions.
class RelationGraph {
 public:
  static constexpr Index kDenseLimit = 4096;

  RelationGraph() = default;

  explicit RelationGraph(const MatrixXd& w, double sym_tol = 1e-12) {
    if (w.rows() != w.cols()) throw std::invalid_argument("RelationGraph: matrix is not square");
    n_ = w.rows();
    const double scale = n_ > 0 ? std::max(1.0, w.cwiseAbs().maxCoeff()) : 1.0;
    for (Index i = 0; i < n_; ++i) {
      if (w(i, i) != 0.0) throw std::invalid_argument("RelationGraph: nonzero diagonal");
      for (Index j = 0; j < n_; ++j) {
        if (!std::isfinite(w(i, j))) throw std::invalid_argument("RelationGraph: non-finite weight");
        if (w(i, j) < 0.0) throw std::invalid_argument("RelationGraph: negative weight");
        if (std::abs(w(i, j) - w(j, i)) > sym_tol * scale)
          throw std::invalid_argument("RelationGraph: matrix is not symmetric");
      }
    }
    if (n_ <= kDenseLimit) {
      storage_ = Storage::dense;
      dense_ = 0.5 * (w + w.transpose());
    } else {
      storage_ = Storage::triplets;
      for (Index i = 0; i < n_; ++i)
        for (Index j = 0; j < n_; ++j)
          if (w(i, j) != 0.0) trip_.push_back({i, j, 0.5 * (w(i, j) + w(j, i))});
    }
  }

  // Edges are given once per unordered pair (either orientation).
  static RelationGraph from_edges(Index n, const std::vector<Edge>& edges,
                                  Storage storage_hint = Storage::dense) {
    RelationGraph g;
    g.n_ = n;
    std::vector<Edge> both;
    both.reserve(2 * edges.size());
    for (const Edge& e : edges) {
      if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
        throw std::invalid_argument("RelationGraph: edge index out of range");
      if (e.i == e.j) throw std::invalid_argument("RelationGraph: diagonal edge");
      if (!(e.w >= 0.0) || !std::isfinite(e.w)) throw std::invalid_argument("RelationGraph: negative weight");
      if (e.w == 0.0) continue;
      both.push_back({e.i, e.j, e.w});
      both.push_back({e.j, e.i, e.w});
    }
    std::sort(both.begin(), both.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    for (std::size_t k = 1; k < both.size(); ++k)
      if (both[k].i == both[k - 1].i && both[k].j == both[k - 1].j)
        throw std::invalid_argument("RelationGraph: duplicate edge");
    if (storage_hint == Storage::dense && n <= kDenseLimit) {
      g.storage_ = Storage::dense;
      g.dense_ = MatrixXd::Zero(n, n);
      for (const Edge& e : both) g.dense_(e.i, e.j) = e.w;
    } else {
      g.storage_ = Storage::triplets;
      g.trip_ = std::move(both);
    }
    return g;
  }

  Index n() const { return n_; }
  Storage storage() const { return storage_; }
  bool is_dense() const { return storage_ == Storage::dense; }

  MatrixXd to_dense() const {
    if (is_dense()) return dense_;
    MatrixXd m = MatrixXd::Zero(n_, n_);
    for (const Edge& e : trip_) m(e.i, e.j) = e.w;
    return m;
  }

  const MatrixXd& dense() const {
    if (!is_dense()) throw std::logic_error("RelationGraph: graph is stored as triplets");
    return dense_;
  }

  Eigen::SparseMatrix<double> to_sparse() const {
    std::vector<Eigen::Triplet<double>> t;
    for_each_entry([&](Index i, Index j, double w) { t.emplace_back(i, j, w); });
    Eigen::SparseMatrix<double> s(n_, n_);
    s.setFromTriplets(t.begin(), t.end());
    return s;
  }

  // Calls f(i, j, w) on every nonzero entry, row-major order.
  template <class F>
  void for_each_entry(F&& f) const {
    if (is_dense()) {
      for (Index i = 0; i < n_; ++i)
        for (Index j = 0; j < n_; ++j)
          if (dense_(i, j) != 0.0) f(i, j, dense_(i, j));
    } else {
      for (const Edge& e : trip_) f(e.i, e.j, e.w);
    }
  }

  // Edges with i < j.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for_each_entry([&](Index i, Index j, double w) {
      if (i < j) out.push_back({i, j, w});
    });
    return out;
  }

  Index nnz() const {
    Index c = 0;
    for_each_entry([&](Index, Index, double) { ++c; });
    return c;
  }

  bool is_binary() const {
    bool ok = true;
    for_each_entry([&](Index, Index, double w) { ok = ok && w == 1.0; });
    return ok;
  }

  // G * Z
  MatrixXd multiply(const MatrixXd& z) const {
    if (z.rows() != n_) throw std::invalid_argument("RelationGraph: shape mismatch");
    if (is_dense()) return dense_ * z;
    MatrixXd out = MatrixXd::Zero(n_, z.cols());
    for (const Edge& e : trip_) out.row(e.i) += e.w * z.row(e.j);
    return out;
  }

 private:
  Index n_ = 0;
  Storage storage_ = Storage::dense;
  MatrixXd dense_;
  std::vector<Edge> trip_;
};

struct Laplacian {
  Storage storage = Storage::dense;
  MatrixXd dense;
  Eigen::SparseMatrix<double> sparse;

  Index n() const { return storage == Storage::dense ? dense.rows() : sparse.rows(); }
  MatrixXd to_dense() const { return storage == Storage::dense ? dense : MatrixXd(sparse); }
  MatrixXd apply(const MatrixXd& z) const {
    if (z.rows() != n()) throw std::invalid_argument("Laplacian: shape mismatch");
    return storage == Storage::dense ? MatrixXd(dense * z) : MatrixXd(sparse * z);
  }
};

inline RelationGraph build_view_graph(Index n_base, Index views) {
  if (n_base < 1) throw std::invalid_argument("build_view_graph: n_base must be >= 1");
  if (views < 2) throw std::invalid_argument("build_view_graph: views must be >= 2");
  std::vector<Edge> e;
  for (Index n = 0; n < n_base; ++n)
    for (Index a = 0; a < views; ++a)
      for (Index b = a + 1; b < views; ++b) e.push_back({a * n_base + n, b * n_base + n, 1.0});
  return RelationGraph::from_edges(n_base * views, e);
}

inline RelationGraph build_supervised_graph(const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("build_supervised_graph: empty labels");
  const Index n = static_cast<Index>(labels.size());
  std::vector<Edge> e;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (labels[i] == labels[j]) e.push_back({i, j, 1.0});
  return RelationGraph::from_edges(n, e);
}

// Row sums, accumulated in column order for both storages so the two
// backends agree bit for bit.
inline VectorXd degree(const RelationGraph& g) {
  VectorXd d = VectorXd::Zero(g.n());
  g.for_each_entry([&](Index i, Index, double w) { d(i) += w; });
  return d;
}

inline Laplacian laplacian(const RelationGraph& g) {
  Laplacian l;
  const VectorXd d = degree(g);
  if (g.is_dense()) {
    l.storage = Storage::dense;
    l.dense = -g.dense();
    l.dense.diagonal() = d;
  } else {
    l.storage = Storage::triplets;
    std::vector<Eigen::Triplet<double>> t;
    g.for_each_entry([&](Index i, Index j, double w) { t.emplace_back(i, j, -w); });
    for (Index i = 0; i < g.n(); ++i)
      if (d(i) != 0.0) t.emplace_back(i, i, d(i));
    l.sparse.resize(g.n(), g.n());
    l.sparse.setFromTriplets(t.begin(), t.end());
  }
  return l;
}

// Tr(Z' L Z)
inline double dirichlet_energy(const MatrixXd& z, const Laplacian& l) {
  if (z.rows() != l.n()) throw std::invalid_argument("dirichlet_energy: shape mismatch");
  return (z.array() * l.apply(z).array()).sum();
}

// Tr(Z' L Z) straight from the edge list: sum over i<j of w ||z_i - z_j||^2.
inline double dirichlet_energy(const MatrixXd& z, const RelationGraph& g) {
  if (z.rows() != g.n()) throw std::invalid_argument("dirichlet_energy: shape mismatch");
  double s = 0.0;
  g.for_each_entry([&](Index i, Index j, double w) {
    if (i < j) s += w * (z.row(i) - z.row(j)).squaredNorm();
  });
  return s;
}

inline MatrixXd row_normalize(const RelationGraph& g) {
  const VectorXd d = degree(g);
  for (Index i = 0; i < g.n(); ++i)
    if (!(d(i) > 0.0)) throw std::domain_error("row_normalize: node " + std::to_string(i) + " is isolated");
  MatrixXd m = g.to_dense();
  for (Index i = 0; i < g.n(); ++i) m.row(i) /= d(i);
  return m;
}

// One row per nonzero (i, j) of G in row-major order.
inline std::pair<MatrixXd, MatrixXd> pair_expand(const RelationGraph& g, const MatrixXd& x) {
  if (x.rows() != g.n()) throw std::invalid_argument("pair_expand: shape mismatch");
  if (!g.is_binary()) throw std::invalid_argument("pair_expand: graph must be binary");
  const Index m = g.nnz();
  MatrixXd left(m, x.cols()), right(m, x.cols());
  Index r = 0;
  g.for_each_entry([&](Index i, Index j, double) {
    left.row(r) = x.row(i);
    right.row(r) = x.row(j);
    ++r;
  });
  return {left, right};
}

// Block-clique graph for consecutive label blocks; handy for tests and
// experiments.
inline RelationGraph build_clique_graph(const std::vector<Index>& sizes) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (Index k = 0; k < sizes[c]; ++k) labels.push_back(static_cast<int>(c));
  return build_supervised_graph(labels);
}

}  // namespace sslspec

#endif  // SSLSPEC_GRAPH_HPP
