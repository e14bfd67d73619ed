#ifndef SSLSPEC_OPTIM_HPP
#define SSLSPEC_OPTIM_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "eigensolver.hpp"
#include "graph.hpp"
#include "graph_estimation.hpp"
#include "losses.hpp"

namespace sslspec {

// ---------------------------------------------------------------- VICReg

namespace detail {

// dL/dCov for the variance and covariance terms.
inline MatrixXd vicreg_cov_grad(const MatrixXd& c, const LossConfig& cfg) {
  MatrixXd s = 2.0 * cfg.beta * c;
  for (Index k = 0; k < c.rows(); ++k) {
    const double ckk = c(k, k);
    if (cfg.variance_mode == VarianceMode::squared) {
      s(k, k) = -2.0 * cfg.alpha * (1.0 - ckk);
    } else if (ckk < 1.0) {
      s(k, k) = -0.5 * cfg.alpha / std::sqrt(std::max(ckk, 1e-300));
    } else {
      s(k, k) = 0.0;
    }
  }
  return s;
}

}  // namespace detail

inline MatrixXd grad_vicreg(const MatrixXd& z, const RelationGraph& g, const LossConfig& cfg) {
  cfg.validate();
  if (z.rows() != g.n()) throw std::invalid_argument("grad_vicreg: shape mismatch");
  const double n = static_cast<double>(z.rows());
  const MatrixXd zc = center_columns(z);
  const MatrixXd c = (zc.transpose() * zc) / n;
  MatrixXd grad = (2.0 / n) * zc * detail::vicreg_cov_grad(c, cfg);
  if (cfg.gamma != 0.0) grad += (4.0 * cfg.gamma / n) * laplacian(g).apply(z);
  return grad;
}

// Loss and gradient of Z = X W with respect to W.
inline double vicreg_linear_loss(const MatrixXd& x, const MatrixXd& w, const RelationGraph& g, const LossConfig& cfg) {
  return vicreg_loss(x * w, g, cfg);
}

inline MatrixXd grad_vicreg_linear(const MatrixXd& x, const MatrixXd& w, const RelationGraph& g,
                                   const LossConfig& cfg) {
  return x.transpose() * grad_vicreg(x * w, g, cfg);
}

// ----------------------------------------------------------- BarlowTwins

namespace detail {

struct BtCore {
  double loss = 0.0;
  MatrixXd d_s;   // dL/dS for S = cross product of centered views
  VectorXd d_na;  // dL/d(norm of left columns)
  VectorXd d_nb;
};

inline BtCore bt_core(const MatrixXd& s, const VectorXd& na, const VectorXd& nb, const LossConfig& cfg) {
  const Index k = s.rows();
  BtCore r;
  r.d_s = MatrixXd::Zero(k, k);
  r.d_na = VectorXd::Zero(k);
  r.d_nb = VectorXd::Zero(k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) {
      const double den = na(i) * nb(j) + cfg.eps;
      const double c = s(i, j) / den;
      double gc;
      if (i == j) {
        r.loss += (c - 1.0) * (c - 1.0);
        gc = 2.0 * (c - 1.0);
      } else {
        r.loss += cfg.alpha_bt * c * c;
        gc = 2.0 * cfg.alpha_bt * c;
      }
      r.d_s(i, j) = gc / den;
      const double t = gc * s(i, j) / (den * den);
      r.d_na(i) -= t * nb(j);
      r.d_nb(j) -= t * na(i);
    }
  return r;
}

}  // namespace detail

inline std::pair<MatrixXd, MatrixXd> grad_barlow_twins(const MatrixXd& z_left, const MatrixXd& z_right,
                                                       const LossConfig& cfg, double* loss = nullptr) {
  cfg.validate();
  if (z_left.rows() != z_right.rows() || z_left.cols() != z_right.cols())
    throw std::invalid_argument("grad_barlow_twins: shape mismatch");
  const MatrixXd a = center_columns(z_left), b = center_columns(z_right);
  const VectorXd na = a.colwise().norm().transpose(), nb = b.colwise().norm().transpose();
  const MatrixXd s = a.transpose() * b;
  detail::BtCore core = detail::bt_core(s, na, nb, cfg);
  if (loss) *loss = core.loss;
  MatrixXd ga = b * core.d_s.transpose();
  MatrixXd gb = a * core.d_s;
  for (Index k = 0; k < a.cols(); ++k) {
    if (na(k) > 0.0) ga.col(k) += core.d_na(k) / na(k) * a.col(k);
    if (nb(k) > 0.0) gb.col(k) += core.d_nb(k) / nb(k) * b.col(k);
  }
  // back through the column centering
  ga = center_columns(ga);
  gb = center_columns(gb);
  return {ga, gb};
}

namespace detail {

inline double bt_graph_eval(const MatrixXd& z, const Eigen::SparseMatrix<double>& g, const VectorXd& d,
                            const LossConfig& cfg, MatrixXd* grad) {
  const double m = d.sum();
  const MatrixXd gz = g * z;
  const VectorXd mean = (z.transpose() * d) / m;
  MatrixXd s = z.transpose() * gz - m * mean * mean.transpose();
  s = 0.5 * (s + s.transpose());
  VectorXd q(z.cols());
  for (Index k = 0; k < z.cols(); ++k)
    q(k) = std::max(0.0, (d.array() * z.col(k).array().square()).sum() - m * mean(k) * mean(k));
  const VectorXd nrm = q.cwiseSqrt();
  BtCore core = bt_core(s, nrm, nrm, cfg);
  if (grad) {
    const MatrixXd sym = core.d_s + core.d_s.transpose();
    MatrixXd gr = gz * sym;
    gr -= d * (mean.transpose() * sym);
    const VectorXd dn = core.d_na + core.d_nb;
    for (Index k = 0; k < z.cols(); ++k) {
      if (nrm(k) <= 0.0) continue;
      const double dq = dn(k) / (2.0 * nrm(k));
      gr.col(k) += 2.0 * dq * (d.array() * (z.col(k).array() - mean(k))).matrix();
    }
    *grad = std::move(gr);
  }
  return core.loss;
}

}  // namespace detail

// BarlowTwins on the pair expansion of G, computed without materializing the
// pairs: Z_l'Z_r = Z'GZ, Z_l'Z_l = Z_r'Z_r = Z'DZ, column sums d'Z.
inline double barlow_twins_graph_loss(const MatrixXd& z, const RelationGraph& g, const LossConfig& cfg,
                                      MatrixXd* grad = nullptr) {
  cfg.validate();
  if (z.rows() != g.n()) throw std::invalid_argument("barlow_twins_graph_loss: shape mismatch");
  const VectorXd d = degree(g);
  if (!(d.sum() > 0.0)) throw std::invalid_argument("barlow_twins_graph_loss: graph has no edges");
  return detail::bt_graph_eval(z, g.to_sparse(), d, cfg, grad);
}

// --------------------------------------------------------------- SimCLR

enum class Estimator { log, frobenius };
enum class Matching { euclidean, cross_entropy };

struct SimclrVariant {
  DistanceMetric metric = DistanceMetric::cosine;
  Estimator estimator = Estimator::log;
  ConstraintSet constraint = ConstraintSet::right_stochastic;
  Matching matching = Matching::cross_entropy;
  bool normalize_rows = true;
  double tau = 0.5;
  double eps = 1e-12;
};

namespace detail {

struct DistanceState {
  MatrixXd y;       // rows the distance is computed on
  VectorXd norms;   // row norms of z when normalization is applied
  MatrixXd d;
};

inline DistanceState simclr_distances(const MatrixXd& z, const SimclrVariant& v) {
  DistanceState st;
  const bool unit = v.normalize_rows || v.metric == DistanceMetric::cosine;
  if (unit) {
    st.norms = guarded_row_norms(z, v.eps);
    st.y = z;
    for (Index i = 0; i < z.rows(); ++i) st.y.row(i) /= st.norms(i);
  } else {
    st.y = z;
  }
  if (v.metric == DistanceMetric::cosine) {
    MatrixXd s = st.y * st.y.transpose();
    st.d = (1.0 - (0.5 * (s + s.transpose())).array()).matrix();
    st.d.diagonal().setZero();
  } else {
    st.d = squared_distances(st.y);
  }
  return st;
}

inline MatrixXd distance_grad_to_z(const MatrixXd& z, const DistanceState& st, const MatrixXd& dd,
                                   const SimclrVariant& v) {
  MatrixXd sym = dd + dd.transpose();
  sym.diagonal().setZero();
  MatrixXd gy;
  if (v.metric == DistanceMetric::cosine) {
    gy = -sym * st.y;
  } else {
    const VectorXd rs = sym.rowwise().sum();
    gy = 2.0 * (rs.asDiagonal() * st.y - sym * st.y);
  }
  const bool unit = v.normalize_rows || v.metric == DistanceMetric::cosine;
  if (!unit) return gy;
  MatrixXd gz(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    const double proj = st.y.row(i).dot(gy.row(i));
    gz.row(i) = (gy.row(i) - proj * st.y.row(i)) / st.norms(i);
  }
  return gz;
}

}  // namespace detail

inline MatrixXd simclr_target_matrix(const RelationGraph& g, ConstraintSet c) {
  return c == ConstraintSet::right_stochastic ? row_normalize(g) : g.to_dense();
}

inline MatrixXd simclr_variant_estimate(const MatrixXd& z, const SimclrVariant& v) {
  const detail::DistanceState st = detail::simclr_distances(z, v);
  if (v.estimator == Estimator::log) return estimate_graph_log(st.d, v.tau, v.constraint);
  return estimate_graph_frobenius(st.d, v.tau, v.constraint);
}

inline double simclr_variant_loss(const MatrixXd& z, const RelationGraph& g, const SimclrVariant& v,
                                  MatrixXd* grad = nullptr) {
  if (z.rows() != g.n()) throw std::invalid_argument("simclr loss: shape mismatch");
  if (v.estimator == Estimator::frobenius && v.matching == Matching::cross_entropy)
    throw std::invalid_argument("simclr loss: cross-entropy needs a strictly positive estimate");
  const Index n = z.rows();
  const MatrixXd target = simclr_target_matrix(g, v.constraint);
  const detail::DistanceState st = detail::simclr_distances(z, v);
  MatrixXd ghat, pre;
  if (v.estimator == Estimator::log) {
    ghat = estimate_graph_log(st.d, v.tau, v.constraint);
  } else {
    FrobeniusEstimate fe = estimate_graph_frobenius_full(st.d, v.tau, v.constraint);
    ghat = std::move(fe.weights);
    pre = std::move(fe.pre_clamp);
  }
  double loss = v.matching == Matching::euclidean ? euclidean_match_loss(target, ghat) : cross_entropy(target, ghat);
  if (!grad) return loss;

  MatrixXd dd = MatrixXd::Zero(n, n);
  const double it = 1.0 / v.tau;
  if (v.estimator == Estimator::log && v.matching == Matching::cross_entropy) {
    if (v.constraint == ConstraintSet::right_stochastic) {
      const VectorXd r = target.rowwise().sum();
      dd = it * (target - (ghat.array().colwise() * r.array()).matrix());
    } else {
      dd = it * target;
    }
  } else {
    const MatrixXd dg = 2.0 * (ghat - target);
    if (v.estimator == Estimator::log) {
      if (v.constraint == ConstraintSet::right_stochastic) {
        const VectorXd inner = (dg.array() * ghat.array()).rowwise().sum();
        dd = -it * (ghat.array() * (dg.array().colwise() - inner.array())).matrix();
      } else {
        dd = -it * (ghat.array() * dg.array()).matrix();
      }
    } else {
      MatrixXd h = (pre.array() > 0.0).select(dg, 0.0);
      h.diagonal().setZero();
      if (v.constraint == ConstraintSet::simple) {
        dd = -it * h;
      } else {
        const VectorXd rs = h.rowwise().sum();
        dd = -it * (h.colwise() - rs / static_cast<double>(n - 1));
      }
    }
  }
  dd.diagonal().setZero();
  *grad = detail::distance_grad_to_z(z, st, dd, v);
  return loss;
}

inline MatrixXd grad_simclr(const MatrixXd& z, const RelationGraph& g, const SimclrVariant& v) {
  MatrixXd grad;
  simclr_variant_loss(z, g, v, &grad);
  return grad;
}

// The plain infoNCE loss (softmax estimate, cross-entropy, no row
// normalization beyond what the metric implies).
inline MatrixXd grad_infonce(const MatrixXd& z, const RelationGraph& g, const LossConfig& cfg,
                             Metric metric = Metric::cosine) {
  SimclrVariant v;
  v.metric = metric == Metric::cosine ? DistanceMetric::cosine : DistanceMetric::l2_squared;
  v.normalize_rows = false;
  v.tau = cfg.tau;
  v.eps = cfg.eps;
  return grad_simclr(z, g, v);
}

// ------------------------------------------------------- finite differences

using Objective = std::function<double(const MatrixXd&, MatrixXd*)>;

inline MatrixXd finite_difference_gradient(const std::function<double(const MatrixXd&)>& f, const MatrixXd& x,
                                           double h = 1e-5) {
  MatrixXd g(x.rows(), x.cols());
  MatrixXd xp = x;
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      const double orig = xp(i, j);
      xp(i, j) = orig + h;
      const double fp = f(xp);
      xp(i, j) = orig - h;
      const double fm = f(xp);
      xp(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  return g;
}

inline double gradient_relative_error(const MatrixXd& analytic, const MatrixXd& numeric) {
  const double den = std::max({analytic.norm(), numeric.norm(), 1e-300});
  return (analytic - numeric).norm() / den;
}

inline double check_gradient(const Objective& f, const MatrixXd& x, double h = 1e-5) {
  MatrixXd g;
  f(x, &g);
  const MatrixXd fd = finite_difference_gradient([&](const MatrixXd& p) { return f(p, nullptr); }, x, h);
  return gradient_relative_error(g, fd);
}

// ------------------------------------------------------------ optimizers

enum class OptimizerKind { sgd, rmsprop };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double learning_rate = 1e-2;
  double decay = 0.99;
  double eps = 1e-8;
  int max_steps = 5000;
  std::uint64_t seed = 0;
  int record_every = 100;
  bool record_singular_values = false;
  // stop as soon as (L - L*)^2 falls to this value; negative disables
  double stop_gap_sq = -1.0;
  double divergence = 1e12;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("OptimizerConfig: learning_rate must be positive");
    if (!(decay >= 0.0 && decay < 1.0)) throw std::invalid_argument("OptimizerConfig: decay must be in [0, 1)");
    if (max_steps < 0) throw std::invalid_argument("OptimizerConfig: max_steps must be nonnegative");
    if (record_every < 1) throw std::invalid_argument("OptimizerConfig: record_every must be >= 1");
  }
};

struct TrajectoryPoint {
  int step = 0;
  double loss = 0.0;
  double gap_sq = std::numeric_limits<double>::quiet_NaN();
  VectorXd singular_values;
};

struct Trajectory {
  std::vector<TrajectoryPoint> steps;
  MatrixXd final_params;
  double final_loss = 0.0;
  double final_gap_sq = std::numeric_limits<double>::quiet_NaN();
  int steps_taken = 0;
  bool reached_target = false;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// First-order minimization. `embed` maps parameters to the embedding whose
// singular values are recorded (identity when empty).
inline Trajectory minimize(const Objective& f, const MatrixXd& init, const OptimizerConfig& opt,
                           std::optional<double> reference_loss = std::nullopt,
                           const std::function<MatrixXd(const MatrixXd&)>& embed = {}) {
  opt.validate();
  Trajectory t;
  MatrixXd p = init;
  MatrixXd v = MatrixXd::Zero(p.rows(), p.cols());
  MatrixXd g;
  auto record = [&](int step, double loss) {
    TrajectoryPoint pt;
    pt.step = step;
    pt.loss = loss;
    if (reference_loss) pt.gap_sq = (loss - *reference_loss) * (loss - *reference_loss);
    if (opt.record_singular_values) pt.singular_values = singular_values(embed ? embed(p) : p);
    t.steps.push_back(std::move(pt));
  };
  int step = 0;
  double loss = f(p, &g);
  for (;; ++step) {
    if (!std::isfinite(loss) || std::abs(loss) > opt.divergence) {
      std::ostringstream os;
      os << "training diverged at step " << step << " (loss " << loss << ")";
      throw DivergenceError(os.str());
    }
    const bool hit = reference_loss && opt.stop_gap_sq >= 0.0 &&
                     (loss - *reference_loss) * (loss - *reference_loss) <= opt.stop_gap_sq;
    const bool last = hit || step == opt.max_steps;
    if (step % opt.record_every == 0 || last) record(step, loss);
    if (last) {
      t.reached_target = hit;
      break;
    }
    if (opt.kind == OptimizerKind::sgd) {
      p -= opt.learning_rate * g;
    } else {
      v = opt.decay * v + (1.0 - opt.decay) * g.cwiseAbs2();
      p.array() -= opt.learning_rate * g.array() / (v.array().sqrt() + opt.eps);
    }
    loss = f(p, &g);
  }
  t.final_params = p;
  t.final_loss = loss;
  t.steps_taken = step;
  if (reference_loss) t.final_gap_sq = (loss - *reference_loss) * (loss - *reference_loss);
  return t;
}

enum class LossKind { vicreg, simclr, barlow_twins };

namespace detail {

// Squared or hinge VICReg with a precomputed sparse Laplacian; used by the
// trainers so each step costs O(nnz K + N K^2).
inline double vicreg_eval(const MatrixXd& z, const Eigen::SparseMatrix<double>& lap, const LossConfig& cfg,
                          MatrixXd* grad) {
  const double n = static_cast<double>(z.rows());
  const MatrixXd zc = center_columns(z);
  MatrixXd c = (zc.transpose() * zc) / n;
  c = 0.5 * (c + c.transpose());
  double var = 0.0;
  for (Index k = 0; k < c.rows(); ++k) {
    if (cfg.variance_mode == VarianceMode::hinge)
      var += std::max(0.0, 1.0 - std::sqrt(std::max(0.0, c(k, k))));
    else
      var += (1.0 - c(k, k)) * (1.0 - c(k, k));
  }
  const double cov = c.squaredNorm() - c.diagonal().squaredNorm();
  double inv = 0.0;
  MatrixXd lz;
  if (cfg.gamma != 0.0) {
    lz = lap * z;
    inv = 2.0 * (z.array() * lz.array()).sum();
  }
  if (grad) {
    *grad = (2.0 / n) * zc * vicreg_cov_grad(c, cfg);
    if (cfg.gamma != 0.0) *grad += (4.0 * cfg.gamma / n) * lz;
  }
  return cfg.alpha * var + cfg.beta * cov + cfg.gamma / n * inv;
}

}  // namespace detail

inline Objective vicreg_objective(const RelationGraph& g, const LossConfig& cfg) {
  cfg.validate();
  Laplacian l = laplacian(g);
  auto lap = std::make_shared<const Eigen::SparseMatrix<double>>(
      l.storage == Storage::dense ? Eigen::SparseMatrix<double>(l.dense.sparseView()) : l.sparse);
  return [cfg, lap](const MatrixXd& z, MatrixXd* grad) { return detail::vicreg_eval(z, *lap, cfg, grad); };
}

inline Objective simclr_objective(const RelationGraph& g, const SimclrVariant& v) {
  return [&g, v](const MatrixXd& z, MatrixXd* grad) { return simclr_variant_loss(z, g, v, grad); };
}

inline Objective barlow_twins_objective(const RelationGraph& g, const LossConfig& cfg) {
  cfg.validate();
  auto gs = std::make_shared<const Eigen::SparseMatrix<double>>(g.to_sparse());
  auto d = std::make_shared<const VectorXd>(degree(g));
  if (!(d->sum() > 0.0)) throw std::invalid_argument("barlow_twins_graph_loss: graph has no edges");
  return [cfg, gs, d](const MatrixXd& z, MatrixXd* grad) { return detail::bt_graph_eval(z, *gs, *d, cfg, grad); };
}

// Works in parameter space: Cov(XW) = W' Cov(X) W and Tr(W'X'LXW) are
// formed from D x D moments computed once.
inline Objective vicreg_linear_objective(const MatrixXd& x, const RelationGraph& g, const LossConfig& cfg) {
  cfg.validate();
  if (x.rows() != g.n()) throw std::invalid_argument("vicreg_linear_objective: shape mismatch");
  const double n = static_cast<double>(x.rows());
  auto sx = std::make_shared<const MatrixXd>(covariance(x));
  auto q = std::make_shared<MatrixXd>(x.transpose() * laplacian(g).apply(x));
  *q = 0.5 * (*q + q->transpose());
  return [cfg, n, sx, q](const MatrixXd& w, MatrixXd* grad) {
    const MatrixXd sw = (*sx) * w;
    MatrixXd c = w.transpose() * sw;
    c = 0.5 * (c + c.transpose());
    double var = 0.0;
    for (Index k = 0; k < c.rows(); ++k) {
      if (cfg.variance_mode == VarianceMode::hinge)
        var += std::max(0.0, 1.0 - std::sqrt(std::max(0.0, c(k, k))));
      else
        var += (1.0 - c(k, k)) * (1.0 - c(k, k));
    }
    const double cov = c.squaredNorm() - c.diagonal().squaredNorm();
    double inv = 0.0;
    MatrixXd qw;
    if (cfg.gamma != 0.0) {
      qw = (*q) * w;
      inv = 2.0 * (w.array() * qw.array()).sum();
    }
    if (grad) {
      *grad = 2.0 * sw * detail::vicreg_cov_grad(c, cfg);
      if (cfg.gamma != 0.0) *grad += (4.0 * cfg.gamma / n) * qw;
    }
    return cfg.alpha * var + cfg.beta * cov + cfg.gamma / n * inv;
  };
}

struct TrainSpec {
  LossKind kind = LossKind::vicreg;
  LossConfig loss;
  SimclrVariant simclr;
};

inline Trajectory train_embedding(const TrainSpec& spec, const RelationGraph& g, const MatrixXd& init_z,
                                  const OptimizerConfig& opt, std::optional<double> reference_loss = std::nullopt) {
  Objective f;
  switch (spec.kind) {
    case LossKind::vicreg: f = vicreg_objective(g, spec.loss); break;
    case LossKind::simclr: f = simclr_objective(g, spec.simclr); break;
    case LossKind::barlow_twins: f = barlow_twins_objective(g, spec.loss); break;
  }
  return minimize(f, init_z, opt, reference_loss);
}

inline Trajectory train_linear(const LossConfig& cfg, const MatrixXd& x, const RelationGraph& g,
                               const MatrixXd& init_w, const OptimizerConfig& opt,
                               std::optional<double> reference_loss = std::nullopt) {
  if (x.rows() != g.n() || init_w.rows() != x.cols()) throw std::invalid_argument("train_linear: shape mismatch");
  return minimize(vicreg_linear_objective(x, g, cfg), init_w, opt, reference_loss,
                  [&x](const MatrixXd& w) { return MatrixXd(x * w); });
}

inline MatrixXd gaussian_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

}  // namespace sslspec

#endif  // SSLSPEC_OPTIM_HPP
