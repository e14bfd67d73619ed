#include <gtest/gtest.h>

#include <sslspec/closed_form.hpp>
#include <sslspec/losses.hpp>
#include <sslspec/optim.hpp>

#include <cmath>

using namespace sslspec;

namespace {

// Triple-loop VICReg.
double naive_vicreg(const MatrixXd& z, const MatrixXd& g, const LossConfig& c) {
  const Index n = z.rows(), k = z.cols();
  std::vector<double> mean(static_cast<std::size_t>(k), 0.0);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < n; ++i) mean[j] += z(i, j) / n;
  double var = 0.0, cov = 0.0, inv = 0.0;
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) {
      double s = 0.0;
      for (Index i = 0; i < n; ++i) s += (z(i, a) - mean[a]) * (z(i, b) - mean[b]);
      s /= n;
      if (a == b)
        var += c.variance_mode == VarianceMode::hinge ? std::max(0.0, 1.0 - std::sqrt(s)) : (1.0 - s) * (1.0 - s);
      else
        cov += s * s;
    }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index a = 0; a < k; ++a) inv += g(i, j) * (z(i, a) - z(j, a)) * (z(i, a) - z(j, a));
  return c.alpha * var + c.beta * cov + c.gamma / n * inv;
}

// log-sum-exp form of the contrastive cross-entropy, one row at a time.
double naive_infonce(const MatrixXd& g, const MatrixXd& z, double tau) {
  const Index n = z.rows();
  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    double deg = 0.0;
    for (Index j = 0; j < n; ++j) deg += g(i, j);
    std::vector<double> logit(static_cast<std::size_t>(n));
    double mx = -1e300;
    for (Index j = 0; j < n; ++j) {
      logit[j] = z.row(i).dot(z.row(j)) / (z.row(i).norm() * z.row(j).norm()) / tau;
      if (j != i) mx = std::max(mx, logit[j]);
    }
    double lse = 0.0;
    for (Index j = 0; j < n; ++j)
      if (j != i) lse += std::exp(logit[j] - mx);
    lse = mx + std::log(lse);
    for (Index j = 0; j < n; ++j)
      if (g(i, j) != 0.0) loss -= g(i, j) / deg * (logit[j] - lse);
  }
  return loss;
}

MatrixXd pair_graph_dense(Index n_base) { return build_view_graph(n_base, 2).to_dense(); }

}  // namespace

TEST(Covariance, Examples) {
  MatrixXd z(2, 1);
  z << 1, -1;
  EXPECT_DOUBLE_EQ(covariance(z)(0, 0), 1.0);
  EXPECT_EQ(covariance(MatrixXd::Constant(5, 3, 2.0)), MatrixXd::Zero(3, 3));
  EXPECT_THROW(covariance(MatrixXd(0, 2)), std::invalid_argument);
}

TEST(Covariance, MatchesOuterProductAverage) {
  const MatrixXd z = gaussian_matrix(8, 3, 11);
  const VectorXd mu = z.colwise().mean().transpose();
  MatrixXd c = MatrixXd::Zero(3, 3);
  for (Index i = 0; i < 8; ++i) {
    const VectorXd d = z.row(i).transpose() - mu;
    c += d * d.transpose() / 8.0;
  }
  EXPECT_LE((covariance(z) - c).norm(), 1e-14);
}

TEST(Vicreg, UnitVarianceNoEdgesIsZero) {
  MatrixXd z(2, 1);
  z << 1, -1;
  LossConfig cfg;
  EXPECT_DOUBLE_EQ(vicreg_loss(z, RelationGraph(MatrixXd::Zero(2, 2)), cfg), 0.0);
}

TEST(Vicreg, OptimumReproducesPredictedMinimum) {
  const RelationGraph g = build_supervised_graph({0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 3, 3});
  for (double gamma : {0.0, 0.05, 0.3}) {
    const VicregOptimum o = vicreg_optimal(g, 1.5, gamma, 5);
    LossConfig cfg;
    cfg.alpha = cfg.beta = 1.5;
    cfg.gamma = gamma;
    cfg.variance_mode = VarianceMode::squared;
    double lam = 0.0;
    for (Index k = 0; k < 5; ++k) lam += std::pow(std::max(o.spectrum.values(k), 0.0), 2);
    const double predicted = 1.5 * (5.0 - lam);
    EXPECT_NEAR(vicreg_loss(o.z_star, g, cfg), predicted, 1e-8 * std::max(1.0, predicted));
  }
}

TEST(Vicreg, MatchesTripleLoopOracle) {
  const MatrixXd g = pair_graph_dense(5);
  for (VarianceMode mode : {VarianceMode::hinge, VarianceMode::squared}) {
    LossConfig cfg;
    cfg.alpha = 0.7;
    cfg.beta = 1.3;
    cfg.gamma = 0.4;
    cfg.variance_mode = mode;
    const MatrixXd z = gaussian_matrix(10, 4, 3, 0.8);
    const double o = naive_vicreg(z, g, cfg);
    EXPECT_NEAR(vicreg_loss(z, RelationGraph(g), cfg), o, 1e-12 * o);
  }
}

TEST(Vicreg, TermsInvarianceEqualsTwiceDirichlet) {
  const RelationGraph g = build_supervised_graph({0, 1, 0, 1, 2, 2});
  const MatrixXd z = gaussian_matrix(6, 3, 9);
  LossConfig cfg;
  const VicregTerms t = vicreg_terms(z, g, cfg);
  EXPECT_NEAR(t.invariance, 2.0 * dirichlet_energy(z, laplacian(g)), 1e-12);
}

TEST(Vicreg, ShapeMismatch) {
  EXPECT_THROW(vicreg_loss(MatrixXd::Zero(3, 2), build_view_graph(2, 2), LossConfig{}), std::invalid_argument);
}

TEST(Vicreg, TranslationInvariant) {
  const RelationGraph g = build_supervised_graph({0, 0, 1, 1, 1, 2, 2, 0});
  for (VarianceMode mode : {VarianceMode::hinge, VarianceMode::squared}) {
    LossConfig cfg;
    cfg.gamma = 0.3;
    cfg.variance_mode = mode;
    const MatrixXd z = gaussian_matrix(8, 3, 4);
    const Eigen::RowVectorXd shift = gaussian_matrix(1, 3, 5, 10.0).row(0);
    const MatrixXd zs = z.rowwise() + shift;
    EXPECT_NEAR(vicreg_loss(z, g, cfg), vicreg_loss(zs, g, cfg), 1e-10);
  }
}

TEST(Vicreg, OrthogonalInvarianceSquaredEqualWeights) {
  const RelationGraph g = build_supervised_graph({0, 0, 1, 1, 2, 2, 3, 3, 3});
  LossConfig cfg;
  cfg.gamma = 0.2;
  cfg.variance_mode = VarianceMode::squared;
  const MatrixXd z = gaussian_matrix(9, 4, 6);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(gaussian_matrix(4, 4, 100 + s)).householderQ();
    EXPECT_NEAR(vicreg_loss(z * q, g, cfg), vicreg_loss(z, g, cfg), 1e-10);
  }
}

TEST(Vicreg, SquaredZeroImpliesHingeZero) {
  // whitened columns give zero squared variance and zero covariance
  MatrixXd z = center_columns(gaussian_matrix(50, 3, 8));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(covariance(z));
  z = z * es.operatorInverseSqrt();
  const RelationGraph g(MatrixXd::Zero(50, 50));
  LossConfig sq, hi;
  sq.variance_mode = VarianceMode::squared;
  ASSERT_NEAR(vicreg_loss(z, g, sq), 0.0, 1e-20);
  EXPECT_NEAR(vicreg_loss(z, g, hi), 0.0, 1e-12);
}

TEST(Vicreg, HingeNotBoundedBySquaredInGeneral) {
  // variance 1/2: hinge 1 - sqrt(1/2) exceeds (1 - 1/2)^2
  MatrixXd z(2, 1);
  z << std::sqrt(0.5), -std::sqrt(0.5);
  const RelationGraph g(MatrixXd::Zero(2, 2));
  LossConfig hi, sq;
  sq.variance_mode = VarianceMode::squared;
  EXPECT_NEAR(vicreg_loss(z, g, hi), 1.0 - std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(vicreg_loss(z, g, sq), 0.25, 1e-12);
  EXPECT_GT(vicreg_loss(z, g, hi), vicreg_loss(z, g, sq));
}

TEST(SimclrEstimate, TwoRowsGiveOne) {
  const MatrixXd e = simclr_estimate(gaussian_matrix(2, 3, 1), 0.5, Metric::cosine);
  EXPECT_DOUBLE_EQ(e(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(e(1, 0), 1.0);
  EXPECT_EQ(e(0, 0), 0.0);
}

TEST(SimclrEstimate, IdenticalRowsUniform) {
  const MatrixXd z = MatrixXd::Ones(5, 1) * gaussian_matrix(1, 3, 2);
  const MatrixXd e = simclr_estimate(z, 0.3, Metric::cosine);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) EXPECT_NEAR(e(i, j), i == j ? 0.0 : 0.25, 1e-15);
}

TEST(SimclrEstimate, MatchesLogSumExpOracle) {
  const MatrixXd z = gaussian_matrix(5, 3, 3);
  const double tau = 0.5;
  for (Metric m : {Metric::cosine, Metric::l2}) {
    const MatrixXd e = simclr_estimate(z, tau, m);
    for (Index i = 0; i < 5; ++i) {
      std::vector<double> s(5);
      double mx = -1e300;
      for (Index j = 0; j < 5; ++j) {
        s[j] = m == Metric::cosine ? z.row(i).dot(z.row(j)) / (z.row(i).norm() * z.row(j).norm()) / tau
                                   : -(z.row(i) - z.row(j)).squaredNorm() / tau;
        if (j != i) mx = std::max(mx, s[j]);
      }
      double lse = 0.0;
      for (Index j = 0; j < 5; ++j)
        if (j != i) lse += std::exp(s[j] - mx);
      for (Index j = 0; j < 5; ++j) {
        if (j != i) {
          EXPECT_NEAR(e(i, j), std::exp(s[j] - mx) / lse, 1e-14);
        }
      }
    }
  }
}

TEST(SimclrEstimate, RowStochasticProperties) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const MatrixXd e = simclr_estimate(gaussian_matrix(7, 4, s), 0.2 + 0.1 * s, Metric::cosine);
    EXPECT_LE((e.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    for (Index i = 0; i < 7; ++i)
      for (Index j = 0; j < 7; ++j) {
        if (i == j) {
          EXPECT_EQ(e(i, j), 0.0);
        } else {
          EXPECT_GT(e(i, j), 0.0);
          EXPECT_LT(e(i, j), 1.0);
        }
      }
  }
}

TEST(SimclrEstimate, ZeroRowGuardedAndErrors) {
  MatrixXd z = gaussian_matrix(4, 2, 1);
  z.row(1).setZero();
  const MatrixXd e = simclr_estimate(z, 0.5, Metric::cosine);
  EXPECT_TRUE(e.allFinite());
  EXPECT_THROW(simclr_estimate(MatrixXd::Ones(1, 2), 0.5, Metric::cosine), std::invalid_argument);
  EXPECT_THROW(simclr_estimate(z, 0.0, Metric::cosine), std::invalid_argument);
}

TEST(Infonce, PairOfTwoIsZero) {
  LossConfig cfg;
  EXPECT_NEAR(infonce_loss(build_view_graph(1, 2), gaussian_matrix(2, 3, 4), cfg), 0.0, 1e-15);
}

TEST(Infonce, MatchesNaiveListing) {
  const MatrixXd g = build_supervised_graph({0, 0, 1, 1, 1, 2, 2}).to_dense();
  const MatrixXd z = gaussian_matrix(7, 3, 5);
  LossConfig cfg;
  cfg.tau = 0.4;
  EXPECT_NEAR(infonce_loss(RelationGraph(g), z, cfg), naive_infonce(g, z, 0.4), 1e-12);
}

TEST(Infonce, IsolatedNodeErrors) {
  LossConfig cfg;
  EXPECT_THROW(infonce_loss(build_supervised_graph({0, 0, 1}), gaussian_matrix(3, 2, 1), cfg), std::domain_error);
}

TEST(Infonce, GibbsLowerBound) {
  const RelationGraph g = build_supervised_graph({0, 0, 1, 1, 1, 2, 2, 0});
  const double h = row_entropy(row_normalize(g));
  for (std::uint64_t s = 0; s < 20; ++s) {
    LossConfig cfg;
    cfg.tau = 0.3;
    EXPECT_GE(infonce_loss(g, gaussian_matrix(8, 3, s), cfg), h - 1e-12);
  }
  // equality when the estimate matches on the support
  const MatrixXd gb = row_normalize(g);
  EXPECT_NEAR(cross_entropy(gb, gb), h, 1e-14);
}

TEST(CrossEntropy, ZeroTimesLogZero) {
  MatrixXd t(1, 2), e(1, 2);
  t << 1.0, 0.0;
  e << 0.5, 0.0;
  EXPECT_NEAR(cross_entropy(t, e), std::log(2.0), 1e-15);
}

TEST(EuclideanMatch, Examples) {
  const RelationGraph g = build_supervised_graph({0, 0, 1, 1, 1});
  EXPECT_EQ(euclidean_match_loss(g, g.to_dense()), 0.0);
  EXPECT_EQ(euclidean_match_loss(g, MatrixXd::Zero(5, 5)), g.to_dense().squaredNorm());
  const MatrixXd a = gaussian_matrix(4, 4, 1), b = gaussian_matrix(4, 4, 2);
  double s = 0.0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  EXPECT_NEAR(euclidean_match_loss(a, b), s, 1e-13);
  EXPECT_THROW(euclidean_match_loss(a, MatrixXd::Zero(3, 3)), std::invalid_argument);
}

TEST(BarlowTwins, WhitenedMatchedPairIsZero) {
  MatrixXd z = center_columns(gaussian_matrix(40, 3, 1));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(z.transpose() * z);
  z = z * es.operatorInverseSqrt();  // unit-norm, mutually orthogonal columns
  LossConfig cfg;
  EXPECT_NEAR(barlow_twins_loss(z, z, cfg), 0.0, 1e-20 + 1e-10);
}

TEST(BarlowTwins, SignFlipGivesFourK) {
  const MatrixXd z = gaussian_matrix(30, 4, 2);
  LossConfig cfg;
  cfg.alpha_bt = 0.0;
  EXPECT_NEAR(barlow_twins_loss(z, -z, cfg), 16.0, 1e-9);
}

TEST(BarlowTwins, MatchesPerEntryCosineOracle) {
  const MatrixXd a = gaussian_matrix(12, 3, 3), b = gaussian_matrix(12, 3, 4);
  LossConfig cfg;
  cfg.alpha_bt = 0.3;
  double loss = 0.0;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      const VectorXd u = a.col(i).array() - a.col(i).mean(), v = b.col(j).array() - b.col(j).mean();
      const double c = u.dot(v) / (u.norm() * v.norm() + cfg.eps);
      loss += i == j ? (c - 1.0) * (c - 1.0) : cfg.alpha_bt * c * c;
    }
  EXPECT_NEAR(barlow_twins_loss(a, b, cfg), loss, 1e-13);
}

TEST(BarlowTwins, ShapeMismatchAndZeroColumns) {
  LossConfig cfg;
  EXPECT_THROW(barlow_twins_loss(MatrixXd::Zero(4, 2), MatrixXd::Zero(4, 3), cfg), std::invalid_argument);
  EXPECT_TRUE(std::isfinite(barlow_twins_loss(MatrixXd::Zero(4, 2), MatrixXd::Zero(4, 2), cfg)));
}

TEST(LossConfig, Validation) {
  LossConfig c;
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = LossConfig{};
  c.eps = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = LossConfig{};
  c.gamma = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
