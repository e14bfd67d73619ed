#include <gtest/gtest.h>

#include <sslspec/graph.hpp>
#include <sslspec/optim.hpp>

#include <random>

using namespace sslspec;

namespace {

MatrixXd random_weights(Index n, std::uint64_t seed, double density = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd w = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (u(rng) < density) w(i, j) = w(j, i) = u(rng);
  return w;
}

double brute_pair_sum(const MatrixXd& z, const MatrixXd& g) {
  double s = 0.0;
  for (Index i = 0; i < z.rows(); ++i)
    for (Index j = 0; j < z.rows(); ++j) s += g(i, j) * (z.row(i) - z.row(j)).squaredNorm();
  return s;
}

}  // namespace

TEST(ViewGraph, TwoBaseTwoViews) {
  const MatrixXd g = build_view_graph(2, 2).to_dense();
  MatrixXd expect = MatrixXd::Zero(4, 4);
  expect(0, 2) = expect(2, 0) = 1.0;
  expect(1, 3) = expect(3, 1) = 1.0;
  EXPECT_EQ(g, expect);
}

TEST(ViewGraph, ThreeViewsOfOneSampleIsTriangle) {
  const MatrixXd g = build_view_graph(1, 3).to_dense();
  EXPECT_EQ(g, MatrixXd::Ones(3, 3) - MatrixXd::Identity(3, 3));
}

TEST(ViewGraph, PairGraphDegreesAreOne) {
  const VectorXd d = degree(build_view_graph(5, 2));
  EXPECT_EQ(d, VectorXd::Ones(10));
}

TEST(ViewGraph, RejectsSingleView) {
  EXPECT_THROW(build_view_graph(3, 1), std::invalid_argument);
  EXPECT_THROW(build_view_graph(0, 2), std::invalid_argument);
}

TEST(ViewGraph, StructuralProperties) {
  for (Index nb : {1, 3, 7})
    for (Index v : {2, 3, 5}) {
      const RelationGraph g = build_view_graph(nb, v);
      const MatrixXd m = g.to_dense();
      EXPECT_EQ(m, m.transpose());
      EXPECT_TRUE(g.is_binary());
      EXPECT_EQ(m.diagonal(), VectorXd::Zero(nb * v));
      EXPECT_EQ(degree(g), VectorXd::Constant(nb * v, static_cast<double>(v - 1)));
    }
}

TEST(SupervisedGraph, SmallExample) {
  MatrixXd expect(3, 3);
  expect << 0, 1, 0, 1, 0, 0, 0, 0, 0;
  EXPECT_EQ(build_supervised_graph({0, 0, 1}).to_dense(), expect);
}

TEST(SupervisedGraph, DistinctAndEqualLabels) {
  EXPECT_EQ(build_supervised_graph({0, 1, 2, 3}).to_dense(), MatrixXd::Zero(4, 4));
  EXPECT_EQ(build_supervised_graph({5, 5, 5, 5}).to_dense(), MatrixXd::Ones(4, 4) - MatrixXd::Identity(4, 4));
}

TEST(Degree, Examples) {
  EXPECT_EQ(degree(RelationGraph(MatrixXd::Zero(3, 3))), VectorXd::Zero(3));
  EXPECT_EQ(degree(build_view_graph(2, 2)), VectorXd::Ones(4));
  VectorXd expect(5);
  expect << 2, 2, 2, 1, 1;
  EXPECT_EQ(degree(build_supervised_graph({0, 0, 0, 1, 1})), expect);
}

TEST(Degree, DenseAndTripletStorageAgreeBitwise) {
  const MatrixXd w = random_weights(40, 3);
  std::vector<Edge> edges;
  for (Index i = 0; i < 40; ++i)
    for (Index j = i + 1; j < 40; ++j)
      if (w(i, j) != 0.0) edges.push_back({i, j, w(i, j)});
  const RelationGraph dense = RelationGraph::from_edges(40, edges, Storage::dense);
  const RelationGraph trip = RelationGraph::from_edges(40, edges, Storage::triplets);
  ASSERT_TRUE(dense.is_dense());
  ASSERT_FALSE(trip.is_dense());
  const VectorXd a = degree(dense), b = degree(trip);
  for (Index i = 0; i < 40; ++i) EXPECT_EQ(a(i), b(i));
  EXPECT_EQ(laplacian(dense).to_dense(), laplacian(trip).to_dense());
}

TEST(RelationGraph, ValidatesInput) {
  MatrixXd diag = MatrixXd::Zero(2, 2);
  diag(0, 0) = 1.0;
  EXPECT_THROW(RelationGraph{diag}, std::invalid_argument);
  MatrixXd neg = MatrixXd::Zero(2, 2);
  neg(0, 1) = neg(1, 0) = -1.0;
  EXPECT_THROW(RelationGraph{neg}, std::invalid_argument);
  MatrixXd asym = MatrixXd::Zero(2, 2);
  asym(0, 1) = 1.0;
  EXPECT_THROW(RelationGraph{asym}, std::invalid_argument);
  EXPECT_THROW(RelationGraph::from_edges(3, {{0, 1, 1.0}, {1, 0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(RelationGraph::from_edges(3, {{0, 3, 1.0}}), std::invalid_argument);
}

TEST(RelationGraph, LargeGraphsUseTriplets) {
  const RelationGraph g = build_view_graph(2100, 2);
  EXPECT_EQ(g.n(), 4200);
  EXPECT_FALSE(g.is_dense());
  EXPECT_EQ(g.nnz(), 4200);
  EXPECT_EQ(degree(g), VectorXd::Ones(4200));
}

TEST(Laplacian, Examples) {
  EXPECT_EQ(laplacian(RelationGraph(MatrixXd::Zero(3, 3))).to_dense(), MatrixXd::Zero(3, 3));
  MatrixXd expect(2, 2);
  expect << 1, -1, -1, 1;
  EXPECT_EQ(laplacian(build_view_graph(1, 2)).to_dense(), expect);
}

TEST(Laplacian, RowSumsZeroAndPsd) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Index n = 4 + static_cast<Index>(s);
    const RelationGraph g(random_weights(n, s));
    const MatrixXd l = laplacian(g).to_dense();
    EXPECT_LE(l.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10 * n);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(l).eigenvalues().minCoeff(), -1e-8);
    for (int t = 0; t < 100; ++t) {
      const VectorXd z = gaussian_matrix(n, 1, 1000 * s + t);
      EXPECT_GE(z.dot(l * z), -1e-12);
    }
  }
}

TEST(Dirichlet, ConstantRowsAndEmptyGraph) {
  const RelationGraph g(random_weights(6, 1));
  const MatrixXd z = MatrixXd::Ones(6, 3) * 2.5;
  EXPECT_NEAR(dirichlet_energy(z, laplacian(g)), 0.0, 1e-12);
  EXPECT_EQ(dirichlet_energy(gaussian_matrix(6, 3, 2), RelationGraph(MatrixXd::Zero(6, 6))), 0.0);
}

TEST(Dirichlet, MatchesBruteForceHalfSum) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Index n = 2 + static_cast<Index>(s % 15);
    const MatrixXd w = random_weights(n, s + 50);
    const RelationGraph g(w);
    const MatrixXd z = gaussian_matrix(n, 3, s);
    const double brute = brute_pair_sum(z, w);
    const double scale = std::max(1.0, brute);
    EXPECT_NEAR(2.0 * dirichlet_energy(z, laplacian(g)), brute, 1e-10 * scale);
    EXPECT_NEAR(2.0 * dirichlet_energy(z, g), brute, 1e-10 * scale);
  }
}

TEST(Dirichlet, ShapeMismatchThrows) {
  const RelationGraph g = build_view_graph(2, 2);
  EXPECT_THROW(dirichlet_energy(MatrixXd::Zero(3, 2), laplacian(g)), std::invalid_argument);
}

TEST(RowNormalize, Examples) {
  EXPECT_EQ(row_normalize(build_view_graph(3, 2)), build_view_graph(3, 2).to_dense());
  const MatrixXd k3 = row_normalize(build_view_graph(1, 3));
  EXPECT_EQ(k3, 0.5 * (MatrixXd::Ones(3, 3) - MatrixXd::Identity(3, 3)));
  EXPECT_THROW(row_normalize(build_supervised_graph({0, 0, 1})), std::domain_error);
}

TEST(RowNormalize, RowsSumToOne) {
  MatrixXd w = random_weights(9, 4, 1.0);
  const MatrixXd r = row_normalize(RelationGraph(w));
  EXPECT_LE((r.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
  EXPECT_EQ(r.diagonal(), VectorXd::Zero(9));
}

TEST(PairExpand, FiveSampleExample) {
  // classes {a, b, c} and {d, e}
  const RelationGraph g = build_supervised_graph({0, 0, 0, 1, 1});
  MatrixXd x(5, 1);
  x << 0, 1, 2, 3, 4;
  const auto [left, right] = pair_expand(g, x);
  VectorXd l(8), r(8);
  l << 0, 0, 1, 1, 2, 2, 3, 4;
  r << 1, 2, 0, 2, 0, 1, 4, 3;
  EXPECT_EQ(left.col(0), l);
  EXPECT_EQ(right.col(0), r);
}

TEST(PairExpand, EmptyAndPairGraphs) {
  const auto [l0, r0] = pair_expand(RelationGraph(MatrixXd::Zero(3, 3)), MatrixXd::Ones(3, 2));
  EXPECT_EQ(l0.rows(), 0);
  EXPECT_EQ(r0.rows(), 0);
  MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  const auto [l, r] = pair_expand(build_view_graph(2, 2), x);
  VectorXd el(4), er(4);
  el << 0, 1, 2, 3;
  er << 2, 3, 0, 1;
  EXPECT_EQ(l.col(0), el);
  EXPECT_EQ(r.col(0), er);
}

TEST(PairExpand, RejectsWeightedGraphs) {
  EXPECT_THROW(pair_expand(RelationGraph(random_weights(4, 1, 1.0)), MatrixXd::Zero(4, 1)), std::invalid_argument);
}

TEST(PairExpand, PairDistancesReproduceInvarianceSum) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) labels.push_back(static_cast<int>((i * 7 + s) % 4));
    const RelationGraph g = build_supervised_graph(labels);
    const MatrixXd x = gaussian_matrix(12, 3, s);
    const auto [l, r] = pair_expand(g, x);
    const double brute = brute_pair_sum(x, g.to_dense());
    EXPECT_NEAR((l - r).squaredNorm(), brute, 1e-10 * brute);
  }
}
