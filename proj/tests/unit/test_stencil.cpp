#include "mfd/errors.hpp"
#include "mfd/stencil.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace {

using mfd::Operator;
using mfd::OperatorSpec;
using mfd::PointCloud;
using mfd::PointKind;
using mfd::Vec2;

// ===========================================================================
// Helpers
// ===========================================================================

PointCloud grid_cloud(int n, double h)
{
  PointCloud cloud;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      cloud.points.emplace_back(i * h, j * h);
      cloud.kinds.push_back(PointKind::Interior);
    }
  }
  cloud.n_interior = cloud.points.size();
  cloud.h = h;
  return cloud;
}

const PointCloud& paper_cloud()
{
  static const PointCloud cloud = mfd::generate(mfd::LevelSetDomain::paper(), 600, 7);
  return cloud;
}

/// Independent oracle: dense KKT system [[W^-1, V^T], [V, 0]] [a; mu] = [0; b].
Eigen::VectorXd kkt_weights(const Eigen::MatrixXd& V, const Eigen::VectorXd& b, const std::vector<double>& d, double beta)
{
  const Eigen::Index m = V.rows();
  const Eigen::Index n = V.cols();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = std::pow(d[static_cast<std::size_t>(j)], beta);
  }
  K.topRightCorner(n, m) = V.transpose();
  K.bottomLeftCorner(m, n) = V;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.tail(m) = b;
  return K.fullPivLu().solve(rhs).head(n);
}

/// Exact value of the operator applied to ((x - c)/s)^a ((y - c)/s)^b at c.
double exact_monomial(Operator op, int a, int b, double s)
{
  switch (op) {
    case Operator::Identity:
      return a == 0 && b == 0 ? 1.0 : 0.0;
    case Operator::Dx:
      return a == 1 && b == 0 ? 1.0 / s : 0.0;
    case Operator::Dy:
      return a == 0 && b == 1 ? 1.0 / s : 0.0;
    case Operator::Laplacian:
      return (a == 2 && b == 0) || (a == 0 && b == 2) ? 2.0 / (s * s) : 0.0;
  }
  return 0.0;
}

double row_scale(const mfd::StencilRow& row)
{
  double s = std::abs(row.diagonal);
  for (double w : row.weights) {
    s += std::abs(w);
  }
  return s;
}

// ===========================================================================
// Constraint systems
// ===========================================================================

TEST(ConstraintSystem, LaplacianOrderOne)
{
  const double h = 0.1;
  const std::vector<Vec2> nb{ { h, 0 }, { -h, 0 }, { 0, h }, { 0, -h } };
  const auto sys = mfd::constraint_system(Vec2::Zero(), nb, { Operator::Laplacian, 1 });
  ASSERT_EQ(sys.V.rows(), 5);
  ASSERT_EQ(sys.V.cols(), 4);
  Eigen::VectorXd b(5);
  b << 0, 0, 2, 0, 2;
  EXPECT_TRUE(sys.b.isApprox(b));
  Eigen::MatrixXd V(5, 4);
  V << h, -h, 0, 0,    //
    0, 0, h, -h,       //
    h * h, h * h, 0, 0, //
    0, 0, 0, 0,        //
    0, 0, h * h, h * h;
  EXPECT_LE((sys.V - V).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ConstraintSystem, DxOrderTwoAndIdentity)
{
  const std::vector<Vec2> nb{ { 1, 0 }, { 0, 1 }, { -1, 0 }, { 0, -1 }, { 1, 1 }, { -1, 1 } };
  const auto dx = mfd::constraint_system(Vec2::Zero(), nb, { Operator::Dx, 2 });
  ASSERT_EQ(dx.b.size(), 5);
  EXPECT_EQ(dx.b, (Eigen::VectorXd(5) << 1, 0, 0, 0, 0).finished());
  const auto id = mfd::constraint_system(Vec2::Zero(), nb, { Operator::Identity, 2 });
  ASSERT_EQ(id.b.size(), 6);
  EXPECT_EQ(id.b, (Eigen::VectorXd(6) << 1, 0, 0, 0, 0, 0).finished());
}

TEST(ConstraintSystem, CountsAndEmpty)
{
  EXPECT_EQ((OperatorSpec{ Operator::Laplacian, 2 }).constraint_count(), 9u);
  EXPECT_EQ((OperatorSpec{ Operator::Dx, 4 }).constraint_count(), 14u);
  EXPECT_EQ((OperatorSpec{ Operator::Identity, 2 }).constraint_count(), 6u);
  EXPECT_EQ(mfd::monomial_exponents(2, false),
            (std::vector<std::pair<int, int>>{ { 1, 0 }, { 0, 1 }, { 2, 0 }, { 1, 1 }, { 0, 2 } }));
  EXPECT_THROW(mfd::constraint_system(Vec2::Zero(), {}, { Operator::Dx, 1 }), mfd::InsufficientNeighbors);
}

// ===========================================================================
// WLSQ weights
// ===========================================================================

TEST(WlsqWeights, FivePointLaplacian)
{
  const double h = 0.1;
  const std::vector<Vec2> nb{ { h, 0 }, { -h, 0 }, { 0, h }, { 0, -h } };
  const auto sys = mfd::constraint_system(Vec2::Zero(), nb, { Operator::Laplacian, 1 });
  const std::vector<double> d(4, h);
  const Eigen::VectorXd a = mfd::wlsq_weights(sys.V, sys.b, d);
  for (Eigen::Index j = 0; j < 4; ++j) {
    EXPECT_NEAR(a(j), 100.0, 1e-10);
  }
  EXPECT_NEAR(-a.sum(), -400.0, 1e-9);
}

TEST(WlsqWeights, CentralDifferenceMatchesKkt)
{
  const double h = 0.5;
  const std::vector<Vec2> nb{ { h, 0 }, { 0, h }, { -h, 0 } };
  const auto sys = mfd::constraint_system(Vec2::Zero(), nb, { Operator::Dx, 1 });
  const std::vector<double> d(3, h);
  const Eigen::VectorXd a = mfd::wlsq_weights(sys.V, sys.b, d);
  const Eigen::VectorXd oracle = kkt_weights(sys.V, sys.b, d, 2.0);
  EXPECT_LE((a - oracle).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a(0), 1.0, 1e-12);
  EXPECT_NEAR(a(1), 0.0, 1e-12);
  EXPECT_NEAR(a(2), -1.0, 1e-12);
  EXPECT_NEAR(a.sum(), 0.0, 1e-12);
}

TEST(WlsqWeights, MatchesKktOnScatteredNeighbors)
{
  const PointCloud& cloud = paper_cloud();
  const auto nb = mfd::neighbors(cloud, 2.5, 14);
  for (const OperatorSpec spec : { OperatorSpec{ Operator::Laplacian, 2 }, OperatorSpec{ Operator::Dy, 2 } }) {
    for (std::size_t i = 0; i < cloud.n_interior; i += 37) {
      std::vector<Vec2> coords;
      std::vector<double> d;
      for (std::size_t j : nb.indices[i]) {
        coords.push_back(cloud.points[j]);
        d.push_back((cloud.points[j] - cloud.points[i]).norm());
      }
      const auto sys = mfd::constraint_system(cloud.points[i], coords, spec);
      const Eigen::VectorXd a = mfd::wlsq_weights(sys.V, sys.b, d);
      const Eigen::VectorXd oracle = kkt_weights(sys.V, sys.b, d, 2.0);
      EXPECT_LE((a - oracle).cwiseAbs().maxCoeff(), 1e-8 * oracle.cwiseAbs().maxCoeff());
    }
  }
}

TEST(WlsqWeights, ZeroRightHandSide)
{
  const std::vector<Vec2> nb{ { 1, 0 }, { 0, 1 }, { -1, 0.2 }, { 0.3, -1 } };
  auto sys = mfd::constraint_system(Vec2::Zero(), nb, { Operator::Dx, 1 });
  sys.b.setZero();
  const std::vector<double> d{ 1.0, 1.0, std::hypot(1.0, 0.2), std::hypot(0.3, 1.0) };
  EXPECT_EQ(mfd::wlsq_weights(sys.V, sys.b, d), Eigen::VectorXd::Zero(4));
}

TEST(WlsqWeights, InconsistentConstraintsThrow)
{
  // Collinear neighbors cannot produce a y-derivative.
  const std::vector<Vec2> nb{ { 1, 0 }, { -1, 0 }, { 2, 0 } };
  const auto sys = mfd::constraint_system(Vec2::Zero(), nb, { Operator::Dy, 1 });
  EXPECT_THROW(mfd::wlsq_weights(sys.V, sys.b, std::vector<double>{ 1, 1, 2 }), mfd::SingularConstraints);
}

// ===========================================================================
// Grid equivalence
// ===========================================================================

TEST(GridEquivalence, ClassicalStencils)
{
  const double h = 0.05;
  const PointCloud cloud = grid_cloud(5, h);
  mfd::Neighborhood axial;
  axial.indices.resize(cloud.size());
  axial.radius.assign(cloud.size(), 1.01 * h);
  const std::size_t c = 12;
  axial.indices[c] = { 13, 11, 17, 7 }; // right, left, up, down
  const std::vector<std::size_t> target{ c };

  const auto lap = mfd::operator_weights(cloud, axial, { Operator::Laplacian, 1 }, target);
  const double L = 1.0 / (h * h);
  for (double w : lap.rows[0].weights) {
    EXPECT_LE(std::abs(w - L), 1e-12 * L);
  }
  EXPECT_LE(std::abs(lap.rows[0].diagonal + 4.0 * L), 1e-12 * L);

  const double D = 1.0 / (2.0 * h);
  for (int order : { 1, 2 }) {
    const auto dx = mfd::operator_weights(cloud, axial, { Operator::Dx, order }, target);
    const auto dy = mfd::operator_weights(cloud, axial, { Operator::Dy, order }, target);
    const std::vector<double> ex{ D, -D, 0.0, 0.0 };
    const std::vector<double> ey{ 0.0, 0.0, D, -D };
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_LE(std::abs(dx.rows[0].weights[k] - ex[k]), 1e-12 * D);
      EXPECT_LE(std::abs(dy.rows[0].weights[k] - ey[k]), 1e-12 * D);
    }
    EXPECT_LE(std::abs(dx.rows[0].diagonal), 1e-12 * D);
    EXPECT_LE(std::abs(dy.rows[0].diagonal), 1e-12 * D);
  }
}

// ===========================================================================
// Polynomial exactness, closure and covariance on scattered clouds
// ===========================================================================

class EveryOperator : public ::testing::TestWithParam<std::tuple<Operator, int>> {};

TEST_P(EveryOperator, PolynomialExactness)
{
  const auto [op, order] = GetParam();
  const OperatorSpec spec{ op, order };
  const PointCloud& cloud = paper_cloud();
  const auto targets = mfd::all_indices(cloud);
  const auto set = mfd::operator_weights(cloud, spec, targets);
  ASSERT_EQ(set.size(), cloud.size());
  const double s = cloud.h;
  double worst = 0.0;
  for (const auto& row : set.rows) {
    const Vec2& c = cloud.points[row.center];
    const double scale = row_scale(row);
    for (int deg = 0; deg <= spec.degree(); ++deg) {
      for (int a = deg; a >= 0; --a) {
        const int b = deg - a;
        auto m = [&](const Vec2& x) {
          return std::pow((x.x() - c.x()) / s, a) * std::pow((x.y() - c.y()) / s, b);
        };
        double value = row.diagonal * m(c);
        double mag = 0.0;
        for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
          const double mk = m(cloud.points[row.neighbors[k]]);
          value += row.weights[k] * mk;
          mag = std::max(mag, std::abs(mk));
        }
        worst = std::max(worst, std::abs(value - exact_monomial(op, a, b, s)) / (scale * std::max(1.0, mag)));
      }
    }
  }
  EXPECT_LE(worst, 1e-9);
}

TEST_P(EveryOperator, ScalingCovariance)
{
  const auto [op, order] = GetParam();
  const OperatorSpec spec{ op, order };
  const PointCloud& cloud = paper_cloud();
  const double s = 3.7;
  const Vec2 shift(-2.0, 5.0);
  PointCloud scaled = cloud;
  for (auto& p : scaled.points) {
    p = s * p + shift;
  }
  scaled.h *= s;
  const auto targets = mfd::all_indices(cloud);
  const auto base = mfd::operator_weights(cloud, spec, targets);
  const auto moved = mfd::operator_weights(scaled, spec, targets);
  const double factor = std::pow(s, -spec.differential_order());
  double worst = 0.0;
  for (std::size_t r = 0; r < base.size(); ++r) {
    ASSERT_EQ(base.rows[r].neighbors, moved.rows[r].neighbors);
    const double scale = row_scale(base.rows[r]);
    worst = std::max(worst, std::abs(moved.rows[r].diagonal - factor * base.rows[r].diagonal) / (factor * scale));
    for (std::size_t k = 0; k < base.rows[r].weights.size(); ++k) {
      worst = std::max(worst,
                       std::abs(moved.rows[r].weights[k] - factor * base.rows[r].weights[k]) / (factor * scale));
    }
  }
  EXPECT_LE(worst, 1e-9);
}

TEST_P(EveryOperator, ClosureSums)
{
  const auto [op, order] = GetParam();
  const PointCloud& cloud = paper_cloud();
  const auto set = mfd::operator_weights(cloud, { op, order }, mfd::all_indices(cloud));
  for (const auto& row : set.rows) {
    const double sum = row.diagonal + std::accumulate(row.weights.begin(), row.weights.end(), 0.0);
    EXPECT_NEAR(sum, op == Operator::Identity ? 1.0 : 0.0, 1e-9 * row_scale(row));
  }
}

INSTANTIATE_TEST_SUITE_P(Stencil,
                         EveryOperator,
                         ::testing::Combine(::testing::Values(Operator::Laplacian,
                                                              Operator::Dx,
                                                              Operator::Dy,
                                                              Operator::Identity),
                                            ::testing::Values(1, 2, 3, 4)));

// ===========================================================================
// Application
// ===========================================================================

TEST(Apply, LaplacianOfQuadratic)
{
  const PointCloud& cloud = paper_cloud();
  const auto lap = mfd::operator_weights(cloud, { Operator::Laplacian, 2 }, mfd::interior_indices(cloud));
  std::vector<double> field(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    field[i] = cloud.points[i].squaredNorm();
  }
  const auto out = mfd::apply(lap, field);
  for (std::size_t r = 0; r < out.size(); ++r) {
    EXPECT_NEAR(out[r], 4.0, 1e-9 * row_scale(lap.rows[r]));
  }
}

TEST(Apply, DerivativeOfConstantAndSizeCheck)
{
  const PointCloud& cloud = paper_cloud();
  const auto dx = mfd::operator_weights(cloud, { Operator::Dx, 2 }, mfd::all_indices(cloud));
  const std::vector<double> c(cloud.size(), 3.5);
  for (double v : mfd::apply(dx, c)) {
    EXPECT_NEAR(v, 0.0, 1e-9);
  }
  EXPECT_THROW(mfd::apply(dx, std::vector<double>(3)), mfd::SizeMismatch);
}

TEST(Apply, EmptyTargets)
{
  const auto set = mfd::operator_weights(paper_cloud(), { Operator::Dx, 2 }, std::vector<std::size_t>{});
  EXPECT_EQ(set.size(), 0u);
}

TEST(EvaluationWeights, ReproducesQuadraticsOffCloud)
{
  const PointCloud& cloud = paper_cloud();
  auto q = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - x.x() * x.y() + 3.0 * x.y() * x.y(); };
  for (const Vec2& at : { Vec2(0.5, 0.5), Vec2(0.123, 0.321), Vec2(0.5, 0.97) }) {
    const auto row = mfd::evaluation_weights(cloud, at, 2);
    double value = 0.0;
    for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
      value += row.weights[k] * q(cloud.points[row.neighbors[k]]);
    }
    EXPECT_NEAR(value, q(at), 1e-9);
  }
}

TEST(MlsExtrapolation, ConstantAndQuadratic)
{
  const PointCloud& cloud = paper_cloud();
  const auto targets = mfd::boundary_indices(cloud);
  auto q = [](const Vec2& x) { return 1.0 + 2.0 * x.x() + 3.0 * x.y() * x.y(); };
  std::vector<double> constant(cloud.n_interior, 2.5);
  std::vector<double> quadratic(cloud.n_interior);
  for (std::size_t i = 0; i < cloud.n_interior; ++i) {
    quadratic[i] = q(cloud.points[i]);
  }
  const auto ext = mfd::mls_extrapolation_weights(cloud, targets);
  const auto c_out = mfd::mls_extrapolate(ext, cloud, constant);
  const auto q_out = mfd::mls_extrapolate(ext, cloud, quadratic);
  ASSERT_EQ(q_out.size(), targets.size());
  for (std::size_t b = 0; b < targets.size(); ++b) {
    EXPECT_NEAR(c_out[b], 2.5, 1e-9);
    EXPECT_NEAR(q_out[b], q(cloud.points[targets[b]]), 1e-9 * 5.0);
    for (std::size_t j : ext.rows[b].neighbors) {
      EXPECT_LT(j, cloud.n_interior);
    }
  }
}

TEST(BuildOperators, ShapesOfBundle)
{
  const PointCloud& cloud = paper_cloud();
  const auto ops = mfd::build_operators(cloud, 2);
  EXPECT_EQ(ops.laplacian.size(), cloud.n_interior);
  EXPECT_EQ(ops.dx.size(), cloud.size());
  EXPECT_EQ(ops.dy.size(), cloud.size());
  EXPECT_EQ(ops.extrapolation.targets.size(), cloud.n_boundary);
}

} // namespace
