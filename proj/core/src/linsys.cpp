#include "mfd/linsys.hpp"

#include "mfd/errors.hpp"

#include <cmath>
#include <ostream>
#include <random>

namespace mfd {

namespace {

void check_sizes(const PointCloud& cloud, const OperatorBundle& ops)
{
  if (ops.laplacian.size() != cloud.n_interior || ops.dx.size() != cloud.size() || ops.dy.size() != cloud.size()) {
    throw SizeMismatch("operator bundle was not built for this cloud");
  }
}

} // namespace

SparseMatrix assemble_vpe_matrix(const PointCloud& cloud,
                                 const OperatorBundle& ops,
                                 double nu_scale,
                                 std::optional<double> shift)
{
  check_sizes(cloud, ops);
  const BlockLayout layout{ cloud.n_interior, cloud.n_boundary };
  const std::size_t n = layout.dimension();
  const double diag_shift = shift.value_or(0.0);

  Triplets t;
  t.reserve(n * 24);
  const auto add = [&](std::size_t r, std::size_t c, double v) {
    t.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  };

  for (std::size_t i = 0; i < cloud.n_interior; ++i) {
    const StencilRow& row = ops.laplacian.rows[i];
    for (int comp = 0; comp < 2; ++comp) {
      const std::size_t r = layout.interior_row(comp, i);
      add(r, layout.column(comp, i), -nu_scale * row.diagonal + diag_shift);
      for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
        add(r, layout.column(comp, row.neighbors[k]), -nu_scale * row.weights[k]);
      }
    }
  }
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    const StencilRow& gx = ops.dx.rows[i];
    const StencilRow& gy = ops.dy.rows[i];
    const std::size_t r = layout.divergence_row(i);
    add(r, layout.column(0, i), gx.diagonal);
    add(r, layout.column(1, i), gy.diagonal);
    for (std::size_t k = 0; k < gx.neighbors.size(); ++k) {
      add(r, layout.column(0, gx.neighbors[k]), gx.weights[k]);
    }
    for (std::size_t k = 0; k < gy.neighbors.size(); ++k) {
      add(r, layout.column(1, gy.neighbors[k]), gy.weights[k]);
    }
    const Vec2& nrm = cloud.normal(i);
    const std::size_t rt = layout.tangential_row(i);
    add(rt, layout.column(0, i), -nrm.y());
    add(rt, layout.column(1, i), nrm.x());
  }
  SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

Eigen::VectorXd assemble_vpe_rhs(const PointCloud& cloud,
                                 std::span<const Vec2> rhs_interior,
                                 std::span<const double> g_tangential)
{
  if (rhs_interior.size() != cloud.n_interior || g_tangential.size() != cloud.n_boundary) {
    throw SizeMismatch("assemble_vpe: expected one forcing value per interior point and one datum per boundary point");
  }
  const BlockLayout layout{ cloud.n_interior, cloud.n_boundary };
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.dimension()));
  for (std::size_t i = 0; i < cloud.n_interior; ++i) {
    rhs(static_cast<Eigen::Index>(layout.interior_row(0, i))) = rhs_interior[i].x();
    rhs(static_cast<Eigen::Index>(layout.interior_row(1, i))) = rhs_interior[i].y();
  }
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    rhs(static_cast<Eigen::Index>(layout.tangential_row(i))) = g_tangential[i - cloud.n_interior];
  }
  return rhs;
}

SparseSystem assemble_vpe(const PointCloud& cloud,
                          const OperatorBundle& ops,
                          double nu_scale,
                          std::optional<double> shift,
                          std::span<const Vec2> rhs_interior,
                          std::span<const double> g_tangential)
{
  SparseSystem sys;
  sys.layout = { cloud.n_interior, cloud.n_boundary };
  sys.matrix = assemble_vpe_matrix(cloud, ops, nu_scale, shift);
  sys.rhs = assemble_vpe_rhs(cloud, rhs_interior, g_tangential);
  return sys;
}

SparseMatrix assemble_boundary_matrix(const PointCloud& cloud, const OperatorBundle& ops)
{
  check_sizes(cloud, ops);
  const std::size_t ni = cloud.n_interior;
  const std::size_t nb = cloud.n_boundary;
  const auto col = [&](int comp, std::size_t i) { return static_cast<std::size_t>(comp) * nb + (i - ni); };
  Triplets t;
  t.reserve(nb * 30);
  const auto add = [&](std::size_t r, std::size_t c, double v) {
    t.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  };
  for (std::size_t i = ni; i < cloud.size(); ++i) {
    const std::size_t r = i - ni;
    const StencilRow& gx = ops.dx.rows[i];
    const StencilRow& gy = ops.dy.rows[i];
    add(r, col(0, i), gx.diagonal);
    add(r, col(1, i), gy.diagonal);
    for (std::size_t k = 0; k < gx.neighbors.size(); ++k) {
      if (gx.neighbors[k] >= ni) {
        add(r, col(0, gx.neighbors[k]), gx.weights[k]);
      }
    }
    for (std::size_t k = 0; k < gy.neighbors.size(); ++k) {
      if (gy.neighbors[k] >= ni) {
        add(r, col(1, gy.neighbors[k]), gy.weights[k]);
      }
    }
    const Vec2& nrm = cloud.normal(i);
    add(nb + r, col(0, i), -nrm.y());
    add(nb + r, col(1, i), nrm.x());
  }
  SparseMatrix A(static_cast<Eigen::Index>(2 * nb), static_cast<Eigen::Index>(2 * nb));
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

Eigen::VectorXd assemble_boundary_rhs(const PointCloud& cloud,
                                      const OperatorBundle& ops,
                                      std::span<const Vec2> values,
                                      std::span<const double> g_tangential)
{
  check_sizes(cloud, ops);
  if (values.size() != cloud.size() || g_tangential.size() != cloud.n_boundary) {
    throw SizeMismatch("assemble_boundary_system: field or boundary data has the wrong length");
  }
  const std::size_t ni = cloud.n_interior;
  const std::size_t nb = cloud.n_boundary;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * nb));
  for (std::size_t i = ni; i < cloud.size(); ++i) {
    const StencilRow& gx = ops.dx.rows[i];
    const StencilRow& gy = ops.dy.rows[i];
    double known = 0.0;
    for (std::size_t k = 0; k < gx.neighbors.size(); ++k) {
      if (gx.neighbors[k] < ni) {
        known += gx.weights[k] * values[gx.neighbors[k]].x();
      }
    }
    for (std::size_t k = 0; k < gy.neighbors.size(); ++k) {
      if (gy.neighbors[k] < ni) {
        known += gy.weights[k] * values[gy.neighbors[k]].y();
      }
    }
    rhs(static_cast<Eigen::Index>(i - ni)) = -known;
    rhs(static_cast<Eigen::Index>(nb + i - ni)) = g_tangential[i - ni];
  }
  return rhs;
}

SparseSystem assemble_boundary_system(const PointCloud& cloud,
                                      const OperatorBundle& ops,
                                      std::span<const Vec2> values,
                                      std::span<const double> g_tangential)
{
  SparseSystem sys;
  sys.layout = { 0, cloud.n_boundary };
  sys.matrix = assemble_boundary_matrix(cloud, ops);
  sys.rhs = assemble_boundary_rhs(cloud, ops, values, g_tangential);
  return sys;
}

SparseMatrix assemble_pressure_matrix(const PointCloud& cloud, const OperatorBundle& ops)
{
  check_sizes(cloud, ops);
  Triplets t;
  t.reserve(cloud.size() * 24);
  const auto add_row = [&](std::size_t r, const StencilRow& row, double scale) {
    t.emplace_back(static_cast<int>(r), static_cast<int>(row.center), scale * row.diagonal);
    for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
      t.emplace_back(static_cast<int>(r), static_cast<int>(row.neighbors[k]), scale * row.weights[k]);
    }
  };
  for (std::size_t i = 0; i < cloud.n_interior; ++i) {
    add_row(i, ops.laplacian.rows[i], 1.0);
  }
  // Inward normal derivative: keeps the left kernel of A positive, so the
  // bordering with e never degenerates whatever the domain scale.
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    const Vec2& nrm = cloud.normal(i);
    add_row(i, ops.dx.rows[i], -nrm.x());
    add_row(i, ops.dy.rows[i], -nrm.y());
  }
  const auto n = static_cast<Eigen::Index>(cloud.size());
  SparseMatrix A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

double norm_inf(const SparseMatrix& matrix)
{
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(matrix.rows());
  for (Eigen::Index k = 0; k < matrix.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
      row_sums(it.row()) += std::abs(it.value());
    }
  }
  return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

void DirectSolver::factorize(const SparseMatrix& matrix)
{
  if (matrix.rows() != matrix.cols()) {
    throw InvalidArgument("direct solve needs a square matrix");
  }
  matrix_ = matrix;
  matrix_.makeCompressed();
  matrix_norm_ = norm_inf(matrix_);
  auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
  lu->analyzePattern(matrix_);
  lu->factorize(matrix_);
  if (lu->info() != Eigen::Success) {
    throw SingularMatrix("sparse LU failed: " + lu->lastErrorMessage());
  }
  // Cheap condition probe: a generic right-hand side excites any near-null
  // direction, so a near-zero pivot shows up as a huge solution.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd probe(matrix_.rows());
  for (Eigen::Index i = 0; i < probe.size(); ++i) {
    probe(i) = dist(rng);
  }
  const Eigen::VectorXd x = lu->solve(probe);
  const double growth = matrix_norm_ * x.cwiseAbs().maxCoeff() / probe.cwiseAbs().maxCoeff();
  if (!std::isfinite(growth) || growth > 1e14) {
    throw SingularMatrix("matrix is numerically singular (condition estimate " + std::to_string(growth) + ")");
  }
  lu_ = std::move(lu);
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& rhs) const
{
  if (!lu_) {
    throw InvalidArgument("DirectSolver::solve before factorize");
  }
  if (rhs.size() != matrix_.rows()) {
    throw SizeMismatch("DirectSolver::solve: right-hand side has the wrong length");
  }
  Eigen::VectorXd x = lu_->solve(rhs);
  const Eigen::VectorXd r = rhs - matrix_ * x;
  x += lu_->solve(r);
  if (!x.allFinite()) {
    throw SingularMatrix("sparse LU produced a non-finite solution");
  }
  return x;
}

Eigen::VectorXd solve(const SparseMatrix& matrix, const Eigen::VectorXd& rhs)
{
  return DirectSolver(matrix).solve(rhs);
}

Eigen::VectorXd solve(const SparseSystem& system)
{
  return solve(system.matrix, system.rhs);
}

void BorderedSolver::factorize(const SparseMatrix& A)
{
  if (A.rows() != A.cols()) {
    throw InvalidArgument("bordered solve needs a square matrix");
  }
  n_ = A.rows();
  Triplets t;
  t.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * n_));
  for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (Eigen::Index i = 0; i < n_; ++i) {
    t.emplace_back(static_cast<int>(i), static_cast<int>(n_), 1.0);
    t.emplace_back(static_cast<int>(n_), static_cast<int>(i), 1.0);
  }
  SparseMatrix B(n_ + 1, n_ + 1);
  B.setFromTriplets(t.begin(), t.end());
  solver_.factorize(B);
}

BorderedSolution BorderedSolver::solve(const Eigen::VectorXd& r) const
{
  if (r.size() != n_) {
    throw SizeMismatch("bordered solve: right-hand side has the wrong length");
  }
  Eigen::VectorXd rhs(n_ + 1);
  rhs.head(n_) = r;
  rhs(n_) = 0.0;
  const Eigen::VectorXd x = solver_.solve(rhs);
  return { x.head(n_), x(n_) };
}

BorderedSolution solve_bordered(const SparseMatrix& A, const Eigen::VectorXd& r)
{
  return BorderedSolver(A).solve(r);
}

void write_matrix(std::ostream& out, const SparseMatrix& matrix)
{
  const auto old = out.precision(17);
  for (Eigen::Index k = 0; k < matrix.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  out.precision(old);
}

} // namespace mfd
