#pragma once

#include "mfd/pointcloud.hpp"
#include "mfd/stencil.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace mfd {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/**
 * Row/column layout of the 2N x 2N vector system.
 *
 * Rows: [interior x | interior y | boundary divergence | boundary tangential].
 * Columns: [u^x interior | u^y interior | u^x boundary | u^y boundary].
 */
struct BlockLayout {
  std::size_t n_interior = 0;
  std::size_t n_boundary = 0;

  std::size_t dimension() const noexcept { return 2 * (n_interior + n_boundary); }
  /// Column of velocity component `comp` (0 = x, 1 = y) at cloud point i.
  std::size_t column(int comp, std::size_t i) const noexcept
  {
    const auto c = static_cast<std::size_t>(comp);
    return i < n_interior ? c * n_interior + i : 2 * n_interior + c * n_boundary + (i - n_interior);
  }
  std::size_t interior_row(int comp, std::size_t i) const noexcept
  {
    return static_cast<std::size_t>(comp) * n_interior + i;
  }
  std::size_t divergence_row(std::size_t i) const noexcept { return 2 * n_interior + (i - n_interior); }
  std::size_t tangential_row(std::size_t i) const noexcept { return 2 * n_interior + n_boundary + (i - n_interior); }
};

struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  BlockLayout layout;
};

/// Tangential datum n x g = n^x g^y - n^y g^x.
inline double cross(const Vec2& n, const Vec2& g)
{
  return n.x() * g.y() - n.y() * g.x();
}

/**
 * Vector Poisson / implicit heat system with electric boundary conditions.
 *
 * Interior rows encode nu_scale * (-Laplace u) + shift * u = rhs_interior
 * (shift = 1/dt for an implicit heat step, none for the Poisson problem);
 * boundary rows encode div u = 0 and n^x u^y - n^y u^x = g_tangential.
 * rhs_interior holds one 2D value per interior point.
 */
SparseSystem assemble_vpe(const PointCloud& cloud,
                          const OperatorBundle& ops,
                          double nu_scale,
                          std::optional<double> shift,
                          std::span<const Vec2> rhs_interior,
                          std::span<const double> g_tangential);

/// Matrix part of assemble_vpe only.
SparseMatrix assemble_vpe_matrix(const PointCloud& cloud,
                                 const OperatorBundle& ops,
                                 double nu_scale,
                                 std::optional<double> shift);

/// Right-hand side of assemble_vpe only.
Eigen::VectorXd assemble_vpe_rhs(const PointCloud& cloud,
                                 std::span<const Vec2> rhs_interior,
                                 std::span<const double> g_tangential);

/**
 * 2 N_b x 2 N_b system of the divergence and tangential rows with the
 * interior columns moved to the right-hand side. Unknown order:
 * [u^x boundary | u^y boundary]; row order: [divergence | tangential].
 * `values` is a full-length field; only its interior entries are read.
 */
SparseSystem assemble_boundary_system(const PointCloud& cloud,
                                      const OperatorBundle& ops,
                                      std::span<const Vec2> values,
                                      std::span<const double> g_tangential);

SparseMatrix assemble_boundary_matrix(const PointCloud& cloud, const OperatorBundle& ops);
Eigen::VectorXd assemble_boundary_rhs(const PointCloud& cloud,
                                      const OperatorBundle& ops,
                                      std::span<const Vec2> values,
                                      std::span<const double> g_tangential);

/**
 * Scalar Neumann Poisson matrix: Laplacian rows at interior points and
 * inward normal derivative rows -n . grad at boundary points. Every row sums
 * to zero, so A e = 0. With this orientation the left kernel of A is
 * positive (area-like weights inside, length-like weights on the boundary),
 * so the bordered system with e is regular on any domain and its projection
 * damps a net boundary flux instead of amplifying it.
 */
SparseMatrix assemble_pressure_matrix(const PointCloud& cloud, const OperatorBundle& ops);

/**
 * Sparse LU (COLAMD ordering, partial pivoting) with one step of iterative
 * refinement per solve. Factor once, solve many times.
 */
class DirectSolver {
public:
  DirectSolver() = default;
  explicit DirectSolver(const SparseMatrix& matrix) { factorize(matrix); }

  /// Throws SingularMatrix if the factorization breaks down.
  void factorize(const SparseMatrix& matrix);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  bool factorized() const noexcept { return lu_ != nullptr; }
  Eigen::Index size() const noexcept { return matrix_.rows(); }
  const SparseMatrix& matrix() const noexcept { return matrix_; }

private:
  SparseMatrix matrix_;
  double matrix_norm_ = 0.0;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
};

/// One-shot direct solve of a square system.
Eigen::VectorXd solve(const SparseSystem& system);
Eigen::VectorXd solve(const SparseMatrix& matrix, const Eigen::VectorXd& rhs);

/// Infinity norm (max absolute row sum).
double norm_inf(const SparseMatrix& matrix);

struct BorderedSolution {
  Eigen::VectorXd p;
  double alpha = 0.0;
};

/**
 * Solves [[A, e], [e^T, 0]] [p; alpha] = [r; 0] for a corank-1 matrix A with
 * kernel e = (1, ..., 1). The solution satisfies A p = r - alpha e, e^T p = 0.
 */
class BorderedSolver {
public:
  BorderedSolver() = default;
  explicit BorderedSolver(const SparseMatrix& A) { factorize(A); }

  void factorize(const SparseMatrix& A);
  BorderedSolution solve(const Eigen::VectorXd& r) const;
  Eigen::Index size() const noexcept { return n_; }

private:
  Eigen::Index n_ = 0;
  DirectSolver solver_;
};

BorderedSolution solve_bordered(const SparseMatrix& A, const Eigen::VectorXd& r);

/// Coordinate text dump "row col value", one nonzero per line.
void write_matrix(std::ostream& out, const SparseMatrix& matrix);

} // namespace mfd
