#pragma once

#include "mfd/geometry.hpp"
#include "mfd/pointcloud.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mfd {

enum class Operator { Laplacian, Dx, Dy, Identity };

/**
 * A linear differential operator together with the consistency order k of
 * its meshfree approximation.
 *
 * Constraint degree is k + d - 1 for an operator of differential order d;
 * the identity (d = 0) instead reproduces all polynomials of degree <= k.
 * Differential operators exclude the constant monomial (closed by the
 * diagonal entry); the identity keeps it.
 */
struct OperatorSpec {
  Operator op = Operator::Laplacian;
  int order = 2;

  int differential_order() const noexcept;
  int degree() const noexcept;
  std::size_t constraint_count() const noexcept;
  bool has_diagonal() const noexcept { return op != Operator::Identity; }
};

/// Monomial exponents (a, b) of x^a y^b, graded-lex: x, y, x^2, xy, y^2, ...
std::vector<std::pair<int, int>> monomial_exponents(int degree, bool include_constant);

struct ConstraintSystem {
  Eigen::MatrixXd V; // constraint_count x neighbor_count
  Eigen::VectorXd b;
};

/// Taylor constraints V a = b on the relative coordinates x_j - center.
/// Throws InsufficientNeighbors for an empty neighbor list.
ConstraintSystem constraint_system(const Vec2& center, std::span<const Vec2> neighbor_coords, OperatorSpec spec);

/**
 * Minimizer of sum a_j^2 / w_j subject to V a = b with w_j = distance_j^-beta,
 * i.e. a = W V^T (V W V^T)^{-1} b, followed by one refinement pass.
 *
 * Rank-deficient but consistent constraint sets (symmetric configurations)
 * fall back to the minimum weighted-norm solution. Throws SingularConstraints
 * when the constraints cannot be met to 1e-9 relative.
 */
Eigen::VectorXd wlsq_weights(const Eigen::MatrixXd& V,
                             const Eigen::VectorXd& b,
                             std::span<const double> distances,
                             double beta = 2.0);

struct StencilRow {
  std::size_t center = 0;
  std::vector<std::size_t> neighbors;
  std::vector<double> weights;
  double diagonal = 0.0;
};

/// Debug dump "i: (j,a_ij) ... diag".
std::ostream& operator<<(std::ostream& out, const StencilRow& row);

/// One row per target point, all built against one cloud.
struct StencilSet {
  OperatorSpec spec;
  std::vector<StencilRow> rows;
  std::size_t cloud_size = 0;

  std::size_t size() const noexcept { return rows.size(); }

  double apply_row(std::size_t r, std::span<const double> field) const
  {
    const StencilRow& row = rows[r];
    double acc = row.diagonal * field[row.center];
    for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
      acc += row.weights[k] * field[row.neighbors[k]];
    }
    return acc;
  }
};

struct StencilOptions {
  double beta = 2.0;
  double base_radius_factor = 2.5;
  double safety_factor = 1.5;
  double boundary_safety_factor = 2.0; // one-sided stencils at boundary points
  double growth = 1.2;
  int max_retries = 5;
};

/// Neighbor count requested for a spec: ceil(safety_factor * constraint count).
std::size_t required_neighbors(OperatorSpec spec, const StencilOptions& options = {});

/// Per-point counts: safety_factor at interior points, boundary_safety_factor at boundary points.
std::vector<std::size_t> required_neighbors(const PointCloud& cloud, OperatorSpec spec, const StencilOptions& options = {});

/**
 * Builds one stencil row per target. A row whose constraints are singular is
 * retried on a neighborhood grown by options.growth, at most max_retries
 * times, before StencilFailure is thrown.
 */
StencilSet operator_weights(const PointCloud& cloud,
                            const Neighborhood& neighborhood,
                            OperatorSpec spec,
                            std::span<const std::size_t> target_points,
                            const StencilOptions& options = {});

/// Convenience overload building its own neighborhood.
StencilSet operator_weights(const PointCloud& cloud,
                            OperatorSpec spec,
                            std::span<const std::size_t> target_points,
                            const StencilOptions& options = {});

/// out_r = a_rr field_r + sum_j a_rj field_j for each row. Throws SizeMismatch.
std::vector<double> apply(const StencilSet& stencils, std::span<const double> field);

/// Weights reproducing polynomials of degree <= order at an arbitrary location.
StencilRow evaluation_weights(const PointCloud& cloud,
                              const Vec2& location,
                              int order,
                              const StencilOptions& options = {});

/**
 * Moving-least-squares extrapolation of interior data to boundary points:
 * a quadratic fit over interior neighbors only, weighted by distance^-2 and
 * evaluated at the boundary point. Rows are linear in the interior data.
 */
struct ExtrapolationSet {
  std::vector<StencilRow> rows; // neighbors index the full cloud; all interior
  std::vector<std::size_t> targets;
};

struct ExtrapolationOptions {
  double radius_factor = 3.5;
  std::size_t min_neighbors = 6;
  double growth = 1.2;
  int max_retries = 5;
};

ExtrapolationSet mls_extrapolation_weights(const PointCloud& cloud,
                                           std::span<const std::size_t> boundary_targets,
                                           const ExtrapolationOptions& options = {});

/// interior_field has n_interior entries; returns one value per target.
std::vector<double> mls_extrapolate(const ExtrapolationSet& extrapolation,
                                    const PointCloud& cloud,
                                    std::span<const double> interior_field);

/// Convenience overload building the extrapolation rows on the fly.
std::vector<double> mls_extrapolate(const PointCloud& cloud,
                                    std::span<const double> interior_field,
                                    std::span<const std::size_t> boundary_targets,
                                    const ExtrapolationOptions& options = {});

/// Index lists of a cloud's interior, boundary and all points.
std::vector<std::size_t> interior_indices(const PointCloud& cloud);
std::vector<std::size_t> boundary_indices(const PointCloud& cloud);
std::vector<std::size_t> all_indices(const PointCloud& cloud);

/**
 * The stencils one discretization of order k needs: Laplacian at interior
 * points, gradient components at every point, and MLS extrapolation rows for
 * the boundary.
 */
struct OperatorBundle {
  int order = 2;
  StencilSet laplacian; // rows = interior points
  StencilSet dx;        // rows = all points
  StencilSet dy;        // rows = all points
  ExtrapolationSet extrapolation;
};

OperatorBundle build_operators(const PointCloud& cloud,
                               int order,
                               const StencilOptions& options = {},
                               bool with_extrapolation = true);

} // namespace mfd
