#pragma once

#include "mfd/linsys.hpp"
#include "mfd/pointcloud.hpp"
#include "mfd/stencil.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace mfd {

using VectorField = std::vector<Vec2>;
using ScalarField = std::vector<double>;
/// Space-time vector callback (x, t) -> value.
using TimeField = std::function<Vec2(const Vec2&, double)>;
/// Steady vector callback x -> value.
using SteadyField = std::function<Vec2(const Vec2&)>;

struct ProblemData {
  TimeField f;     // forcing
  TimeField g;     // boundary velocity
  TimeField dg_dt; // analytic time derivative of g
  double nu = 1.0;
  double lambda = 0.0; // normal-velocity relaxation in the pressure condition
};

enum class Scheme { ForwardEuler, BackwardEuler, Imex1, Imex2 };

Scheme parse_scheme(std::string_view name);
std::string to_string(Scheme scheme);

struct SchemeSpec {
  Scheme scheme = Scheme::ForwardEuler;
  double dt = 0.0;

  /// Two-stage ImEx coefficients.
  static inline const double gamma = 1.0 - std::sqrt(2.0) / 2.0;
  static inline const double delta = 1.0 - 1.0 / (2.0 * gamma);

  /// Viscosity switch of the first-order scheme: 0 explicit, 1 implicit.
  int theta() const noexcept { return scheme == Scheme::ForwardEuler ? 0 : 1; }
};

struct FieldState {
  VectorField u;
  ScalarField p; // empty until a pressure has been computed for (u, t)
  double t = 0.0;
};

/// n x g at every boundary point at time t.
std::vector<double> tangential_data(const PointCloud& cloud, const TimeField& g, double t);

/// Laplacian of both components at the interior points.
VectorField laplacian_interior(const OperatorBundle& ops, const VectorField& u);

/// Gradient of a scalar field at every point.
VectorField gradient(const OperatorBundle& ops, std::span<const double> field);

/// Rows of the velocity Jacobian at every point: (d/dx, d/dy) of u^x and u^y.
struct Jacobian {
  VectorField grad_x; // grad u^x
  VectorField grad_y; // grad u^y
};
Jacobian jacobian(const OperatorBundle& ops, const VectorField& u);

/// Steady vector Poisson problem -Laplace u = f with electric boundary conditions.
VectorField solve_vpe(const PointCloud& cloud, const OperatorBundle& ops, const SteadyField& f, const SteadyField& g);

/// Largest scaled residual of the divergence and tangential boundary rows.
double boundary_residual(const PointCloud& cloud,
                         const OperatorBundle& ops,
                         const VectorField& u,
                         std::span<const double> g_tangential);

/**
 * Vector heat equation u_t = nu Laplace u + f with electric boundary
 * conditions. Forward Euler updates interior points explicitly and solves a
 * boundary-only system; backward Euler / imex1 and imex2 solve the shifted
 * vector system. Boundary conditions hold at the end of every stage.
 *
 * The constructor factors every matrix the scheme needs; step() is const.
 */
class HeatStepper {
public:
  HeatStepper(const PointCloud& cloud, const OperatorBundle& ops, ProblemData data, SchemeSpec scheme);

  FieldState step(const FieldState& state) const;
  const SchemeSpec& scheme() const noexcept { return scheme_; }

private:
  void finish_boundary(VectorField& u, double t) const;
  VectorField implicit_solve(const VectorField& rhs_interior, double t) const;

  const PointCloud& cloud_;
  const OperatorBundle& ops_;
  ProblemData data_;
  SchemeSpec scheme_;
  DirectSolver boundary_solver_;
  DirectSolver implicit_solver_;
};

struct PressureSolution {
  ScalarField p;
  double alpha = 0.0;
};

/// Called after every bordered pressure solve with its right-hand side and solution.
using PressureObserver = std::function<void(const Eigen::VectorXd& rhs, const BorderedSolution& solution)>;

/**
 * Navier-Stokes equations in pressure Poisson reformulation with electric
 * boundary conditions. Each step evaluates advection with centered gradient
 * stencils, extrapolates Laplace u to the boundary by MLS, solves the bordered
 * pressure system, then updates the velocity per scheme and closes the
 * boundary values with the divergence/tangential rows.
 */
class NavierStokesStepper {
public:
  NavierStokesStepper(const PointCloud& cloud, const OperatorBundle& ops, ProblemData data, SchemeSpec scheme);

  FieldState step(const FieldState& state) const;

  /// P(u) at time t; p satisfies e^T p = 0.
  PressureSolution pressure_solve(const VectorField& u, double t) const;

  /// Pressure right-hand side: interior divergence rows, boundary rows holding
  /// minus the Neumann data (matching the inward rows of the pressure matrix).
  Eigen::VectorXd pressure_rhs(const VectorField& u, double t) const;

  /// Projection coefficient of the most recent pressure solve.
  double last_alpha() const noexcept { return last_alpha_; }
  const SparseMatrix& pressure_matrix() const noexcept { return pressure_matrix_; }
  const SchemeSpec& scheme() const noexcept { return scheme_; }

  void set_pressure_observer(PressureObserver observer) { observer_ = std::move(observer); }

private:
  // f - N(u) - grad P(u) at interior points, with P(u) taken from `p`.
  VectorField explicit_terms(const VectorField& u, const ScalarField& p, double t) const;
  void finish_boundary(VectorField& u, double t) const;
  VectorField implicit_solve(const VectorField& rhs_interior, double t) const;

  const PointCloud& cloud_;
  const OperatorBundle& ops_;
  ProblemData data_;
  SchemeSpec scheme_;
  SparseMatrix pressure_matrix_;
  BorderedSolver pressure_solver_;
  DirectSolver boundary_solver_;
  DirectSolver implicit_solver_;
  mutable double last_alpha_ = 0.0;
  PressureObserver observer_;
};

/**
 * Largest stable forward-Euler step for the heat problem, as C = dt nu / h^2.
 * A run over `horizon` is unstable once max |u| exceeds 10 x its initial
 * value; C is bracketed and then bisected.
 */
double measure_stability_constant(const PointCloud& cloud,
                                  const OperatorBundle& ops,
                                  const ProblemData& data,
                                  const VectorField& u0,
                                  double horizon = 1.0,
                                  int bisection_steps = 10);

/// true if forward Euler with this dt keeps max |u| below 10 x max |u0| up to `horizon`.
bool forward_euler_stable(const PointCloud& cloud,
                          const OperatorBundle& ops,
                          const ProblemData& data,
                          const VectorField& u0,
                          double dt,
                          double horizon);

double max_norm(const VectorField& u);

} // namespace mfd
