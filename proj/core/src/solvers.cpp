#include "mfd/solvers.hpp"

#include "mfd/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mfd {

Scheme parse_scheme(std::string_view name)
{
  if (name == "forward-euler") {
    return Scheme::ForwardEuler;
  }
  if (name == "backward-euler") {
    return Scheme::BackwardEuler;
  }
  if (name == "imex1") {
    return Scheme::Imex1;
  }
  if (name == "imex2") {
    return Scheme::Imex2;
  }
  throw InvalidArgument("unknown scheme '" + std::string(name) +
                        "' (expected forward-euler, backward-euler, imex1 or imex2)");
}

std::string to_string(Scheme scheme)
{
  switch (scheme) {
    case Scheme::ForwardEuler:
      return "forward-euler";
    case Scheme::BackwardEuler:
      return "backward-euler";
    case Scheme::Imex1:
      return "imex1";
    case Scheme::Imex2:
      return "imex2";
  }
  return "unknown";
}

double max_norm(const VectorField& u)
{
  double m = 0.0;
  for (const auto& v : u) {
    m = std::max(m, v.cwiseAbs().maxCoeff());
  }
  return m;
}

std::vector<double> tangential_data(const PointCloud& cloud, const TimeField& g, double t)
{
  std::vector<double> out(cloud.n_boundary);
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    out[i - cloud.n_interior] = cross(cloud.normal(i), g(cloud.points[i], t));
  }
  return out;
}

namespace {

ScalarField component(const VectorField& u, int c)
{
  ScalarField out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = u[i](c);
  }
  return out;
}

// Writes the boundary solution [u^x_b | u^y_b] into u.
void scatter_boundary(const PointCloud& cloud, const Eigen::VectorXd& x, VectorField& u)
{
  const std::size_t nb = cloud.n_boundary;
  for (std::size_t k = 0; k < nb; ++k) {
    u[cloud.n_interior + k] = Vec2(x(static_cast<Eigen::Index>(k)), x(static_cast<Eigen::Index>(nb + k)));
  }
}

VectorField unpack_vpe(const PointCloud& cloud, const Eigen::VectorXd& x)
{
  const BlockLayout layout{ cloud.n_interior, cloud.n_boundary };
  VectorField u(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    u[i] = Vec2(x(static_cast<Eigen::Index>(layout.column(0, i))), x(static_cast<Eigen::Index>(layout.column(1, i))));
  }
  return u;
}

void check_state(const PointCloud& cloud, const FieldState& state)
{
  if (state.u.size() != cloud.size()) {
    throw SizeMismatch("field state does not match the cloud");
  }
}

} // namespace

VectorField laplacian_interior(const OperatorBundle& ops, const VectorField& u)
{
  const ScalarField ux = component(u, 0);
  const ScalarField uy = component(u, 1);
  VectorField out(ops.laplacian.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r] = Vec2(ops.laplacian.apply_row(r, ux), ops.laplacian.apply_row(r, uy));
  }
  return out;
}

VectorField gradient(const OperatorBundle& ops, std::span<const double> field)
{
  if (field.size() != ops.dx.cloud_size) {
    throw SizeMismatch("gradient: field length does not match the cloud");
  }
  VectorField out(ops.dx.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r] = Vec2(ops.dx.apply_row(r, field), ops.dy.apply_row(r, field));
  }
  return out;
}

Jacobian jacobian(const OperatorBundle& ops, const VectorField& u)
{
  const ScalarField ux = component(u, 0);
  const ScalarField uy = component(u, 1);
  return { gradient(ops, ux), gradient(ops, uy) };
}

VectorField solve_vpe(const PointCloud& cloud, const OperatorBundle& ops, const SteadyField& f, const SteadyField& g)
{
  VectorField rhs(cloud.n_interior);
  for (std::size_t i = 0; i < cloud.n_interior; ++i) {
    rhs[i] = f(cloud.points[i]);
  }
  std::vector<double> gt(cloud.n_boundary);
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    gt[i - cloud.n_interior] = cross(cloud.normal(i), g(cloud.points[i]));
  }
  const SparseSystem sys = assemble_vpe(cloud, ops, 1.0, std::nullopt, rhs, gt);
  return unpack_vpe(cloud, solve(sys));
}

double boundary_residual(const PointCloud& cloud,
                         const OperatorBundle& ops,
                         const VectorField& u,
                         std::span<const double> g_tangential)
{
  const ScalarField ux = component(u, 0);
  const ScalarField uy = component(u, 1);
  const double scale_u = std::max(max_norm(u), 1e-300);
  double worst = 0.0;
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    const StencilRow& gx = ops.dx.rows[i];
    const StencilRow& gy = ops.dy.rows[i];
    double weight_sum = std::abs(gx.diagonal) + std::abs(gy.diagonal);
    for (const double w : gx.weights) {
      weight_sum += std::abs(w);
    }
    for (const double w : gy.weights) {
      weight_sum += std::abs(w);
    }
    const double div = ops.dx.apply_row(i, ux) + ops.dy.apply_row(i, uy);
    worst = std::max(worst, std::abs(div) / (weight_sum * scale_u));
    const double gt = g_tangential[i - cloud.n_interior];
    const double tang = cross(cloud.normal(i), u[i]) - gt;
    worst = std::max(worst, std::abs(tang) / (scale_u + std::abs(gt)));
  }
  return worst;
}

// ---------------------------------------------------------------------------

HeatStepper::HeatStepper(const PointCloud& cloud, const OperatorBundle& ops, ProblemData data, SchemeSpec scheme)
  : cloud_(cloud)
  , ops_(ops)
  , data_(std::move(data))
  , scheme_(scheme)
{
  if (!(scheme_.dt > 0.0)) {
    throw InvalidArgument("time step must be positive");
  }
  switch (scheme_.scheme) {
    case Scheme::ForwardEuler:
      boundary_solver_.factorize(assemble_boundary_matrix(cloud_, ops_));
      break;
    case Scheme::BackwardEuler:
    case Scheme::Imex1:
      implicit_solver_.factorize(assemble_vpe_matrix(cloud_, ops_, data_.nu, 1.0 / scheme_.dt));
      break;
    case Scheme::Imex2:
      implicit_solver_.factorize(
        assemble_vpe_matrix(cloud_, ops_, data_.nu, 1.0 / (SchemeSpec::gamma * scheme_.dt)));
      break;
  }
}

void HeatStepper::finish_boundary(VectorField& u, double t) const
{
  const auto gt = tangential_data(cloud_, data_.g, t);
  scatter_boundary(cloud_, boundary_solver_.solve(assemble_boundary_rhs(cloud_, ops_, u, gt)), u);
}

VectorField HeatStepper::implicit_solve(const VectorField& rhs_interior, double t) const
{
  const auto gt = tangential_data(cloud_, data_.g, t);
  return unpack_vpe(cloud_, implicit_solver_.solve(assemble_vpe_rhs(cloud_, rhs_interior, gt)));
}

FieldState HeatStepper::step(const FieldState& state) const
{
  check_state(cloud_, state);
  const double dt = scheme_.dt;
  const double t = state.t;
  const std::size_t ni = cloud_.n_interior;
  FieldState next;
  next.t = t + dt;

  switch (scheme_.scheme) {
    case Scheme::ForwardEuler: {
      const VectorField lap = laplacian_interior(ops_, state.u);
      next.u = state.u;
      for (std::size_t i = 0; i < ni; ++i) {
        next.u[i] = state.u[i] + dt * (data_.nu * lap[i] + data_.f(cloud_.points[i], t));
      }
      finish_boundary(next.u, next.t);
      break;
    }
    case Scheme::BackwardEuler:
    case Scheme::Imex1: {
      VectorField rhs(ni);
      for (std::size_t i = 0; i < ni; ++i) {
        rhs[i] = state.u[i] / dt + data_.f(cloud_.points[i], t);
      }
      next.u = implicit_solve(rhs, next.t);
      break;
    }
    case Scheme::Imex2: {
      const double gamma = SchemeSpec::gamma;
      const double delta = SchemeSpec::delta;
      const double t_stage = t + gamma * dt;
      VectorField rhs(ni);
      for (std::size_t i = 0; i < ni; ++i) {
        rhs[i] = state.u[i] / (gamma * dt) + data_.f(cloud_.points[i], t);
      }
      const VectorField stage = implicit_solve(rhs, t_stage);
      const VectorField lap_stage = laplacian_interior(ops_, stage);
      for (std::size_t i = 0; i < ni; ++i) {
        const Vec2& x = cloud_.points[i];
        rhs[i] = (state.u[i] / dt + (1.0 - gamma) * data_.nu * lap_stage[i] + delta * data_.f(x, t) +
                  (1.0 - delta) * data_.f(x, t_stage)) /
                 gamma;
      }
      next.u = implicit_solve(rhs, next.t);
      break;
    }
  }
  return next;
}

// ---------------------------------------------------------------------------

NavierStokesStepper::NavierStokesStepper(const PointCloud& cloud,
                                         const OperatorBundle& ops,
                                         ProblemData data,
                                         SchemeSpec scheme)
  : cloud_(cloud)
  , ops_(ops)
  , data_(std::move(data))
  , scheme_(scheme)
{
  if (!(scheme_.dt > 0.0)) {
    throw InvalidArgument("time step must be positive");
  }
  if (scheme_.scheme == Scheme::BackwardEuler) {
    scheme_.scheme = Scheme::Imex1;
  }
  if (ops_.extrapolation.rows.size() != cloud_.n_boundary) {
    throw InvalidArgument("pressure solve needs MLS extrapolation rows for every boundary point");
  }
  pressure_matrix_ = assemble_pressure_matrix(cloud_, ops_);
  pressure_solver_.factorize(pressure_matrix_);
  switch (scheme_.scheme) {
    case Scheme::ForwardEuler:
      boundary_solver_.factorize(assemble_boundary_matrix(cloud_, ops_));
      break;
    case Scheme::BackwardEuler:
    case Scheme::Imex1:
      implicit_solver_.factorize(assemble_vpe_matrix(cloud_, ops_, data_.nu, 1.0 / scheme_.dt));
      break;
    case Scheme::Imex2:
      implicit_solver_.factorize(
        assemble_vpe_matrix(cloud_, ops_, data_.nu, 1.0 / (SchemeSpec::gamma * scheme_.dt)));
      break;
  }
}

Eigen::VectorXd NavierStokesStepper::pressure_rhs(const VectorField& u, double t) const
{
  if (u.size() != cloud_.size()) {
    throw SizeMismatch("pressure_rhs: velocity does not match the cloud");
  }
  const std::size_t n = cloud_.size();
  const std::size_t ni = cloud_.n_interior;
  const Jacobian jac = jacobian(ops_, u);

  // f - (u . grad) u at every point
  ScalarField fx(n), fy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 adv(u[i].dot(jac.grad_x[i]), u[i].dot(jac.grad_y[i]));
    const Vec2 rhs = data_.f(cloud_.points[i], t) - adv;
    fx[i] = rhs.x();
    fy[i] = rhs.y();
  }

  const VectorField lap = laplacian_interior(ops_, u);
  ScalarField lap_x(ni), lap_y(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    lap_x[i] = lap[i].x();
    lap_y[i] = lap[i].y();
  }
  const auto lap_bx = mls_extrapolate(ops_.extrapolation, cloud_, lap_x);
  const auto lap_by = mls_extrapolate(ops_.extrapolation, cloud_, lap_y);

  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < ni; ++i) {
    r(static_cast<Eigen::Index>(i)) = ops_.dx.apply_row(i, fx) + ops_.dy.apply_row(i, fy);
  }
  for (std::size_t i = ni; i < n; ++i) {
    const Vec2& x = cloud_.points[i];
    const Vec2& nrm = cloud_.normal(i);
    const Vec2 g = data_.g(x, t);
    const Vec2 lap_b(lap_bx[i - ni], lap_by[i - ni]);
    const Vec2 forcing(fx[i], fy[i]); // already f - N(u)
    const double neumann =
      nrm.dot(forcing - data_.dg_dt(x, t) + data_.nu * lap_b) + data_.lambda * nrm.dot(u[i] - g);
    r(static_cast<Eigen::Index>(i)) = -neumann; // rows hold -n . grad p
  }
  return r;
}

PressureSolution NavierStokesStepper::pressure_solve(const VectorField& u, double t) const
{
  const Eigen::VectorXd rhs = pressure_rhs(u, t);
  const BorderedSolution sol = pressure_solver_.solve(rhs);
  last_alpha_ = sol.alpha;
  if (observer_) {
    observer_(rhs, sol);
  }
  return { ScalarField(sol.p.data(), sol.p.data() + sol.p.size()), sol.alpha };
}

VectorField NavierStokesStepper::explicit_terms(const VectorField& u, const ScalarField& p, double t) const
{
  const std::size_t ni = cloud_.n_interior;
  const Jacobian jac = jacobian(ops_, u);
  VectorField out(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    const Vec2 adv(u[i].dot(jac.grad_x[i]), u[i].dot(jac.grad_y[i]));
    const Vec2 grad_p(ops_.dx.apply_row(i, p), ops_.dy.apply_row(i, p));
    out[i] = data_.f(cloud_.points[i], t) - adv - grad_p;
  }
  return out;
}

void NavierStokesStepper::finish_boundary(VectorField& u, double t) const
{
  const auto gt = tangential_data(cloud_, data_.g, t);
  scatter_boundary(cloud_, boundary_solver_.solve(assemble_boundary_rhs(cloud_, ops_, u, gt)), u);
}

VectorField NavierStokesStepper::implicit_solve(const VectorField& rhs_interior, double t) const
{
  const auto gt = tangential_data(cloud_, data_.g, t);
  return unpack_vpe(cloud_, implicit_solver_.solve(assemble_vpe_rhs(cloud_, rhs_interior, gt)));
}

FieldState NavierStokesStepper::step(const FieldState& state) const
{
  check_state(cloud_, state);
  const double dt = scheme_.dt;
  const double t = state.t;
  const std::size_t ni = cloud_.n_interior;
  const ScalarField p = state.p.size() == cloud_.size() ? state.p : pressure_solve(state.u, t).p;
  const VectorField q = explicit_terms(state.u, p, t);

  FieldState next;
  next.t = t + dt;
  switch (scheme_.scheme) {
    case Scheme::ForwardEuler: {
      const VectorField lap = laplacian_interior(ops_, state.u);
      next.u = state.u;
      for (std::size_t i = 0; i < ni; ++i) {
        next.u[i] = state.u[i] + dt * (q[i] + data_.nu * lap[i]);
      }
      finish_boundary(next.u, next.t);
      break;
    }
    case Scheme::BackwardEuler:
    case Scheme::Imex1: {
      VectorField rhs(ni);
      for (std::size_t i = 0; i < ni; ++i) {
        rhs[i] = state.u[i] / dt + q[i];
      }
      next.u = implicit_solve(rhs, next.t);
      break;
    }
    case Scheme::Imex2: {
      const double gamma = SchemeSpec::gamma;
      const double delta = SchemeSpec::delta;
      const double t_stage = t + gamma * dt;
      VectorField rhs(ni);
      for (std::size_t i = 0; i < ni; ++i) {
        rhs[i] = state.u[i] / (gamma * dt) + q[i];
      }
      const VectorField stage = implicit_solve(rhs, t_stage);
      const ScalarField p_stage = pressure_solve(stage, t_stage).p;
      const VectorField q_stage = explicit_terms(stage, p_stage, t_stage);
      const VectorField lap_stage = laplacian_interior(ops_, stage);
      for (std::size_t i = 0; i < ni; ++i) {
        rhs[i] =
          (state.u[i] / dt + (1.0 - gamma) * data_.nu * lap_stage[i] + delta * q[i] + (1.0 - delta) * q_stage[i]) /
          gamma;
      }
      next.u = implicit_solve(rhs, next.t);
      break;
    }
  }
  next.p = pressure_solve(next.u, next.t).p;
  return next;
}

// ---------------------------------------------------------------------------

bool forward_euler_stable(const PointCloud& cloud,
                          const OperatorBundle& ops,
                          const ProblemData& data,
                          const VectorField& u0,
                          double dt,
                          double horizon)
{
  const HeatStepper stepper(cloud, ops, data, { Scheme::ForwardEuler, dt });
  const double limit = 10.0 * max_norm(u0);
  FieldState state{ u0, {}, 0.0 };
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  for (long s = 0; s < steps; ++s) {
    state = stepper.step(state);
    const double m = max_norm(state.u);
    if (!std::isfinite(m) || m > limit) {
      return false;
    }
  }
  return true;
}

double measure_stability_constant(const PointCloud& cloud,
                                  const OperatorBundle& ops,
                                  const ProblemData& data,
                                  const VectorField& u0,
                                  double horizon,
                                  int bisection_steps)
{
  const double scale = cloud.h * cloud.h / data.nu;
  const auto stable = [&](double c) { return forward_euler_stable(cloud, ops, data, u0, c * scale, horizon); };
  double lo = 0.05;
  double hi = 0.5;
  while (!stable(lo)) {
    hi = lo;
    lo *= 0.5;
    if (lo < 1e-4) {
      return 0.0;
    }
  }
  while (stable(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 100.0) {
      return hi;
    }
  }
  for (int k = 0; k < bisection_steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    (stable(mid) ? lo : hi) = mid;
  }
  return lo;
}

} // namespace mfd
