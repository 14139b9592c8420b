#pragma once

#include "mfd/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mfd {

// ---------------------------------------------------------------------------
// Manufactured solutions

struct ManufacturedVpe {
  Vec2 u;
  Vec2 f; // -Laplace u
  Vec2 g; // boundary data, equal to u
};

/// u = (pi sin 2 pi y sin^2 pi x, -pi sin 2 pi x sin^2 pi y); divergence free.
ManufacturedVpe manufactured_vpe(const Vec2& x);

struct ManufacturedNse {
  Vec2 u;
  double p = 0.0;
  Vec2 f; // du/dt + (u . grad) u + grad p - nu Laplace u
  Vec2 g;
  Vec2 dg_dt;
};

/// Time-dependent field cos(t) u_vpe(x) with p = -cos t cos(pi x) sin(pi y).
ManufacturedNse manufactured_nse(const Vec2& x, double t, double nu);

/// Analytic derivatives of the time-dependent manufactured field.
namespace exact {
Vec2 velocity(const Vec2& x, double t);
Vec2 grad_ux(const Vec2& x, double t);
Vec2 grad_uy(const Vec2& x, double t);
Vec2 laplacian(const Vec2& x, double t);
Vec2 velocity_dt(const Vec2& x, double t);
double pressure(const Vec2& x, double t);
Vec2 grad_pressure(const Vec2& x, double t);
} // namespace exact

/// Heat-equation data for the manufactured field: f = du/dt - nu Laplace u, g = u.
ProblemData vhe_problem(double nu);

/// Navier-Stokes data for the manufactured field.
ProblemData nse_problem(double nu, double lambda);

// ---------------------------------------------------------------------------
// Error measurement

/// Fourth-order gradient stencils at every point, used only to post-process
/// numerical fields.
class PostProcessor {
public:
  explicit PostProcessor(const PointCloud& cloud);

  VectorField gradient(std::span<const double> field) const;
  Jacobian jacobian(const VectorField& u) const;
  ScalarField divergence(const VectorField& u) const;

  const StencilSet& dx() const noexcept { return dx_; }
  const StencilSet& dy() const noexcept { return dy_; }

private:
  StencilSet dx_;
  StencilSet dy_;
};

struct ErrorReport {
  double h = 0.0;
  double err_u = 0.0;
  double err_grad_u = 0.0;
  double err_div_u = 0.0;
  std::optional<double> err_p;
  std::optional<double> err_grad_p;
  int order = 0;
  std::string scheme;
  std::string dt_rule;
};

/// Exact fields the numerical solution is compared against.
struct ExactFields {
  std::function<Vec2(const Vec2&)> u;
  std::function<Vec2(const Vec2&)> grad_ux;
  std::function<Vec2(const Vec2&)> grad_uy;
  std::function<double(const Vec2&)> p;      // optional
  std::function<Vec2(const Vec2&)> grad_p; // optional
};

/// Manufactured fields at time t.
ExactFields manufactured_exact(double t);

/**
 * Max-norm errors over all points. Derivatives of the numerical fields come
 * from the fourth-order stencils. Pressure errors are measured after removing
 * the point mean of both the numerical and the exact pressure.
 */
ErrorReport error_report(const PointCloud& cloud,
                         const PostProcessor& post,
                         const VectorField& u,
                         const ScalarField* p,
                         const ExactFields& exact);

// ---------------------------------------------------------------------------
// Convergence fitting

/// Least-squares slope of log(err) against log(h).
double convergence_fit(std::span<const std::pair<double, double>> points);

struct ConvergenceReport {
  std::vector<ErrorReport> levels; // strictly decreasing h
  std::vector<std::pair<std::string, double>> slopes;

  bool has_pressure() const noexcept;
  std::optional<double> slope(const std::string& quantity) const;
};

/// Sorts the levels by decreasing h and fits every available quantity.
ConvergenceReport make_convergence_report(std::vector<ErrorReport> levels);

/// CSV: "h,err_u,err_grad_u,err_div_u[,err_p,err_grad_p]".
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);

// ---------------------------------------------------------------------------
// Time step rules

/// dt = c h^2 / nu, dt = c h, or an absolute dt.
struct DtRule {
  enum class Kind { Diffusive, Linear, Absolute };
  Kind kind = Kind::Diffusive;
  double c = 0.2;

  /// Accepts "c*h^2/nu", "0.2h^2", "100h", "h", "1e-3".
  static DtRule parse(std::string_view text);
  double dt(double h, double nu) const;
  std::string str() const;
};

// ---------------------------------------------------------------------------
// Drivers

/// Running checks collected while stepping.
struct RunMonitor {
  std::size_t steps = 0;
  std::size_t pressure_solves = 0;
  double max_boundary_residual = 0.0; // scaled, see boundary_residual
  double max_bordered_residual = 0.0; // |A p - (r - alpha e)|_inf / |r|_inf
  double max_gauge = 0.0;             // |e^T p| / (N |p|_inf)
  double max_alpha = 0.0;

  void merge(const RunMonitor& other);
};

/// Checks one bordered pressure solve against its contract and records it.
void record_pressure_solve(RunMonitor& monitor,
                           const SparseMatrix& A,
                           const Eigen::VectorXd& rhs,
                           const BorderedSolution& solution);

struct EvolutionSettings {
  Scheme scheme = Scheme::ForwardEuler;
  DtRule dt_rule;
  double nu = 1.0;
  double lambda = 30.0;
  double T = 1.0;
};

/// Number of steps and effective step so that steps * dt = T exactly.
std::pair<long, double> step_count(double T, double dt);

ErrorReport vpe_level(const PointCloud& cloud, const OperatorBundle& ops, const PostProcessor& post);

ErrorReport vhe_level(const PointCloud& cloud,
                      const OperatorBundle& ops,
                      const PostProcessor& post,
                      const EvolutionSettings& settings,
                      RunMonitor* monitor = nullptr);

ErrorReport nse_level(const PointCloud& cloud,
                      const OperatorBundle& ops,
                      const PostProcessor& post,
                      const EvolutionSettings& settings,
                      RunMonitor* monitor = nullptr);

enum class EvolutionProblem { Heat, NavierStokes };

/**
 * Starts from the manufactured field plus amplitude * (sin pi x sin pi y, 0)
 * and returns |div u|_inf (fourth-order stencils) at t = 0 and after every step.
 */
std::vector<double> divergence_decay_run(const PointCloud& cloud,
                                         const OperatorBundle& ops,
                                         const PostProcessor& post,
                                         EvolutionProblem problem,
                                         const EvolutionSettings& settings,
                                         double amplitude,
                                         RunMonitor* monitor = nullptr);

/// Fresh cloud per ladder level with a fixed seed.
struct Ladder {
  std::string domain = "paper";
  std::vector<std::size_t> sizes{ 500, 1000, 2000, 4000, 8000 };
  std::uint64_t seed = 7;
};

} // namespace mfd
