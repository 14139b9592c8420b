#include "mfd/verify.hpp"

#include "mfd/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mfd {

namespace {

constexpr double pi = std::numbers::pi;

Vec2 base_velocity(const Vec2& x)
{
  const double sa = std::sin(pi * x.x());
  const double sb = std::sin(pi * x.y());
  return { pi * std::sin(2 * pi * x.y()) * sa * sa, -pi * std::sin(2 * pi * x.x()) * sb * sb };
}

Vec2 base_laplacian(const Vec2& x)
{
  const double s2a = std::sin(2 * pi * x.x());
  const double s2b = std::sin(2 * pi * x.y());
  const double p3 = 2 * pi * pi * pi;
  return { p3 * s2b * (2 * std::cos(2 * pi * x.x()) - 1), -p3 * s2a * (2 * std::cos(2 * pi * x.y()) - 1) };
}

} // namespace

namespace exact {

Vec2 velocity(const Vec2& x, double t)
{
  return std::cos(t) * base_velocity(x);
}

Vec2 velocity_dt(const Vec2& x, double t)
{
  return -std::sin(t) * base_velocity(x);
}

Vec2 grad_ux(const Vec2& x, double t)
{
  const double sa = std::sin(pi * x.x());
  return std::cos(t) * pi * pi *
         Vec2(std::sin(2 * pi * x.x()) * std::sin(2 * pi * x.y()), 2 * std::cos(2 * pi * x.y()) * sa * sa);
}

Vec2 grad_uy(const Vec2& x, double t)
{
  const double sb = std::sin(pi * x.y());
  return std::cos(t) * pi * pi *
         Vec2(-2 * std::cos(2 * pi * x.x()) * sb * sb, -std::sin(2 * pi * x.x()) * std::sin(2 * pi * x.y()));
}

Vec2 laplacian(const Vec2& x, double t)
{
  return std::cos(t) * base_laplacian(x);
}

double pressure(const Vec2& x, double t)
{
  return -std::cos(t) * std::cos(pi * x.x()) * std::sin(pi * x.y());
}

Vec2 grad_pressure(const Vec2& x, double t)
{
  const double c = std::cos(t);
  return { pi * c * std::sin(pi * x.x()) * std::sin(pi * x.y()), -pi * c * std::cos(pi * x.x()) * std::cos(pi * x.y()) };
}

} // namespace exact

ManufacturedVpe manufactured_vpe(const Vec2& x)
{
  const Vec2 u = base_velocity(x);
  return { u, -base_laplacian(x), u };
}

ManufacturedNse manufactured_nse(const Vec2& x, double t, double nu)
{
  ManufacturedNse out;
  out.u = exact::velocity(x, t);
  out.p = exact::pressure(x, t);
  const Vec2 advection(out.u.dot(exact::grad_ux(x, t)), out.u.dot(exact::grad_uy(x, t)));
  out.f = exact::velocity_dt(x, t) + advection + exact::grad_pressure(x, t) - nu * exact::laplacian(x, t);
  out.g = out.u;
  out.dg_dt = exact::velocity_dt(x, t);
  return out;
}

ProblemData vhe_problem(double nu)
{
  ProblemData data;
  data.nu = nu;
  data.f = [nu](const Vec2& x, double t) { return Vec2(exact::velocity_dt(x, t) - nu * exact::laplacian(x, t)); };
  data.g = exact::velocity;
  data.dg_dt = exact::velocity_dt;
  return data;
}

ProblemData nse_problem(double nu, double lambda)
{
  ProblemData data;
  data.nu = nu;
  data.lambda = lambda;
  data.f = [nu](const Vec2& x, double t) { return manufactured_nse(x, t, nu).f; };
  data.g = exact::velocity;
  data.dg_dt = exact::velocity_dt;
  return data;
}

// ---------------------------------------------------------------------------

PostProcessor::PostProcessor(const PointCloud& cloud)
{
  const OperatorSpec sx{ Operator::Dx, 4 };
  const OperatorSpec sy{ Operator::Dy, 4 };
  const StencilOptions options;
  const Neighborhood nb = neighbors(cloud, options.base_radius_factor, required_neighbors(cloud, sx, options));
  const auto targets = all_indices(cloud);
  dx_ = operator_weights(cloud, nb, sx, targets, options);
  dy_ = operator_weights(cloud, nb, sy, targets, options);
}

VectorField PostProcessor::gradient(std::span<const double> field) const
{
  if (field.size() != dx_.cloud_size) {
    throw SizeMismatch("post-processing gradient: field length does not match the cloud");
  }
  VectorField out(dx_.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r] = Vec2(dx_.apply_row(r, field), dy_.apply_row(r, field));
  }
  return out;
}

Jacobian PostProcessor::jacobian(const VectorField& u) const
{
  ScalarField ux(u.size()), uy(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    ux[i] = u[i].x();
    uy[i] = u[i].y();
  }
  return { gradient(ux), gradient(uy) };
}

ScalarField PostProcessor::divergence(const VectorField& u) const
{
  const Jacobian jac = jacobian(u);
  ScalarField out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = jac.grad_x[i].x() + jac.grad_y[i].y();
  }
  return out;
}

ExactFields manufactured_exact(double t)
{
  ExactFields e;
  e.u = [t](const Vec2& x) { return exact::velocity(x, t); };
  e.grad_ux = [t](const Vec2& x) { return exact::grad_ux(x, t); };
  e.grad_uy = [t](const Vec2& x) { return exact::grad_uy(x, t); };
  e.p = [t](const Vec2& x) { return exact::pressure(x, t); };
  e.grad_p = [t](const Vec2& x) { return exact::grad_pressure(x, t); };
  return e;
}

ErrorReport error_report(const PointCloud& cloud,
                         const PostProcessor& post,
                         const VectorField& u,
                         const ScalarField* p,
                         const ExactFields& exact)
{
  const std::size_t n = cloud.size();
  if (u.size() != n || (p != nullptr && p->size() != n)) {
    throw SizeMismatch("error_report: field length does not match the cloud");
  }
  ErrorReport report;
  report.h = cloud.h;

  const Jacobian jac = post.jacobian(u);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& x = cloud.points[i];
    report.err_u = std::max(report.err_u, (u[i] - exact.u(x)).cwiseAbs().maxCoeff());
    const double gx = (jac.grad_x[i] - exact.grad_ux(x)).cwiseAbs().maxCoeff();
    const double gy = (jac.grad_y[i] - exact.grad_uy(x)).cwiseAbs().maxCoeff();
    report.err_grad_u = std::max({ report.err_grad_u, gx, gy });
    report.err_div_u = std::max(report.err_div_u, std::abs(jac.grad_x[i].x() + jac.grad_y[i].y()));
  }

  if (p != nullptr && exact.p) {
    ScalarField pe(n);
    double mean_num = 0.0;
    double mean_exact = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pe[i] = exact.p(cloud.points[i]);
      mean_num += (*p)[i];
      mean_exact += pe[i];
    }
    mean_num /= static_cast<double>(n);
    mean_exact /= static_cast<double>(n);
    double err_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err_p = std::max(err_p, std::abs(((*p)[i] - mean_num) - (pe[i] - mean_exact)));
    }
    report.err_p = err_p;
    if (exact.grad_p) {
      const VectorField gp = post.gradient(*p);
      double err_gp = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        err_gp = std::max(err_gp, (gp[i] - exact.grad_p(cloud.points[i])).cwiseAbs().maxCoeff());
      }
      report.err_grad_p = err_gp;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

double convergence_fit(std::span<const std::pair<double, double>> points)
{
  if (points.size() < 2) {
    throw DegenerateFit("convergence fit needs at least two points");
  }
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [h, err] : points) {
    if (!(h > 0.0) || !(err > 0.0) || !std::isfinite(err)) {
      throw InvalidArgument("convergence fit needs positive h and finite positive errors");
    }
    mx += std::log(h);
    my += std::log(err);
  }
  const double m = static_cast<double>(points.size());
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [h, err] : points) {
    const double dx = std::log(h) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err) - my);
  }
  if (sxx <= 1e-24) {
    throw DegenerateFit("convergence fit: all h are equal");
  }
  return sxy / sxx;
}

bool ConvergenceReport::has_pressure() const noexcept
{
  return !levels.empty() &&
         std::all_of(levels.begin(), levels.end(), [](const ErrorReport& r) { return r.err_p && r.err_grad_p; });
}

std::optional<double> ConvergenceReport::slope(const std::string& quantity) const
{
  for (const auto& [name, value] : slopes) {
    if (name == quantity) {
      return value;
    }
  }
  return std::nullopt;
}

ConvergenceReport make_convergence_report(std::vector<ErrorReport> levels)
{
  if (levels.size() < 3) {
    throw InvalidArgument("a convergence report needs at least three levels");
  }
  std::sort(levels.begin(), levels.end(), [](const ErrorReport& a, const ErrorReport& b) { return a.h > b.h; });
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i].h < levels[i - 1].h)) {
      throw InvalidArgument("convergence ladder must be strictly decreasing in h");
    }
  }
  ConvergenceReport report;
  report.levels = std::move(levels);
  const auto fit = [&](const char* name, auto get) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : report.levels) {
      pts.emplace_back(r.h, get(r));
    }
    report.slopes.emplace_back(name, convergence_fit(pts));
  };
  fit("err_u", [](const ErrorReport& r) { return r.err_u; });
  fit("err_grad_u", [](const ErrorReport& r) { return r.err_grad_u; });
  fit("err_div_u", [](const ErrorReport& r) { return r.err_div_u; });
  if (report.has_pressure()) {
    fit("err_p", [](const ErrorReport& r) { return *r.err_p; });
    fit("err_grad_p", [](const ErrorReport& r) { return *r.err_grad_p; });
  }
  return report;
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report)
{
  const bool pressure = report.has_pressure();
  out << "h,err_u,err_grad_u,err_div_u" << (pressure ? ",err_p,err_grad_p" : "") << '\n';
  out << std::setprecision(17);
  for (const auto& r : report.levels) {
    out << r.h << ',' << r.err_u << ',' << r.err_grad_u << ',' << r.err_div_u;
    if (pressure) {
      out << ',' << *r.err_p << ',' << *r.err_grad_p;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

bool ends_with(std::string_view s, std::string_view suffix)
{
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

double parse_coefficient(std::string_view text, std::string_view whole)
{
  if (text.empty()) {
    return 1.0;
  }
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw InvalidArgument("cannot parse time step rule '" + std::string(whole) + "'");
  }
  return value;
}

} // namespace

DtRule DtRule::parse(std::string_view text)
{
  std::string s;
  for (const char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch)) && ch != '*') {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  DtRule rule;
  std::string_view v = s;
  if (ends_with(v, "h^2/nu") || ends_with(v, "h^2") || ends_with(v, "h2/nu") || ends_with(v, "h2")) {
    rule.kind = Kind::Diffusive;
    const auto cut = v.find('h');
    rule.c = parse_coefficient(v.substr(0, cut), text);
  }
  else if (ends_with(v, "h")) {
    rule.kind = Kind::Linear;
    rule.c = parse_coefficient(v.substr(0, v.size() - 1), text);
  }
  else {
    rule.kind = Kind::Absolute;
    rule.c = v.empty() ? 0.0 : parse_coefficient(v, text);
  }
  if (!(rule.c > 0.0) || !std::isfinite(rule.c)) {
    throw InvalidArgument("time step rule '" + std::string(text) + "' needs a positive coefficient");
  }
  return rule;
}

double DtRule::dt(double h, double nu) const
{
  switch (kind) {
    case Kind::Diffusive:
      return c * h * h / nu;
    case Kind::Linear:
      return c * h;
    case Kind::Absolute:
      return c;
  }
  return c;
}

std::string DtRule::str() const
{
  std::ostringstream out;
  out << c;
  switch (kind) {
    case Kind::Diffusive:
      out << "*h^2/nu";
      break;
    case Kind::Linear:
      out << "*h";
      break;
    case Kind::Absolute:
      break;
  }
  return out.str();
}

// ---------------------------------------------------------------------------

void RunMonitor::merge(const RunMonitor& other)
{
  steps += other.steps;
  pressure_solves += other.pressure_solves;
  max_boundary_residual = std::max(max_boundary_residual, other.max_boundary_residual);
  max_bordered_residual = std::max(max_bordered_residual, other.max_bordered_residual);
  max_gauge = std::max(max_gauge, other.max_gauge);
  max_alpha = std::max(max_alpha, other.max_alpha);
}

void record_pressure_solve(RunMonitor& monitor,
                           const SparseMatrix& A,
                           const Eigen::VectorXd& rhs,
                           const BorderedSolution& solution)
{
  const Eigen::VectorXd residual = A * solution.p - (rhs - Eigen::VectorXd::Constant(rhs.size(), solution.alpha));
  const double scale = rhs.lpNorm<Eigen::Infinity>();
  const double pmax = solution.p.lpNorm<Eigen::Infinity>();
  monitor.pressure_solves += 1;
  monitor.max_bordered_residual =
    std::max(monitor.max_bordered_residual, residual.lpNorm<Eigen::Infinity>() / std::max(scale, 1e-300));
  if (pmax > 0.0) {
    monitor.max_gauge =
      std::max(monitor.max_gauge, std::abs(solution.p.sum()) / (static_cast<double>(solution.p.size()) * pmax));
  }
  monitor.max_alpha = std::max(monitor.max_alpha, std::abs(solution.alpha));
}

std::pair<long, double> step_count(double T, double dt)
{
  if (!(T > 0.0) || !(dt > 0.0)) {
    throw InvalidArgument("final time and time step must be positive");
  }
  const long n = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
  return { n, T / static_cast<double>(n) };
}

namespace {

VectorField sample(const PointCloud& cloud, double t)
{
  VectorField u(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    u[i] = exact::velocity(cloud.points[i], t);
  }
  return u;
}

void record_boundary(RunMonitor* monitor,
                     const PointCloud& cloud,
                     const OperatorBundle& ops,
                     const ProblemData& data,
                     const FieldState& state)
{
  if (monitor == nullptr) {
    return;
  }
  monitor->steps += 1;
  const auto gt = tangential_data(cloud, data.g, state.t);
  monitor->max_boundary_residual =
    std::max(monitor->max_boundary_residual, boundary_residual(cloud, ops, state.u, gt));
}

void tag(ErrorReport& report, const OperatorBundle& ops, const EvolutionSettings& settings)
{
  report.order = ops.order;
  report.scheme = to_string(settings.scheme);
  report.dt_rule = settings.dt_rule.str();
}

void attach_observer(NavierStokesStepper& stepper, RunMonitor* monitor)
{
  if (monitor == nullptr) {
    return;
  }
  const SparseMatrix* A = &stepper.pressure_matrix();
  stepper.set_pressure_observer([monitor, A](const Eigen::VectorXd& rhs, const BorderedSolution& sol) {
    record_pressure_solve(*monitor, *A, rhs, sol);
  });
}

} // namespace

ErrorReport vpe_level(const PointCloud& cloud, const OperatorBundle& ops, const PostProcessor& post)
{
  const VectorField u = solve_vpe(
    cloud, ops, [](const Vec2& x) { return manufactured_vpe(x).f; }, [](const Vec2& x) { return manufactured_vpe(x).g; });
  ErrorReport report = error_report(cloud, post, u, nullptr, manufactured_exact(0.0));
  report.order = ops.order;
  report.scheme = "steady";
  return report;
}

ErrorReport vhe_level(const PointCloud& cloud,
                      const OperatorBundle& ops,
                      const PostProcessor& post,
                      const EvolutionSettings& settings,
                      RunMonitor* monitor)
{
  const ProblemData data = vhe_problem(settings.nu);
  const auto [steps, dt] = step_count(settings.T, settings.dt_rule.dt(cloud.h, settings.nu));
  const HeatStepper stepper(cloud, ops, data, { settings.scheme, dt });
  FieldState state{ sample(cloud, 0.0), {}, 0.0 };
  for (long s = 0; s < steps; ++s) {
    state = stepper.step(state);
    record_boundary(monitor, cloud, ops, data, state);
  }
  ErrorReport report = error_report(cloud, post, state.u, nullptr, manufactured_exact(state.t));
  tag(report, ops, settings);
  return report;
}

ErrorReport nse_level(const PointCloud& cloud,
                      const OperatorBundle& ops,
                      const PostProcessor& post,
                      const EvolutionSettings& settings,
                      RunMonitor* monitor)
{
  const ProblemData data = nse_problem(settings.nu, settings.lambda);
  const auto [steps, dt] = step_count(settings.T, settings.dt_rule.dt(cloud.h, settings.nu));
  NavierStokesStepper stepper(cloud, ops, data, { settings.scheme, dt });
  attach_observer(stepper, monitor);
  FieldState state{ sample(cloud, 0.0), {}, 0.0 };
  for (long s = 0; s < steps; ++s) {
    state = stepper.step(state);
    record_boundary(monitor, cloud, ops, data, state);
  }
  ErrorReport report = error_report(cloud, post, state.u, &state.p, manufactured_exact(state.t));
  tag(report, ops, settings);
  return report;
}

std::vector<double> divergence_decay_run(const PointCloud& cloud,
                                         const OperatorBundle& ops,
                                         const PostProcessor& post,
                                         EvolutionProblem problem,
                                         const EvolutionSettings& settings,
                                         double amplitude,
                                         RunMonitor* monitor)
{
  FieldState state{ sample(cloud, 0.0), {}, 0.0 };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec2& x = cloud.points[i];
    state.u[i].x() += amplitude * std::sin(pi * x.x()) * std::sin(pi * x.y());
  }
  const auto div_norm = [&post](const VectorField& u) {
    const ScalarField d = post.divergence(u);
    double m = 0.0;
    for (const double v : d) {
      m = std::max(m, std::abs(v));
    }
    return m;
  };

  const auto [steps, dt] = step_count(settings.T, settings.dt_rule.dt(cloud.h, settings.nu));
  std::vector<double> series{ div_norm(state.u) };
  series.reserve(static_cast<std::size_t>(steps) + 1);
  if (problem == EvolutionProblem::Heat) {
    const ProblemData data = vhe_problem(settings.nu);
    const HeatStepper stepper(cloud, ops, data, { settings.scheme, dt });
    for (long s = 0; s < steps; ++s) {
      state = stepper.step(state);
      record_boundary(monitor, cloud, ops, data, state);
      series.push_back(div_norm(state.u));
    }
  }
  else {
    const ProblemData data = nse_problem(settings.nu, settings.lambda);
    NavierStokesStepper stepper(cloud, ops, data, { settings.scheme, dt });
    attach_observer(stepper, monitor);
    for (long s = 0; s < steps; ++s) {
      state = stepper.step(state);
      record_boundary(monitor, cloud, ops, data, state);
      series.push_back(div_norm(state.u));
    }
  }
  return series;
}

} // namespace mfd
