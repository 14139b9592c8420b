#include "mfd_cli/cli.hpp"

#include "mfd/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef MFD_DATA_DIR
#define MFD_DATA_DIR "data"
#endif

namespace mfd::cli {

namespace {

constexpr double kSlopeTolerance = 0.35;
constexpr double kResidualTolerance = 1e-8;
constexpr double kCavityTolerance = 0.1;
constexpr double kStabilityLow = 0.15;
constexpr double kStabilityHigh = 0.35;

std::string default_reference()
{
  return std::string(MFD_DATA_DIR) + "/ghia_re100.txt";
}

std::ofstream open_output(const std::string& path)
{
  std::ofstream file(path);
  if (!file) {
    throw Error("cannot open output file '" + path + "'");
  }
  return file;
}

const char* verdict(bool ok)
{
  return ok ? "pass" : "fail";
}

Scheme scheme_or(const RunConfig& config, Scheme fallback)
{
  if (!config.scheme) {
    return fallback;
  }
  try {
    return parse_scheme(*config.scheme);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

DtRule dt_or(const RunConfig& config, const char* fallback)
{
  try {
    return DtRule::parse(config.dt.value_or(fallback));
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

LevelSetDomain domain_of(const RunConfig& config, const char* fallback)
{
  try {
    return LevelSetDomain::by_name(config.domain.value_or(fallback));
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

void check_positive(std::optional<double> value, const char* name)
{
  if (value && !(*value > 0.0)) {
    throw UsageError(std::string("--") + name + " must be positive");
  }
}

double default_T(const std::string& problem, Scheme scheme)
{
  if (problem == "vhe") {
    return scheme == Scheme::BackwardEuler || scheme == Scheme::Imex1 ? 20.0 : 1.0;
  }
  return scheme == Scheme::ForwardEuler ? 0.1 : 1.0;
}

const char* default_dt(Scheme scheme)
{
  switch (scheme) {
    case Scheme::ForwardEuler:
      return "0.2*h^2/nu";
    case Scheme::BackwardEuler:
    case Scheme::Imex1:
      return "100*h";
    case Scheme::Imex2:
      return "h";
  }
  return "0.2*h^2/nu";
}

EvolutionSettings evolution_settings(const RunConfig& config, const std::string& problem)
{
  EvolutionSettings s;
  s.scheme = scheme_or(config, Scheme::ForwardEuler);
  if (problem == "nse" && s.scheme == Scheme::BackwardEuler) {
    throw UsageError("nse supports forward-euler, imex1 and imex2");
  }
  s.dt_rule = dt_or(config, default_dt(s.scheme));
  s.nu = config.nu.value_or(1.0);
  s.lambda = config.lambda.value_or(30.0);
  s.T = config.T.value_or(default_T(problem, s.scheme));
  return s;
}

void print_report(std::ostream& out, std::size_t n, const ErrorReport& r)
{
  out << std::setprecision(6) << "N=" << n << " h=" << r.h << " err_u=" << r.err_u << " err_grad_u=" << r.err_grad_u
      << " err_div_u=" << r.err_div_u;
  if (r.err_p) {
    out << " err_p=" << *r.err_p << " err_grad_p=" << *r.err_grad_p;
  }
  out << '\n';
}

bool finite_report(const ErrorReport& r)
{
  return std::isfinite(r.err_u) && std::isfinite(r.err_grad_u) && std::isfinite(r.err_div_u) &&
         (!r.err_p || std::isfinite(*r.err_p)) && (!r.err_grad_p || std::isfinite(*r.err_grad_p));
}

bool print_monitor(std::ostream& out, const RunMonitor& m, bool pressure)
{
  bool ok = m.max_boundary_residual <= kResidualTolerance;
  out << std::setprecision(3) << "boundary_residual " << m.max_boundary_residual << ' ' << verdict(ok) << '\n';
  if (pressure) {
    const bool bordered = m.max_bordered_residual <= kResidualTolerance && m.max_gauge <= kResidualTolerance;
    out << "bordered_residual " << m.max_bordered_residual << " gauge " << m.max_gauge << " max_alpha " << m.max_alpha
        << ' ' << verdict(bordered) << '\n';
    ok = ok && bordered;
  }
  return ok;
}

struct Level {
  PointCloud cloud;
  OperatorBundle ops;
};

Level make_level(const LevelSetDomain& domain, std::size_t n, std::uint64_t seed, int order, bool extrapolation)
{
  Level level;
  level.cloud = generate(domain, n, seed);
  level.ops = build_operators(level.cloud, order, {}, extrapolation);
  return level;
}

// ---------------------------------------------------------------------------

int cmd_cloud(const RunConfig& config, std::ostream& out)
{
  const LevelSetDomain domain = domain_of(config, "paper");
  const PointCloud cloud = generate(domain, config.n.value_or(1000), config.seed);
  const OperatorSpec spec{ Operator::Laplacian, config.order };
  const Neighborhood nb = neighbors(cloud, StencilOptions{}.base_radius_factor, required_neighbors(spec));
  const CloudDiagnostics d = validate(cloud, nb, domain);
  if (!config.out.empty()) {
    write_cloud(config.out, cloud);
  }
  out << std::setprecision(6) << "domain=" << domain.name() << " N=" << cloud.size() << " N_i=" << cloud.n_interior
      << " N_b=" << cloud.n_boundary << " h=" << cloud.h << '\n'
      << "min_spacing/h=" << d.min_spacing_over_h << " neighbors=[" << d.min_neighbors << ',' << d.max_neighbors
      << "] band_violations=" << d.band_violations << " max_boundary_phi=" << d.max_boundary_phi << '\n';
  out << "summary: " << verdict(d.ok()) << '\n';
  return d.ok() ? 0 : 1;
}

int cmd_vpe(const RunConfig& config, std::ostream& out)
{
  const LevelSetDomain domain = domain_of(config, "paper");
  const std::size_t n = config.n.value_or(1000);
  const Level level = make_level(domain, n, config.seed, config.order, false);
  const PostProcessor post(level.cloud);
  const VectorField u = solve_vpe(
    level.cloud,
    level.ops,
    [](const Vec2& x) { return manufactured_vpe(x).f; },
    [](const Vec2& x) { return manufactured_vpe(x).g; });
  ErrorReport report = error_report(level.cloud, post, u, nullptr, manufactured_exact(0.0));
  std::vector<double> gt(level.cloud.n_boundary);
  for (std::size_t i = level.cloud.n_interior; i < level.cloud.size(); ++i) {
    gt[i - level.cloud.n_interior] = cross(level.cloud.normal(i), manufactured_vpe(level.cloud.points[i]).g);
  }
  const double residual = boundary_residual(level.cloud, level.ops, u, gt);
  if (!config.out.empty()) {
    std::ofstream file = open_output(config.out);
    file << "x,y,u,v\n" << std::setprecision(17);
    for (std::size_t i = 0; i < u.size(); ++i) {
      file << level.cloud.points[i].x() << ',' << level.cloud.points[i].y() << ',' << u[i].x() << ',' << u[i].y()
           << '\n';
    }
  }
  print_report(out, n, report);
  const bool ok = finite_report(report) && residual <= kResidualTolerance;
  out << std::setprecision(3) << "boundary_residual " << residual << ' ' << verdict(residual <= kResidualTolerance)
      << '\n';
  out << "summary: " << verdict(ok) << '\n';
  return ok ? 0 : 1;
}

int cmd_evolution(const RunConfig& config, const std::string& problem, std::ostream& out)
{
  const LevelSetDomain domain = domain_of(config, "paper");
  const std::size_t n = config.n.value_or(1000);
  const EvolutionSettings settings = evolution_settings(config, problem);
  const bool nse = problem == "nse";
  const Level level = make_level(domain, n, config.seed, config.order, nse);
  const PostProcessor post(level.cloud);
  RunMonitor monitor;
  const ErrorReport report = nse ? nse_level(level.cloud, level.ops, post, settings, &monitor)
                                 : vhe_level(level.cloud, level.ops, post, settings, &monitor);
  if (!config.out.empty()) {
    std::ofstream file = open_output(config.out);
    file << "h,err_u,err_grad_u,err_div_u" << (nse ? ",err_p,err_grad_p" : "") << '\n' << std::setprecision(17);
    file << report.h << ',' << report.err_u << ',' << report.err_grad_u << ',' << report.err_div_u;
    if (nse) {
      file << ',' << *report.err_p << ',' << *report.err_grad_p;
    }
    file << '\n';
  }
  out << problem << " scheme=" << report.scheme << " dt=" << report.dt_rule << " T=" << settings.T
      << " steps=" << monitor.steps << '\n';
  print_report(out, n, report);
  const bool ok = print_monitor(out, monitor, nse) && finite_report(report);
  out << "summary: " << verdict(ok) << '\n';
  return ok ? 0 : 1;
}

int cmd_convergence(const RunConfig& config, std::ostream& out)
{
  const std::string& problem = config.problem;
  const LevelSetDomain domain = domain_of(config, "paper");
  const std::vector<std::size_t> ladder =
    config.ladder.empty() ? Ladder{}.sizes : config.ladder;
  const bool evolution = problem != "vpe";
  const EvolutionSettings settings = evolution ? evolution_settings(config, problem) : EvolutionSettings{};
  const bool nse = problem == "nse";

  std::vector<ErrorReport> reports(ladder.size());
  std::vector<RunMonitor> monitors(ladder.size());
  std::mutex out_mutex;
  for_each_level(ladder.size(), config.workers, [&](std::size_t k) {
    const auto start = std::chrono::steady_clock::now();
    const Level level = make_level(domain, ladder[k], config.seed, config.order, nse);
    const PostProcessor post(level.cloud);
    if (problem == "vpe") {
      reports[k] = vpe_level(level.cloud, level.ops, post);
    }
    else if (problem == "vhe") {
      reports[k] = vhe_level(level.cloud, level.ops, post, settings, &monitors[k]);
    }
    else {
      reports[k] = nse_level(level.cloud, level.ops, post, settings, &monitors[k]);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::lock_guard lock(out_mutex);
    print_report(out, ladder[k], reports[k]);
    out << std::setprecision(3) << "  (" << seconds << " s)\n";
  });

  const ConvergenceReport report = make_convergence_report(reports);
  if (!config.out.empty()) {
    std::ofstream file = open_output(config.out);
    write_convergence_csv(file, report);
  }
  const Scheme scheme = evolution ? settings.scheme : Scheme::ForwardEuler;
  const int expected =
    evolution ? expected_order(problem, config.order, scheme, settings.dt_rule) : config.order;
  bool ok = true;
  out << "expected order " << expected << '\n';
  for (const auto& [name, slope] : report.slopes) {
    const bool pass = std::abs(slope - expected) <= kSlopeTolerance;
    ok = ok && pass;
    out << std::setprecision(4) << name << ' ' << slope << ' ' << verdict(pass) << '\n';
  }
  if (evolution) {
    RunMonitor total;
    for (const auto& m : monitors) {
      total.merge(m);
    }
    ok = print_monitor(out, total, nse) && ok;
  }
  out << "summary: " << verdict(ok) << '\n';
  return ok ? 0 : 1;
}

int cmd_stability(const RunConfig& config, std::ostream& out)
{
  const LevelSetDomain domain = domain_of(config, "paper");
  const std::vector<std::size_t> ladder = config.ladder.empty() ? Ladder{}.sizes : config.ladder;
  const double nu = config.nu.value_or(1.0);
  const double horizon = config.T.value_or(1.0);
  std::vector<double> constants(ladder.size());
  std::vector<double> hs(ladder.size());
  std::mutex out_mutex;
  for_each_level(ladder.size(), config.workers, [&](std::size_t k) {
    const Level level = make_level(domain, ladder[k], config.seed, config.order, false);
    VectorField u0(level.cloud.size());
    for (std::size_t i = 0; i < u0.size(); ++i) {
      u0[i] = exact::velocity(level.cloud.points[i], 0.0);
    }
    hs[k] = level.cloud.h;
    constants[k] = measure_stability_constant(level.cloud, level.ops, vhe_problem(nu), u0, horizon);
    const std::lock_guard lock(out_mutex);
    out << std::setprecision(6) << "N=" << ladder[k] << " h=" << hs[k] << " C=" << constants[k] << ' '
        << verdict(constants[k] >= kStabilityLow && constants[k] <= kStabilityHigh) << '\n';
  });
  if (!config.out.empty()) {
    std::ofstream file = open_output(config.out);
    file << "n,h,C\n" << std::setprecision(17);
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      file << ladder[k] << ',' << hs[k] << ',' << constants[k] << '\n';
    }
  }
  const bool ok = std::all_of(
    constants.begin(), constants.end(), [](double c) { return c >= kStabilityLow && c <= kStabilityHigh; });
  out << "summary: " << verdict(ok) << '\n';
  return ok ? 0 : 1;
}

int cmd_cavity(const RunConfig& config, std::ostream& out)
{
  CavitySettings s;
  if (config.domain && *config.domain != "square") {
    throw UsageError("the cavity runs on the square domain");
  }
  s.n = config.n.value_or(s.n);
  s.nu = config.nu.value_or(s.nu);
  s.lambda = config.lambda.value_or(s.lambda);
  s.T = config.T.value_or(s.T);
  s.scheme = scheme_or(config, s.scheme);
  if (s.scheme == Scheme::BackwardEuler) {
    throw UsageError("the cavity supports forward-euler, imex1 and imex2");
  }
  s.dt_rule = dt_or(config, "0.2*h^2/nu");
  s.seed = config.seed;
  s.order = config.order;

  GhiaReference reference;
  try {
    reference = read_ghia(config.reference.empty() ? default_reference() : config.reference);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const CavityResult result = run_cavity(s, reference);

  if (!config.out.empty()) {
    std::ofstream field = open_output(config.out + "_field.csv");
    field << "x,y,u,v,p\n" << std::setprecision(17);
    for (std::size_t i = 0; i < result.cloud.size(); ++i) {
      const Vec2& x = result.cloud.points[i];
      field << x.x() << ',' << x.y() << ',' << result.state.u[i].x() << ',' << result.state.u[i].y() << ','
            << result.state.p[i] << '\n';
    }
    std::ofstream lines = open_output(config.out + "_centerlines.csv");
    lines << "line,coord,value_num,value_ref,diff\n" << std::setprecision(17);
    for (const auto& c : result.u_vertical) {
      lines << "u_x0.5," << c.coord << ',' << c.value_num << ',' << c.value_ref << ',' << c.value_num - c.value_ref
            << '\n';
    }
    for (const auto& c : result.v_horizontal) {
      lines << "v_y0.5," << c.coord << ',' << c.value_num << ',' << c.value_ref << ',' << c.value_num - c.value_ref
            << '\n';
    }
  }

  out << std::setprecision(6) << "cavity N=" << result.cloud.size() << " h=" << result.cloud.h << " nu=" << s.nu
      << " T=" << s.T << " steps=" << result.steps << " scheme=" << to_string(s.scheme) << '\n';
  out << "u along x=0.5 (y, num, ref):\n";
  for (const auto& c : result.u_vertical) {
    out << "  " << c.coord << ' ' << c.value_num << ' ' << c.value_ref << '\n';
  }
  out << "v along y=0.5 (x, num, ref):\n";
  for (const auto& c : result.v_horizontal) {
    out << "  " << c.coord << ' ' << c.value_num << ' ' << c.value_ref << '\n';
  }
  out << "max_normal_flow " << result.max_normal_flow << '\n';
  const bool centerline_ok = result.max_diff <= kCavityTolerance;
  out << "centerline_max_diff " << result.max_diff << ' ' << verdict(centerline_ok) << '\n';
  const bool ok = print_monitor(out, result.monitor, true) && centerline_ok;
  out << "summary: " << verdict(ok) << '\n';
  return ok ? 0 : 1;
}

} // namespace

// ---------------------------------------------------------------------------

GhiaReference read_ghia(std::istream& in)
{
  GhiaReference ref;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) {
      continue;
    }
    double coord = 0.0;
    double value = 0.0;
    std::string rest;
    if (!(fields >> coord >> value) || (fields >> rest)) {
      throw CloudFormatError("reference line " + std::to_string(line_no) + ": expected '<u|v> <coord> <value>'");
    }
    if (key == "u") {
      ref.u_vertical.emplace_back(coord, value);
    }
    else if (key == "v") {
      ref.v_horizontal.emplace_back(coord, value);
    }
    else {
      throw CloudFormatError("reference line " + std::to_string(line_no) + ": unknown table '" + key + "'");
    }
  }
  for (const auto* table : { &ref.u_vertical, &ref.v_horizontal }) {
    if (table->empty()) {
      throw CloudFormatError("reference data needs both a 'u' and a 'v' table");
    }
    for (std::size_t i = 0; i < table->size(); ++i) {
      const double c = (*table)[i].first;
      if (!(c >= 0.0 && c <= 1.0) || (i > 0 && !(c > (*table)[i - 1].first))) {
        throw CloudFormatError("reference coordinates must lie in [0, 1] and increase strictly");
      }
    }
  }
  return ref;
}

GhiaReference read_ghia(const std::string& path)
{
  std::ifstream file(path);
  if (!file) {
    throw CloudFormatError("cannot open reference file '" + path + "'");
  }
  return read_ghia(file);
}

Vec2 cavity_lid(const Vec2& x)
{
  constexpr double eps = 1e-9;
  if (std::abs(x.y() - 1.0) <= eps && x.x() > eps && x.x() < 1.0 - eps) {
    return { 1.0, 0.0 };
  }
  return { 0.0, 0.0 };
}

CavityResult run_cavity(const CavitySettings& s, const GhiaReference& reference)
{
  CavityResult result;
  const LevelSetDomain domain = LevelSetDomain::unit_square();
  result.cloud = generate(domain, s.n, s.seed);
  const PointCloud& cloud = result.cloud;
  const OperatorBundle ops = build_operators(cloud, s.order);

  ProblemData data;
  data.f = [](const Vec2&, double) { return Vec2(0.0, 0.0); };
  data.g = [](const Vec2& x, double) { return cavity_lid(x); };
  data.dg_dt = [](const Vec2&, double) { return Vec2(0.0, 0.0); };
  data.nu = s.nu;
  data.lambda = s.lambda;

  const auto [steps, dt] = step_count(s.T, s.dt_rule.dt(cloud.h, s.nu));
  NavierStokesStepper stepper(cloud, ops, data, { s.scheme, dt });
  RunMonitor& monitor = result.monitor;
  const SparseMatrix* A = &stepper.pressure_matrix();
  stepper.set_pressure_observer([&monitor, A](const Eigen::VectorXd& rhs, const BorderedSolution& sol) {
    record_pressure_solve(monitor, *A, rhs, sol);
  });

  FieldState state;
  state.u.assign(cloud.size(), Vec2::Zero());
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    state.u[i] = cavity_lid(cloud.points[i]);
  }
  const auto gt = tangential_data(cloud, data.g, 0.0);
  for (long k = 0; k < steps; ++k) {
    state = stepper.step(state);
    monitor.steps += 1;
    monitor.max_boundary_residual =
      std::max(monitor.max_boundary_residual, boundary_residual(cloud, ops, state.u, gt));
  }
  result.steps = steps;

  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    result.max_normal_flow = std::max(result.max_normal_flow, std::abs(cloud.normal(i).dot(state.u[i])));
  }
  const auto sample = [&](const Vec2& at, int component) {
    const StencilRow row = evaluation_weights(cloud, at, s.order);
    double value = 0.0;
    for (std::size_t j = 0; j < row.neighbors.size(); ++j) {
      value += row.weights[j] * state.u[row.neighbors[j]](component);
    }
    return value;
  };
  for (const auto& [y, u] : reference.u_vertical) {
    result.u_vertical.push_back({ y, sample(Vec2(0.5, y), 0), u });
  }
  for (const auto& [x, v] : reference.v_horizontal) {
    result.v_horizontal.push_back({ x, sample(Vec2(x, 0.5), 1), v });
  }
  for (const auto* line : { &result.u_vertical, &result.v_horizontal }) {
    for (const auto& c : *line) {
      result.max_diff = std::max(result.max_diff, std::abs(c.value_num - c.value_ref));
    }
  }
  result.state = std::move(state);
  return result;
}

void for_each_level(std::size_t count, int workers, const std::function<void(std::size_t)>& fn)
{
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) {
      fn(k);
    }
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

int expected_order(const std::string& problem, int order, Scheme scheme, const DtRule& rule)
{
  if (problem == "vpe") {
    return order;
  }
  const int time_order = scheme == Scheme::Imex2 ? 2 : 1;
  int dt_power = 0;
  switch (rule.kind) {
    case DtRule::Kind::Diffusive:
      dt_power = 2;
      break;
    case DtRule::Kind::Linear:
      dt_power = 1;
      break;
    case DtRule::Kind::Absolute:
      dt_power = 0;
      break;
  }
  return dt_power == 0 ? order : std::min(order, time_order * dt_power);
}

RunConfig parse_args(int argc, const char* const* argv, std::ostream& out, bool& help)
{
  RunConfig config;
  CLI::App app{ "Meshfree finite difference solvers for vector Poisson, heat and Navier-Stokes problems", "mfd" };
  app.set_config("--config", "", "flat key=value configuration file; command-line flags win");
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--domain", config.domain, "domain: square, paper or disk");
  app.add_option("--n", config.n, "number of points");
  app.add_option("--ladder", config.ladder, "comma-separated point counts")->delimiter(',');
  app.add_option("--order", config.order, "stencil order k")->check(CLI::Range(1, 4));
  app.add_option("--scheme", config.scheme, "forward-euler, backward-euler, imex1 or imex2");
  app.add_option("--dt", config.dt, "time step rule: c*h^2/nu, c*h or an absolute value");
  app.add_option("--nu", config.nu, "viscosity");
  app.add_option("--lambda", config.lambda, "boundary relaxation of the pressure condition");
  app.add_option("--T", config.T, "final time (stability: bisection horizon)");
  app.add_option("--seed", config.seed, "random seed");
  app.add_option("-o,--out", config.out, "output file (cavity: output prefix)");
  app.add_option("--reference", config.reference, "cavity reference data file");
  app.add_option("--workers", config.workers, "ladder levels run concurrently")->check(CLI::PositiveNumber);

  app.add_subcommand("cloud", "generate a point cloud and print diagnostics");
  app.add_subcommand("vpe", "solve the manufactured vector Poisson problem");
  app.add_subcommand("vhe", "run the manufactured vector heat problem");
  app.add_subcommand("nse", "run the manufactured Navier-Stokes problem");
  auto* convergence = app.add_subcommand("convergence", "refinement ladder with fitted convergence orders");
  convergence->add_option("problem", config.problem, "vpe, vhe or nse")
    ->required()
    ->check(CLI::IsMember({ "vpe", "vhe", "nse" }));
  app.add_subcommand("cavity", "lid-driven cavity at Re = 100 against reference centerlines");
  app.add_subcommand("stability", "measure the forward Euler stability constant over a ladder");

  help = false;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    help = true;
    return config;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    help = true;
    return config;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  config.command = app.get_subcommands().front()->get_name();
  check_positive(config.nu, "nu");
  check_positive(config.T, "T");
  if (config.lambda && *config.lambda < 0.0) {
    throw UsageError("--lambda must be non-negative");
  }
  return config;
}

int run_command(const RunConfig& config, std::ostream& out)
{
  if (config.command == "cloud") {
    return cmd_cloud(config, out);
  }
  if (config.command == "vpe") {
    return cmd_vpe(config, out);
  }
  if (config.command == "vhe" || config.command == "nse") {
    return cmd_evolution(config, config.command, out);
  }
  if (config.command == "convergence") {
    return cmd_convergence(config, out);
  }
  if (config.command == "cavity") {
    return cmd_cavity(config, out);
  }
  if (config.command == "stability") {
    return cmd_stability(config, out);
  }
  throw UsageError("unknown command '" + config.command + "'");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  try {
    bool help = false;
    const RunConfig config = parse_args(argc, argv, out, help);
    if (help) {
      return 0;
    }
    return run_command(config, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    out << "summary: usage-error\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    out << "summary: fail\n";
    return 1;
  }
}

} // namespace mfd::cli
