/// Acceptance suite: one pass/fail line per criterion, exit status 0 iff all pass.
///
/// Ladders run on the "paper" domain (disk of radius 1/2 over the rectangle
/// (0,1) x (0,1/2)) with N = 500 ... 8000 and seed 7.

#include "mfd/errors.hpp"
#include "mfd/verify.hpp"
#include "mfd_cli/cli.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef MFD_DATA_DIR
#define MFD_DATA_DIR "data"
#endif

namespace {

using namespace mfd;

constexpr double kSlopeTolerance = 0.35;
constexpr double kResidualTolerance = 1e-8;
constexpr double kGridTolerance = 1e-12;
constexpr double kExactnessTolerance = 1e-9;
constexpr double kCovarianceTolerance = 1e-9;
constexpr double kStabilityLow = 0.15;
constexpr double kStabilityHigh = 0.35;
constexpr double kCavityTolerance = 0.1;
constexpr double kDecayFloorFactor = 10.0;
constexpr std::size_t kDecayTransient = 3;

// ============================================================================
// Shared state
// ============================================================================

struct Level {
  PointCloud cloud;
  std::unique_ptr<PostProcessor> post;
  std::map<int, OperatorBundle> ops; // by order; order 2 includes extrapolation
};

class LevelCache {
public:
  explicit LevelCache(std::vector<std::size_t> sizes)
    : sizes_(std::move(sizes))
  {
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }

  Level& level(std::size_t n)
  {
    auto it = levels_.find(n);
    if (it == levels_.end()) {
      Level l;
      l.cloud = generate(LevelSetDomain::paper(), n, 7);
      l.post = std::make_unique<PostProcessor>(l.cloud);
      it = levels_.emplace(n, std::move(l)).first;
    }
    return it->second;
  }

  const OperatorBundle& ops(std::size_t n, int order)
  {
    Level& l = level(n);
    auto it = l.ops.find(order);
    if (it == l.ops.end()) {
      it = l.ops.emplace(order, build_operators(l.cloud, order, {}, order == 2)).first;
    }
    return it->second;
  }

private:
  std::vector<std::size_t> sizes_;
  std::map<std::size_t, Level> levels_;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 3)
{
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

class Timer {
public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void print_level(std::size_t n, const ErrorReport& r, double seconds)
{
  std::cout << "    N=" << n << " h=" << fmt(r.h, 4) << " err_u=" << fmt(r.err_u) << " err_grad_u=" << fmt(r.err_grad_u)
            << " err_div_u=" << fmt(r.err_div_u);
  if (r.err_p) {
    std::cout << " err_p=" << fmt(*r.err_p) << " err_grad_p=" << fmt(*r.err_grad_p);
  }
  std::cout << " (" << fmt(seconds) << " s)\n";
}

/// Checks the listed slopes against `expected`; appends "name=slope" to detail.
bool check_slopes(const ConvergenceReport& report,
                  const std::vector<std::string>& quantities,
                  double expected,
                  std::string& detail)
{
  bool ok = true;
  for (const auto& q : quantities) {
    const auto slope = report.slope(q);
    const bool pass = slope && std::abs(*slope - expected) <= kSlopeTolerance;
    ok = ok && pass;
    detail += " " + q + "=" + (slope ? fmt(*slope) : std::string("n/a")) + (pass ? "" : "(!)");
    std::cout << "    slope " << q << ' ' << (slope ? fmt(*slope, 4) : std::string("n/a")) << ' '
              << (pass ? "pass" : "fail") << '\n';
  }
  return ok;
}

// ============================================================================
// 1. VPE convergence at orders 1, 2, 3
// ============================================================================

Verdict criterion_vpe(LevelCache& ladder)
{
  Verdict v{ true, "" };
  for (int order : { 1, 2, 3 }) {
    std::cout << "  vpe order " << order << '\n';
    std::vector<ErrorReport> reports;
    for (std::size_t n : ladder.sizes()) {
      const Timer timer;
      Level& l = ladder.level(n);
      reports.push_back(vpe_level(l.cloud, ladder.ops(n, order), *l.post));
      print_level(n, reports.back(), timer.seconds());
    }
    v.detail += " k=" + std::to_string(order) + ":";
    const bool ok = check_slopes(
      make_convergence_report(reports), { "err_u", "err_grad_u", "err_div_u" }, order, v.detail);
    v.pass = v.pass && ok;
  }
  return v;
}

// ============================================================================
// 2. VHE convergence: forward Euler, backward Euler, ImEx2
// ============================================================================

Verdict criterion_vhe(LevelCache& ladder, RunMonitor& monitor)
{
  struct Case {
    Scheme scheme;
    const char* dt;
    double T;
    double expected;
  };
  // Backward Euler runs to T = 20 so that the coarsest level (dt = 100 h ~ 4.7)
  // still takes several steps.
  const std::vector<Case> cases{
    { Scheme::ForwardEuler, "0.2*h^2/nu", 1.0, 2.0 },
    { Scheme::BackwardEuler, "100*h", 20.0, 1.0 },
    { Scheme::Imex2, "h", 1.0, 2.0 },
  };
  Verdict v{ true, "" };
  for (const auto& c : cases) {
    EvolutionSettings s;
    s.scheme = c.scheme;
    s.dt_rule = DtRule::parse(c.dt);
    s.nu = 1.0;
    s.T = c.T;
    std::cout << "  vhe " << to_string(c.scheme) << " dt=" << c.dt << " T=" << c.T << '\n';
    std::vector<ErrorReport> reports;
    for (std::size_t n : ladder.sizes()) {
      const Timer timer;
      Level& l = ladder.level(n);
      reports.push_back(vhe_level(l.cloud, ladder.ops(n, 2), *l.post, s, &monitor));
      print_level(n, reports.back(), timer.seconds());
    }
    v.detail += " " + to_string(c.scheme) + ":";
    const bool ok = check_slopes(make_convergence_report(reports), { "err_u", "err_grad_u" }, c.expected, v.detail);
    v.pass = v.pass && ok;
  }
  return v;
}

// ============================================================================
// 3. Forward Euler stability constant
// ============================================================================

Verdict criterion_stability(LevelCache& ladder)
{
  Verdict v{ true, "" };
  for (std::size_t n : ladder.sizes()) {
    const Timer timer;
    Level& l = ladder.level(n);
    VectorField u0(l.cloud.size());
    for (std::size_t i = 0; i < u0.size(); ++i) {
      u0[i] = exact::velocity(l.cloud.points[i], 0.0);
    }
    const double c = measure_stability_constant(l.cloud, ladder.ops(n, 2), vhe_problem(1.0), u0, 1.0);
    const bool ok = c >= kStabilityLow && c <= kStabilityHigh;
    v.pass = v.pass && ok;
    v.detail += " N" + std::to_string(n) + ":C=" + fmt(c) + (ok ? "" : "(!)");
    std::cout << "    N=" << n << " C=" << fmt(c, 4) << ' ' << (ok ? "pass" : "fail") << " (" << fmt(timer.seconds())
              << " s)\n";
  }
  v.detail += " band=[" + fmt(kStabilityLow) + "," + fmt(kStabilityHigh) + "]";
  return v;
}

// ============================================================================
// 4. NSE convergence: forward Euler and ImEx2
// ============================================================================

Verdict criterion_nse(LevelCache& ladder, RunMonitor& monitor)
{
  struct Case {
    Scheme scheme;
    const char* dt;
    double T;
  };
  // Forward Euler with dt = 0.2 h^2 needs ~3800 steps per unit time at
  // N = 8000; its time error is O(h^2), so T = 0.1 already isolates the
  // spatial order.
  const std::vector<Case> cases{
    { Scheme::ForwardEuler, "0.2*h^2/nu", 0.1 },
    { Scheme::Imex2, "0.2*h", 1.0 },
  };
  Verdict v{ true, "" };
  for (const auto& c : cases) {
    EvolutionSettings s;
    s.scheme = c.scheme;
    s.dt_rule = DtRule::parse(c.dt);
    s.nu = 1.0;
    s.lambda = 30.0;
    s.T = c.T;
    std::cout << "  nse " << to_string(c.scheme) << " dt=" << c.dt << " T=" << c.T << '\n';
    std::vector<ErrorReport> reports;
    for (std::size_t n : ladder.sizes()) {
      const Timer timer;
      Level& l = ladder.level(n);
      reports.push_back(nse_level(l.cloud, ladder.ops(n, 2), *l.post, s, &monitor));
      print_level(n, reports.back(), timer.seconds());
    }
    v.detail += " " + to_string(c.scheme) + ":";
    const bool ok = check_slopes(make_convergence_report(reports),
                                 { "err_u", "err_grad_u", "err_div_u", "err_p", "err_grad_p" },
                                 2.0,
                                 v.detail);
    v.pass = v.pass && ok;
  }
  return v;
}

// ============================================================================
// 5. Divergence decay from a perturbed initial field
// ============================================================================

/// Decay after at most kDecayTransient steps, monotone until the perturbed
/// series is within 2x of the unperturbed one, and within 10x of it at T.
bool decays(const std::vector<double>& perturbed, const std::vector<double>& floor, std::string& why)
{
  if (perturbed.size() != floor.size() || perturbed.size() <= kDecayTransient) {
    why = "series too short";
    return false;
  }
  if (!(perturbed[kDecayTransient] < perturbed[0])) {
    why = "no decay after " + std::to_string(kDecayTransient) + " steps";
    return false;
  }
  for (std::size_t k = kDecayTransient + 1; k < perturbed.size(); ++k) {
    if (perturbed[k - 1] <= 2.0 * floor[k - 1]) {
      break;
    }
    if (perturbed[k] > perturbed[k - 1]) {
      why = "growth at step " + std::to_string(k);
      return false;
    }
  }
  if (!(perturbed.back() <= kDecayFloorFactor * floor.back())) {
    why = "final " + fmt(perturbed.back()) + " above " + fmt(kDecayFloorFactor) + "x floor " + fmt(floor.back());
    return false;
  }
  why = "final " + fmt(perturbed.back()) + " floor " + fmt(floor.back());
  return true;
}

Verdict criterion_decay(LevelCache& ladder, RunMonitor& monitor)
{
  const std::size_t n = 2000;
  Level& l = ladder.level(n);
  const OperatorBundle& ops = ladder.ops(n, 2);
  struct Case {
    EvolutionProblem problem;
    const char* name;
    const char* dt;
  };
  const std::vector<Case> cases{
    { EvolutionProblem::Heat, "vhe", "h" },
    { EvolutionProblem::NavierStokes, "nse", "0.2*h" },
  };
  Verdict v{ true, "" };
  for (const auto& c : cases) {
    EvolutionSettings s;
    s.scheme = Scheme::Imex2;
    s.dt_rule = DtRule::parse(c.dt);
    s.nu = 1.0;
    s.lambda = 30.0;
    s.T = 1.0;
    const Timer timer;
    const auto perturbed = divergence_decay_run(l.cloud, ops, *l.post, c.problem, s, 0.1, &monitor);
    const auto floor = divergence_decay_run(l.cloud, ops, *l.post, c.problem, s, 0.0, &monitor);
    std::string why;
    const bool ok = decays(perturbed, floor, why);
    v.pass = v.pass && ok;
    v.detail += std::string(" ") + c.name + ": " + why + (ok ? "" : "(!)");
    std::cout << "    " << c.name << " N=" << n << " steps=" << perturbed.size() - 1 << " |div u| " << fmt(perturbed[0])
              << " -> " << fmt(perturbed.back()) << " (unperturbed " << fmt(floor.back()) << ") "
              << (ok ? "pass" : "fail") << " (" << fmt(timer.seconds()) << " s)\n";
  }
  return v;
}

// ============================================================================
// 6. Stencil oracles
// ============================================================================

double row_scale(const StencilRow& row)
{
  double s = std::abs(row.diagonal);
  for (double w : row.weights) {
    s += std::abs(w);
  }
  return s;
}

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

/// Relative deviation of axial-neighbor stencils on a grid from the classical ones.
double grid_equivalence()
{
  const double h = 0.05;
  PointCloud cloud;
  for (int j = 0; j < 5; ++j) {
    for (int i = 0; i < 5; ++i) {
      cloud.points.emplace_back(i * h, j * h);
      cloud.kinds.push_back(PointKind::Interior);
    }
  }
  cloud.n_interior = cloud.points.size();
  cloud.h = h;
  Neighborhood axial;
  axial.indices.resize(cloud.size());
  axial.radius.assign(cloud.size(), 1.01 * h);
  axial.indices[12] = { 13, 11, 17, 7 };
  const std::vector<std::size_t> target{ 12 };

  double worst = 0.0;
  const auto lap = operator_weights(cloud, axial, { Operator::Laplacian, 1 }, target).rows[0];
  const double L = 1.0 / (h * h);
  for (double w : lap.weights) {
    worst = std::max(worst, std::abs(w - L) / L);
  }
  worst = std::max(worst, std::abs(lap.diagonal + 4.0 * L) / (4.0 * L));
  const double D = 0.5 / h;
  for (int order : { 1, 2 }) {
    const auto dx = operator_weights(cloud, axial, { Operator::Dx, order }, target).rows[0];
    const auto dy = operator_weights(cloud, axial, { Operator::Dy, order }, target).rows[0];
    const double ex[] = { D, -D, 0.0, 0.0 };
    const double ey[] = { 0.0, 0.0, D, -D };
    for (std::size_t k = 0; k < 4; ++k) {
      worst = std::max(worst, std::abs(dx.weights[k] - ex[k]) / D);
      worst = std::max(worst, std::abs(dy.weights[k] - ey[k]) / D);
    }
    worst = std::max({ worst, std::abs(dx.diagonal) / D, std::abs(dy.diagonal) / D });
  }
  return worst;
}

double polynomial_exactness(const PointCloud& cloud, const StencilSet& set)
{
  const OperatorSpec spec = set.spec;
  const double s = cloud.h;
  double worst = 0.0;
  for (const auto& row : set.rows) {
    const Vec2& c = cloud.points[row.center];
    const double scale = row_scale(row);
    for (int deg = 0; deg <= spec.degree(); ++deg) {
      for (int a = deg; a >= 0; --a) {
        const int b = deg - a;
        const auto m = [&](const Vec2& x) {
          return std::pow((x.x() - c.x()) / s, a) * std::pow((x.y() - c.y()) / s, b);
        };
        double value = row.diagonal * m(c);
        double mag = 1.0;
        for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
          const double mk = m(cloud.points[row.neighbors[k]]);
          value += row.weights[k] * mk;
          mag = std::max(mag, std::abs(mk));
        }
        worst = std::max(worst, std::abs(value - exact_monomial(spec.op, a, b, s)) / (scale * mag));
      }
    }
  }
  return worst;
}

double scaling_covariance(const PointCloud& cloud, const StencilSet& base)
{
  const double s = 3.7;
  PointCloud scaled = cloud;
  for (auto& p : scaled.points) {
    p = s * p + Vec2(-2.0, 5.0);
  }
  scaled.h *= s;
  const auto moved = operator_weights(scaled, base.spec, all_indices(cloud));
  const double factor = std::pow(s, -base.spec.differential_order());
  double worst = 0.0;
  for (std::size_t r = 0; r < base.size(); ++r) {
    const StencilRow& a = base.rows[r];
    const StencilRow& b = moved.rows[r];
    if (a.neighbors != b.neighbors) {
      return std::numeric_limits<double>::infinity();
    }
    const double scale = factor * row_scale(a);
    worst = std::max(worst, std::abs(b.diagonal - factor * a.diagonal) / scale);
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
      worst = std::max(worst, std::abs(b.weights[k] - factor * a.weights[k]) / scale);
    }
  }
  return worst;
}

Verdict criterion_stencils(LevelCache& ladder)
{
  const PointCloud& cloud = ladder.level(1000).cloud;
  const double grid = grid_equivalence();
  double exactness = 0.0;
  double covariance = 0.0;
  for (Operator op : { Operator::Laplacian, Operator::Dx, Operator::Dy, Operator::Identity }) {
    for (int order = 1; order <= 4; ++order) {
      const auto set = operator_weights(cloud, { op, order }, all_indices(cloud));
      exactness = std::max(exactness, polynomial_exactness(cloud, set));
      covariance = std::max(covariance, scaling_covariance(cloud, set));
    }
  }
  const bool ok_grid = grid <= kGridTolerance;
  const bool ok_exact = exactness <= kExactnessTolerance;
  const bool ok_cov = covariance <= kCovarianceTolerance;
  std::cout << "    grid equivalence " << fmt(grid) << ", polynomial exactness " << fmt(exactness)
            << ", scaling covariance " << fmt(covariance) << " (16 operator/order pairs, N=" << cloud.size() << ")\n";
  return { ok_grid && ok_exact && ok_cov,
           " grid=" + fmt(grid) + (ok_grid ? "" : "(!)") + " exactness=" + fmt(exactness) + (ok_exact ? "" : "(!)") +
             " covariance=" + fmt(covariance) + (ok_cov ? "" : "(!)") };
}

// ============================================================================
// 7. Bordered-solve contract
// ============================================================================

Verdict criterion_bordered(LevelCache& ladder, const RunMonitor& runs)
{
  // Deliberately incompatible right-hand sides on a real pressure matrix.
  RunMonitor forced;
  const std::size_t n = 2000;
  const SparseMatrix A = assemble_pressure_matrix(ladder.level(n).cloud, ladder.ops(n, 2));
  const BorderedSolver solver(A);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (double offset : { 0.0, 1.0, 1e3 }) {
    Eigen::VectorXd r(A.rows());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      r(i) = g(rng) + offset;
    }
    record_pressure_solve(forced, A, r, solver.solve(r));
  }
  RunMonitor total = runs;
  total.merge(forced);
  const bool ok = total.pressure_solves > forced.pressure_solves && total.max_bordered_residual <= kResidualTolerance &&
                  total.max_gauge <= kResidualTolerance;
  std::cout << "    " << total.pressure_solves << " pressure solves (" << forced.pressure_solves
            << " incompatible): residual " << fmt(total.max_bordered_residual) << ", gauge " << fmt(total.max_gauge)
            << ", max |alpha| " << fmt(total.max_alpha) << " (incompatible " << fmt(forced.max_alpha) << ")\n";
  return { ok,
           " solves=" + std::to_string(total.pressure_solves) + " residual=" + fmt(total.max_bordered_residual) +
             " gauge=" + fmt(total.max_gauge) };
}

// ============================================================================
// 8. Lid-driven cavity
// ============================================================================

Verdict criterion_cavity(RunMonitor& monitor)
{
  const auto reference = cli::read_ghia(std::string(MFD_DATA_DIR) + "/ghia_re100.txt");
  const cli::CavitySettings settings;
  const Timer timer;
  const auto result = cli::run_cavity(settings, reference);
  monitor.merge(result.monitor);
  std::cout << "    N=" << result.cloud.size() << " T=" << settings.T << " steps=" << result.steps
            << " lambda=" << settings.lambda << " (" << fmt(timer.seconds()) << " s)\n";
  std::cout << "    u along x=0.5 (y, num, ref):";
  for (const auto& c : result.u_vertical) {
    std::cout << " (" << c.coord << ", " << fmt(c.value_num) << ", " << c.value_ref << ')';
  }
  std::cout << "\n    v along y=0.5 (x, num, ref):";
  for (const auto& c : result.v_horizontal) {
    std::cout << " (" << c.coord << ", " << fmt(c.value_num) << ", " << c.value_ref << ')';
  }
  std::cout << "\n    max |n.u| on the boundary " << fmt(result.max_normal_flow) << '\n';
  const bool ok = result.max_diff <= kCavityTolerance;
  return { ok, " max_diff=" + fmt(result.max_diff) + " tolerance=" + fmt(kCavityTolerance) };
}

// ============================================================================
// 9. Boundary residuals
// ============================================================================

Verdict criterion_boundary(const RunMonitor& monitor)
{
  const bool ok = monitor.steps > 0 && monitor.max_boundary_residual <= kResidualTolerance;
  return { ok,
           " steps=" + std::to_string(monitor.steps) + " max_scaled_residual=" + fmt(monitor.max_boundary_residual) };
}

} // namespace

int main()
{
  LevelCache ladder(mfd::Ladder{}.sizes);
  RunMonitor evolution;
  RunMonitor pressure;
  std::vector<std::pair<std::string, Verdict>> results(9);

  const auto run = [&](int id, const char* name, const std::function<Verdict()>& fn) {
    std::cout << "[" << id << "] " << name << '\n' << std::flush;
    const Timer timer;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = { false, std::string(" error: ") + e.what() };
    }
    std::cout << "  (" << fmt(timer.seconds()) << " s)\n" << std::flush;
    results[static_cast<std::size_t>(id - 1)] = { name, v };
  };

  run(6, "stencil oracles", [&] { return criterion_stencils(ladder); });
  run(1, "vpe convergence", [&] { return criterion_vpe(ladder); });
  run(2, "vhe convergence", [&] { return criterion_vhe(ladder, evolution); });
  run(3, "stability constant", [&] { return criterion_stability(ladder); });
  run(4, "nse convergence", [&] {
    RunMonitor m;
    const Verdict v = criterion_nse(ladder, m);
    evolution.merge(m);
    pressure.merge(m);
    return v;
  });
  run(5, "divergence decay", [&] {
    RunMonitor m;
    const Verdict v = criterion_decay(ladder, m);
    evolution.merge(m);
    pressure.merge(m);
    return v;
  });
  run(8, "lid-driven cavity", [&] {
    RunMonitor m;
    const Verdict v = criterion_cavity(m);
    evolution.merge(m);
    pressure.merge(m);
    return v;
  });
  run(7, "bordered-solve contract", [&] { return criterion_bordered(ladder, pressure); });
  run(9, "boundary residuals", [&] { return criterion_boundary(evolution); });

  std::cout << "\nsummary\n";
  bool all = true;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& [name, v] = results[k];
    all = all && v.pass;
    std::cout << "criterion " << k + 1 << " " << name << ": " << (v.pass ? "PASS" : "FAIL") << " |" << v.detail
              << '\n';
  }
  std::cout << "acceptance: " << (all ? "PASS" : "FAIL") << '\n';
  return all ? 0 : 1;
}
