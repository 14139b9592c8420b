#pragma once

#include "mfd/errors.hpp"
#include "mfd/verify.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfd::cli {

/// Parsed command line. Unset optionals take per-command defaults.
struct RunConfig {
  std::string command;
  std::string problem; // convergence: vpe | vhe | nse
  std::optional<std::string> domain;
  std::optional<std::size_t> n;
  std::vector<std::size_t> ladder;
  int order = 2;
  std::optional<std::string> scheme;
  std::optional<std::string> dt;
  std::optional<double> nu;
  std::optional<double> lambda;
  std::optional<double> T;
  std::uint64_t seed = 7;
  std::string out;
  std::string reference;
  int workers = 1;
};

/// Error in the command line or configuration (exit status 2).
class UsageError : public Error {
public:
  using Error::Error;
};

/// Centerline tables for the lid-driven cavity at Re = 100.
struct GhiaReference {
  std::vector<std::pair<double, double>> u_vertical;   // (y, u) along x = 0.5
  std::vector<std::pair<double, double>> v_horizontal; // (x, v) along y = 0.5
};

/**
 * Lines "u <y> <u>" or "v <x> <v>"; '#' starts a comment. Both tables must be
 * non-empty with coordinates in [0, 1], strictly increasing.
 */
GhiaReference read_ghia(const std::string& path);
GhiaReference read_ghia(std::istream& in);

struct CenterlineSample {
  double coord = 0.0;
  double value_num = 0.0;
  double value_ref = 0.0;
};

struct CavitySettings {
  std::size_t n = 4000;
  double nu = 0.01;
  // 30 diverges within t < 0.2 at the lid corners; 300 is the smallest of
  // {30, 100, 300} that runs to T = 20 with the default step.
  double lambda = 300.0;
  double T = 20.0;
  Scheme scheme = Scheme::ForwardEuler;
  DtRule dt_rule{ DtRule::Kind::Diffusive, 0.2 };
  std::uint64_t seed = 7;
  int order = 2;
};

struct CavityResult {
  PointCloud cloud;
  FieldState state;
  std::vector<CenterlineSample> u_vertical;
  std::vector<CenterlineSample> v_horizontal;
  double max_diff = 0.0;
  double max_normal_flow = 0.0;
  long steps = 0;
  RunMonitor monitor;
};

/// Lid velocity (1, 0) on y = 1 without the corners, zero elsewhere.
Vec2 cavity_lid(const Vec2& x);

CavityResult run_cavity(const CavitySettings& settings, const GhiaReference& reference);

/// Runs fn(level) for level = 0..count-1 on up to `workers` threads.
void for_each_level(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// Expected convergence order of a manufactured run.
int expected_order(const std::string& problem, int order, Scheme scheme, const DtRule& rule);

/// Parses argv into a RunConfig; throws UsageError. `help` is set when only help was requested.
RunConfig parse_args(int argc, const char* const* argv, std::ostream& out, bool& help);

/// Entry point of the mfd tool. Returns 0 pass, 1 failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int run_command(const RunConfig& config, std::ostream& out);

} // namespace mfd::cli
