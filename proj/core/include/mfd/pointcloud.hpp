#pragma once

#include "mfd/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mfd {

enum class PointKind : std::uint8_t { Interior = 0, Boundary = 1 };

/**
 * Unstructured point cloud: interior points occupy indices [0, n_interior),
 * boundary points [n_interior, size()). Boundary normals are stored only for
 * boundary points, in the same order.
 */
struct PointCloud {
  std::vector<Vec2> points;
  std::vector<PointKind> kinds;
  std::vector<Vec2> normals; // size n_boundary
  double h = 0.0;
  std::size_t n_interior = 0;
  std::size_t n_boundary = 0;

  std::size_t size() const noexcept { return points.size(); }
  bool is_boundary(std::size_t i) const noexcept { return i >= n_interior; }
  const Vec2& normal(std::size_t i) const { return normals.at(i - n_interior); }

  /// Checks the ordering and count invariants; throws InvalidArgument.
  void check_layout() const;
};

/// Averaged resolution from hexagonal-packing area accounting.
double resolution_h(double domain_area, std::size_t n_interior, std::size_t n_boundary);

struct GenerationParams {
  /// Repulsion cut-off radius, in units of the estimated spacing.
  double interaction_radius = 1.5;
  /// Interior points closer than this (x h) to the boundary snap onto it.
  double boundary_band = 0.4;
  /// Force cap v_max = vmax_factor / h^2.
  double vmax_factor = 10.0;
  /// Pseudo-time step, in units of h^3.
  double pseudo_time_step = 0.1;
  /// Per-iteration displacement cap, in units of h.
  double max_step = 0.3;
  /// Convergence when the largest displacement falls below tolerance * h.
  double tolerance = 1e-3;
  int max_iterations = 2000;
};

/// Relaxes N seeded random points by pairwise repulsion. Deterministic for a
/// given (domain, n, seed, params). Throws InvalidArgument for n < 20 and
/// GenerationStalled if the relaxation does not settle.
PointCloud generate(const LevelSetDomain& domain,
                    std::size_t n,
                    std::uint64_t seed,
                    const GenerationParams& params = {});

/// Per-point circular neighborhoods B_i (excluding i itself).
struct Neighborhood {
  std::vector<std::vector<std::size_t>> indices;
  std::vector<double> radius;

  std::size_t size() const noexcept { return indices.size(); }
};

/// Radius starts at base_radius_factor * h and grows by 1.2 until each point
/// has at least required_count neighbors. Throws NeighborhoodExhausted when the
/// radius passes the cloud diameter first.
Neighborhood neighbors(const PointCloud& cloud, double base_radius_factor, std::size_t required_count);

/// Same, with a per-point requirement.
Neighborhood neighbors(const PointCloud& cloud,
                       double base_radius_factor,
                       std::span<const std::size_t> required_count);

struct CloudDiagnostics {
  double min_spacing_over_h = 0.0;
  std::size_t min_neighbors = 0;
  std::size_t max_neighbors = 0;
  std::size_t band_violations = 0;
  double max_boundary_phi = 0.0;
  bool duplicate_points = false;
  bool band_violation = false;
  bool off_boundary = false;
  bool ordering_violation = false;

  bool ok() const noexcept { return !(duplicate_points || band_violation || off_boundary || ordering_violation); }
};

/// Report-only sanity check of a cloud against its domain.
CloudDiagnostics validate(const PointCloud& cloud,
                          const Neighborhood& neighborhood,
                          const LevelSetDomain& domain,
                          double band_factor = 0.4);

/// Text format: "N N_i N_b", then "x y k [nx ny]" per point, interior first.
void write_cloud(std::ostream& out, const PointCloud& cloud);
void write_cloud(const std::string& path, const PointCloud& cloud);
/// Rejects files that break the count or ordering invariants.
PointCloud read_cloud(std::istream& in, double domain_area);
PointCloud read_cloud(const std::string& path, double domain_area);

} // namespace mfd
