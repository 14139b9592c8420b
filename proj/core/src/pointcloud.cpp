#include "mfd/pointcloud.hpp"

#include "mfd/errors.hpp"
#include "mfd/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace mfd {

void PointCloud::check_layout() const
{
  if (n_interior + n_boundary != points.size() || kinds.size() != points.size() ||
      normals.size() != n_boundary) {
    throw InvalidArgument("point cloud counts are inconsistent");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const PointKind expected = i < n_interior ? PointKind::Interior : PointKind::Boundary;
    if (kinds[i] != expected) {
      throw InvalidArgument("point cloud ordering invariant violated at index " + std::to_string(i));
    }
  }
}

double resolution_h(double domain_area, std::size_t n_interior, std::size_t n_boundary)
{
  const double weighted = 2.0 * static_cast<double>(n_interior) + static_cast<double>(n_boundary);
  if (!(domain_area > 0.0) || !(weighted > 0.0)) {
    throw InvalidArgument("resolution_h needs a positive area and at least one point");
  }
  return std::sqrt(4.0 * domain_area / (std::sqrt(3.0) * weighted));
}

namespace {

// Uniform double in [0,1) from the top 53 bits of a 64-bit Mersenne twister
// draw; spelled out so the sequence does not depend on the standard library.
double uniform01(std::mt19937_64& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Spacing for n points when about perimeter/h of them sit on the boundary.
double estimate_spacing(const LevelSetDomain& domain, std::size_t n)
{
  const double area = domain.area();
  const double perimeter = domain.perimeter();
  double h = std::sqrt(4.0 * area / (std::sqrt(3.0) * 2.0 * static_cast<double>(n)));
  for (int it = 0; it < 20; ++it) {
    const double nb = std::min(perimeter / h, static_cast<double>(n));
    h = std::sqrt(4.0 * area / (std::sqrt(3.0) * (2.0 * static_cast<double>(n) - nb)));
  }
  return h;
}

} // namespace

PointCloud generate(const LevelSetDomain& domain, std::size_t n, std::uint64_t seed, const GenerationParams& params)
{
  if (n < 20) {
    throw InvalidArgument("point cloud generation needs at least 20 points");
  }
  const double h_est = estimate_spacing(domain, n);
  const double cutoff = params.interaction_radius * h_est;
  const double cutoff_force = 1.0 / (cutoff * cutoff);
  const double vmax = params.vmax_factor / (h_est * h_est);
  const double tau = params.pseudo_time_step * h_est * h_est * h_est;
  const double max_step = params.max_step * h_est;
  const double band = params.boundary_band * h_est;

  std::vector<Vec2> pts;
  std::vector<char> on_boundary;
  std::vector<char> fixed;
  pts.reserve(n);
  for (const auto& c : domain.corners()) {
    pts.push_back(c.point);
    on_boundary.push_back(1);
    fixed.push_back(1);
  }
  std::mt19937_64 rng(seed);
  const Box2& box = domain.bounding_box();
  while (pts.size() < n) {
    const Vec2 x(box.min().x() + uniform01(rng) * box.sizes().x(),
                 box.min().y() + uniform01(rng) * box.sizes().y());
    if (domain.phi(x) < 0.0) {
      pts.push_back(x);
      on_boundary.push_back(0);
      fixed.push_back(0);
    }
  }

  std::vector<Vec2> next(n);
  double last_motion = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    const SpatialIndex index(pts, cutoff);
    double motion = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) {
        next[i] = pts[i];
        continue;
      }
      Vec2 force = Vec2::Zero();
      index.for_each_within(pts[i], cutoff, [&](std::size_t j, double d2) {
        if (j == i) {
          return;
        }
        if (d2 == 0.0) {
          force += Vec2(i < j ? -vmax : vmax, 0.0);
          return;
        }
        const double d = std::sqrt(d2);
        // Shifted so the force vanishes continuously at the cut-off radius.
        const double magnitude = std::min(1.0 / d2, vmax) - cutoff_force;
        force += magnitude * (pts[i] - pts[j]) / d;
      });
      Vec2 step = tau * force;
      const double len = step.norm();
      if (len > max_step) {
        step *= max_step / len;
      }
      Vec2 x = pts[i] + step;
      if (on_boundary[i] || domain.phi(x) > -band) {
        x = domain.project_to_boundary(x);
        on_boundary[i] = 1;
      }
      motion = std::max(motion, (x - pts[i]).norm());
      next[i] = x;
    }
    std::swap(pts, next);
    last_motion = motion;
    if (motion < params.tolerance * h_est) {
      converged = true;
      break;
    }
  }
  if (!converged && last_motion > 10.0 * params.tolerance * h_est) {
    throw GenerationStalled("point relaxation did not settle: last displacement " +
                            std::to_string(last_motion / h_est) + " h");
  }

  // Snap interior points that sit inside the band measured with the final h.
  for (;;) {
    const std::size_t nb = static_cast<std::size_t>(std::count(on_boundary.begin(), on_boundary.end(), 1));
    const double h = resolution_h(domain.area(), n - nb, nb);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!on_boundary[i] && domain.phi(pts[i]) > -params.boundary_band * h) {
        pts[i] = domain.project_to_boundary(pts[i]);
        on_boundary[i] = 1;
        changed = true;
      }
    }
    if (!changed) {
      break;
    }
  }

  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!on_boundary[i]) {
      cloud.points.push_back(pts[i]);
    }
  }
  cloud.n_interior = cloud.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (on_boundary[i]) {
      cloud.points.push_back(pts[i]);
      cloud.normals.push_back(domain.normal(pts[i]));
    }
  }
  cloud.n_boundary = n - cloud.n_interior;
  cloud.kinds.assign(cloud.n_interior, PointKind::Interior);
  cloud.kinds.resize(n, PointKind::Boundary);
  cloud.h = resolution_h(domain.area(), cloud.n_interior, cloud.n_boundary);
  return cloud;
}

namespace {

double cloud_diameter(const PointCloud& cloud)
{
  Box2 box;
  for (const auto& p : cloud.points) {
    box.extend(p);
  }
  return cloud.points.empty() ? 0.0 : box.diagonal().norm();
}

} // namespace

Neighborhood neighbors(const PointCloud& cloud, double base_radius_factor, std::span<const std::size_t> required_count)
{
  if (required_count.size() != cloud.size()) {
    throw SizeMismatch("neighbors: one required count per point expected");
  }
  const double base = base_radius_factor * cloud.h;
  const double diameter = cloud_diameter(cloud);
  const SpatialIndex index(cloud.points, base);
  Neighborhood nb;
  nb.indices.resize(cloud.size());
  nb.radius.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (required_count[i] < 1) {
      throw InvalidArgument("neighbors: required count must be at least 1");
    }
    double r = base;
    for (;;) {
      auto found = index.within(cloud.points[i], r);
      found.erase(std::remove(found.begin(), found.end(), i), found.end());
      if (found.size() >= required_count[i]) {
        nb.indices[i] = std::move(found);
        nb.radius[i] = r;
        break;
      }
      if (r > diameter) {
        throw NeighborhoodExhausted("point " + std::to_string(i) + " has only " + std::to_string(found.size()) +
                                    " neighbors within the cloud diameter");
      }
      r *= 1.2;
    }
  }
  return nb;
}

Neighborhood neighbors(const PointCloud& cloud, double base_radius_factor, std::size_t required_count)
{
  const std::vector<std::size_t> required(cloud.size(), required_count);
  return neighbors(cloud, base_radius_factor, required);
}

CloudDiagnostics validate(const PointCloud& cloud,
                          const Neighborhood& neighborhood,
                          const LevelSetDomain& domain,
                          double band_factor)
{
  CloudDiagnostics d;
  try {
    cloud.check_layout();
  } catch (const InvalidArgument&) {
    d.ordering_violation = true;
  }
  const double h = cloud.h;
  double min_spacing = std::numeric_limits<double>::infinity();
  if (cloud.size() > 1 && h > 0.0) {
    const SpatialIndex index(cloud.points, h);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      double radius = h;
      double best = std::numeric_limits<double>::infinity();
      while (!std::isfinite(best) && radius < 1e3 * (domain.diameter() + h)) {
        index.for_each_within(cloud.points[i], radius, [&](std::size_t j, double d2) {
          if (j != i) {
            best = std::min(best, d2);
          }
        });
        radius *= 2.0;
      }
      min_spacing = std::min(min_spacing, std::sqrt(best));
    }
  }
  d.min_spacing_over_h = h > 0.0 ? min_spacing / h : 0.0;
  d.duplicate_points = min_spacing <= 1e-12 * std::max(h, 1e-300);

  if (neighborhood.size() > 0) {
    d.min_neighbors = std::numeric_limits<std::size_t>::max();
    for (const auto& list : neighborhood.indices) {
      d.min_neighbors = std::min(d.min_neighbors, list.size());
      d.max_neighbors = std::max(d.max_neighbors, list.size());
    }
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double p = domain.phi(cloud.points[i]);
    if (i < cloud.n_interior) {
      if (p > -band_factor * h) {
        ++d.band_violations;
      }
    } else {
      d.max_boundary_phi = std::max(d.max_boundary_phi, std::abs(p));
    }
  }
  d.band_violation = d.band_violations > 0;
  d.off_boundary = d.max_boundary_phi > 1e-10 * domain.diameter();
  return d;
}

void write_cloud(std::ostream& out, const PointCloud& cloud)
{
  cloud.check_layout();
  out << cloud.size() << ' ' << cloud.n_interior << ' ' << cloud.n_boundary << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec2& p = cloud.points[i];
    out << p.x() << ' ' << p.y();
    if (cloud.is_boundary(i)) {
      const Vec2& nrm = cloud.normal(i);
      out << " 1 " << nrm.x() << ' ' << nrm.y() << '\n';
    } else {
      out << " 0\n";
    }
  }
}

void write_cloud(const std::string& path, const PointCloud& cloud)
{
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open '" + path + "' for writing");
  }
  write_cloud(out, cloud);
}

PointCloud read_cloud(std::istream& in, double domain_area)
{
  std::string line;
  if (!std::getline(in, line)) {
    throw CloudFormatError("cloud file is empty");
  }
  std::istringstream header(line);
  std::size_t n = 0, ni = 0, nb = 0;
  if (!(header >> n >> ni >> nb) || ni + nb != n) {
    throw CloudFormatError("cloud header must read 'N N_i N_b' with N = N_i + N_b");
  }
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      throw CloudFormatError("cloud file ends after " + std::to_string(i) + " points");
    }
    std::istringstream row(line);
    double x = 0, y = 0;
    int kind = -1;
    if (!(row >> x >> y >> kind) || (kind != 0 && kind != 1)) {
      throw CloudFormatError("malformed point line " + std::to_string(i + 2));
    }
    const bool boundary = kind == 1;
    if (boundary != (i >= ni)) {
      throw CloudFormatError("ordering invariant violated at point line " + std::to_string(i + 2));
    }
    cloud.points.emplace_back(x, y);
    cloud.kinds.push_back(boundary ? PointKind::Boundary : PointKind::Interior);
    if (boundary) {
      double nx = 0, ny = 0;
      if (!(row >> nx >> ny)) {
        throw CloudFormatError("boundary point without normal on line " + std::to_string(i + 2));
      }
      cloud.normals.emplace_back(nx, ny);
    }
  }
  cloud.n_interior = ni;
  cloud.n_boundary = nb;
  cloud.h = resolution_h(domain_area, ni, nb);
  return cloud;
}

PointCloud read_cloud(const std::string& path, double domain_area)
{
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open '" + path + "'");
  }
  return read_cloud(in, domain_area);
}

} // namespace mfd
