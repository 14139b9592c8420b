#include "mfd/stencil.hpp"

#include "mfd/errors.hpp"
#include "mfd/spatial_index.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

namespace mfd {

int OperatorSpec::differential_order() const noexcept
{
  switch (op) {
    case Operator::Laplacian:
      return 2;
    case Operator::Dx:
    case Operator::Dy:
      return 1;
    case Operator::Identity:
      return 0;
  }
  return 0;
}

int OperatorSpec::degree() const noexcept
{
  if (op == Operator::Identity) {
    return order;
  }
  return order + differential_order() - 1;
}

std::size_t OperatorSpec::constraint_count() const noexcept
{
  const auto deg = static_cast<std::size_t>(degree());
  const std::size_t with_constant = (deg + 1) * (deg + 2) / 2;
  return has_diagonal() ? with_constant - 1 : with_constant;
}

std::vector<std::pair<int, int>> monomial_exponents(int degree, bool include_constant)
{
  std::vector<std::pair<int, int>> out;
  if (include_constant) {
    out.emplace_back(0, 0);
  }
  for (int total = 1; total <= degree; ++total) {
    for (int b = 0; b <= total; ++b) {
      out.emplace_back(total - b, b);
    }
  }
  return out;
}

namespace {

// Operator applied to x^a y^b, evaluated at the origin.
double operator_at_origin(Operator op, int a, int b)
{
  switch (op) {
    case Operator::Laplacian:
      return ((a == 2 && b == 0) || (a == 0 && b == 2)) ? 2.0 : 0.0;
    case Operator::Dx:
      return (a == 1 && b == 0) ? 1.0 : 0.0;
    case Operator::Dy:
      return (a == 0 && b == 1) ? 1.0 : 0.0;
    case Operator::Identity:
      return (a == 0 && b == 0) ? 1.0 : 0.0;
  }
  return 0.0;
}

ConstraintSystem build_constraints(const Vec2& center,
                                   std::span<const Vec2> coords,
                                   OperatorSpec spec,
                                   double scale)
{
  const auto exps = monomial_exponents(spec.degree(), !spec.has_diagonal());
  ConstraintSystem sys;
  sys.V.resize(static_cast<Eigen::Index>(exps.size()), static_cast<Eigen::Index>(coords.size()));
  sys.b.resize(static_cast<Eigen::Index>(exps.size()));
  const int max_deg = spec.degree();
  std::vector<double> xp(static_cast<std::size_t>(max_deg) + 1), yp(static_cast<std::size_t>(max_deg) + 1);
  for (std::size_t j = 0; j < coords.size(); ++j) {
    const Vec2 rel = (coords[j] - center) / scale;
    xp[0] = yp[0] = 1.0;
    for (int p = 1; p <= max_deg; ++p) {
      xp[static_cast<std::size_t>(p)] = xp[static_cast<std::size_t>(p - 1)] * rel.x();
      yp[static_cast<std::size_t>(p)] = yp[static_cast<std::size_t>(p - 1)] * rel.y();
    }
    for (std::size_t r = 0; r < exps.size(); ++r) {
      sys.V(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
        xp[static_cast<std::size_t>(exps[r].first)] * yp[static_cast<std::size_t>(exps[r].second)];
    }
  }
  for (std::size_t r = 0; r < exps.size(); ++r) {
    sys.b(static_cast<Eigen::Index>(r)) = operator_at_origin(spec.op, exps[r].first, exps[r].second);
  }
  return sys;
}

} // namespace

ConstraintSystem constraint_system(const Vec2& center, std::span<const Vec2> neighbor_coords, OperatorSpec spec)
{
  if (neighbor_coords.empty()) {
    throw InsufficientNeighbors("constraint system needs at least one neighbor");
  }
  return build_constraints(center, neighbor_coords, spec, 1.0);
}

Eigen::VectorXd wlsq_weights(const Eigen::MatrixXd& V,
                             const Eigen::VectorXd& b,
                             std::span<const double> distances,
                             double beta)
{
  const Eigen::Index m = V.cols();
  if (static_cast<std::size_t>(m) != distances.size() || b.size() != V.rows()) {
    throw SizeMismatch("wlsq_weights: inconsistent constraint dimensions");
  }
  const double b_norm = b.cwiseAbs().maxCoeff();
  if (b_norm == 0.0) {
    return Eigen::VectorXd::Zero(m);
  }
  Eigen::VectorXd w(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double d = distances[static_cast<std::size_t>(j)];
    if (!(d > 0.0)) {
      throw SingularConstraints("wlsq_weights: neighbor coincides with the center");
    }
    w(j) = std::pow(d, -beta);
  }
  const double tol = 1e-9 * b_norm;
  const auto residual = [&](const Eigen::VectorXd& a) { return (b - V * a).cwiseAbs().maxCoeff(); };

  // Normal-equations route: symmetric (V W V^T) with diagonal equilibration.
  const Eigen::MatrixXd WVt = w.asDiagonal() * V.transpose();
  const Eigen::MatrixXd M = V * WVt;
  const Eigen::VectorXd diag = M.diagonal();
  if (diag.minCoeff() > 0.0) {
    const Eigen::VectorXd s = diag.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd Ms = s.asDiagonal() * M * s.asDiagonal();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(Ms);
    if (ldlt.info() == Eigen::Success && ldlt.rcond() >= 1e-12) {
      const auto solve = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
        const Eigen::VectorXd lambda = s.asDiagonal() * ldlt.solve(s.asDiagonal() * rhs);
        return WVt * lambda;
      };
      Eigen::VectorXd a = solve(b);
      a += solve(b - V * a);
      if (residual(a) <= tol) {
        return a;
      }
    }
  }

  // Rank-revealing route for degenerate configurations: minimum weighted norm
  // solution a = W^{1/2} (V W^{1/2})^+ b, accepted only if it is consistent.
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd B = V * sw.asDiagonal();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(B);
  if (cod.rank() == V.rows()) {
    throw SingularConstraints("wlsq_weights: constraint matrix is ill-conditioned");
  }
  Eigen::VectorXd a = sw.asDiagonal() * cod.solve(b);
  a += sw.asDiagonal() * cod.solve(b - V * a);
  if (!(residual(a) <= tol)) {
    throw SingularConstraints("wlsq_weights: constraints are rank deficient and inconsistent");
  }
  return a;
}

std::ostream& operator<<(std::ostream& out, const StencilRow& row)
{
  out << row.center << ':';
  for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
    out << " (" << row.neighbors[k] << ',' << row.weights[k] << ')';
  }
  return out << ' ' << row.diagonal;
}

std::size_t required_neighbors(OperatorSpec spec, const StencilOptions& options)
{
  return static_cast<std::size_t>(std::ceil(options.safety_factor * static_cast<double>(spec.constraint_count())));
}

std::vector<std::size_t> required_neighbors(const PointCloud& cloud, OperatorSpec spec, const StencilOptions& options)
{
  const double nc = static_cast<double>(spec.constraint_count());
  std::vector<std::size_t> out(cloud.size(), required_neighbors(spec, options));
  const auto boundary = static_cast<std::size_t>(std::ceil(std::max(options.safety_factor, options.boundary_safety_factor) * nc));
  for (std::size_t i = cloud.n_interior; i < cloud.size(); ++i) {
    out[i] = boundary;
  }
  return out;
}

namespace {

// Stencil row for center `i` (a cloud point) from the given neighbor list.
StencilRow compute_row(const PointCloud& cloud,
                       std::size_t i,
                       const std::vector<std::size_t>& nbrs,
                       OperatorSpec spec,
                       double beta)
{
  const Vec2& center = cloud.points[i];
  std::vector<Vec2> coords;
  std::vector<double> dist;
  coords.reserve(nbrs.size());
  dist.reserve(nbrs.size());
  double scale = 0.0;
  for (const std::size_t j : nbrs) {
    coords.push_back(cloud.points[j]);
    dist.push_back((cloud.points[j] - center).norm());
    scale = std::max(scale, dist.back());
  }
  if (coords.empty()) {
    throw SingularConstraints("empty neighborhood");
  }
  const ConstraintSystem sys = build_constraints(center, coords, spec, scale);
  const Eigen::VectorXd a = wlsq_weights(sys.V, sys.b, dist, beta);
  const double rescale = std::pow(scale, -spec.differential_order());

  StencilRow row;
  row.center = i;
  row.neighbors = nbrs;
  row.weights.resize(nbrs.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    row.weights[k] = a(static_cast<Eigen::Index>(k)) * rescale;
    sum += row.weights[k];
  }
  row.diagonal = spec.has_diagonal() ? -sum : 0.0;
  return row;
}

std::vector<std::size_t> without(std::vector<std::size_t> list, std::size_t i)
{
  list.erase(std::remove(list.begin(), list.end(), i), list.end());
  return list;
}

} // namespace

StencilSet operator_weights(const PointCloud& cloud,
                            const Neighborhood& neighborhood,
                            OperatorSpec spec,
                            std::span<const std::size_t> target_points,
                            const StencilOptions& options)
{
  if (neighborhood.size() != cloud.size()) {
    throw SizeMismatch("operator_weights: neighborhood does not match the cloud");
  }
  StencilSet set;
  set.spec = spec;
  set.cloud_size = cloud.size();
  set.rows.reserve(target_points.size());
  std::optional<SpatialIndex> index;
  for (const std::size_t i : target_points) {
    if (i >= cloud.size()) {
      throw InvalidArgument("operator_weights: target index out of range");
    }
    std::vector<std::size_t> nbrs = neighborhood.indices[i];
    double radius = neighborhood.radius[i];
    for (int attempt = 0;; ++attempt) {
      try {
        set.rows.push_back(compute_row(cloud, i, nbrs, spec, options.beta));
        break;
      } catch (const SingularConstraints& e) {
        if (attempt >= options.max_retries) {
          throw StencilFailure(i, e.what());
        }
      }
      if (!index) {
        index.emplace(cloud.points, options.base_radius_factor * cloud.h);
      }
      radius *= options.growth;
      nbrs = without(index->within(cloud.points[i], radius), i);
    }
  }
  return set;
}

StencilSet operator_weights(const PointCloud& cloud,
                            OperatorSpec spec,
                            std::span<const std::size_t> target_points,
                            const StencilOptions& options)
{
  const Neighborhood nb = neighbors(cloud, options.base_radius_factor, required_neighbors(cloud, spec, options));
  return operator_weights(cloud, nb, spec, target_points, options);
}

std::vector<double> apply(const StencilSet& stencils, std::span<const double> field)
{
  if (field.size() != stencils.cloud_size) {
    throw SizeMismatch("apply: field length " + std::to_string(field.size()) + " does not match cloud size " +
                       std::to_string(stencils.cloud_size));
  }
  std::vector<double> out(stencils.size());
  for (std::size_t r = 0; r < stencils.size(); ++r) {
    out[r] = stencils.apply_row(r, field);
  }
  return out;
}

StencilRow evaluation_weights(const PointCloud& cloud, const Vec2& location, int order, const StencilOptions& options)
{
  const OperatorSpec spec{ Operator::Identity, order };
  const std::size_t required = required_neighbors(spec, options);
  const SpatialIndex index(cloud.points, options.base_radius_factor * cloud.h);
  double radius = options.base_radius_factor * cloud.h;
  std::vector<std::size_t> nbrs = index.within(location, radius);
  int attempt = 0;
  for (;;) {
    while (nbrs.size() < required) {
      radius *= options.growth;
      nbrs = index.within(location, radius);
      if (radius > 1e3 * cloud.h * std::sqrt(static_cast<double>(cloud.size()))) {
        throw InsufficientNeighbors("evaluation_weights: cloud too small");
      }
    }
    std::size_t nearest = nbrs.front();
    double nearest_d = std::numeric_limits<double>::infinity();
    std::vector<Vec2> coords;
    std::vector<double> dist;
    double scale = 0.0;
    for (const std::size_t j : nbrs) {
      const double d = (cloud.points[j] - location).norm();
      if (d < nearest_d) {
        nearest_d = d;
        nearest = j;
      }
      coords.push_back(cloud.points[j]);
      dist.push_back(d);
      scale = std::max(scale, d);
    }
    StencilRow row;
    row.center = nearest;
    if (nearest_d <= 1e-12 * cloud.h) {
      row.neighbors = { nearest };
      row.weights = { 1.0 };
      return row;
    }
    try {
      const ConstraintSystem sys = build_constraints(location, coords, spec, scale);
      const Eigen::VectorXd a = wlsq_weights(sys.V, sys.b, dist, options.beta);
      row.neighbors = nbrs;
      row.weights.assign(a.data(), a.data() + a.size());
      return row;
    } catch (const SingularConstraints& e) {
      if (++attempt > options.max_retries) {
        throw StencilFailure(nearest, e.what());
      }
      radius *= options.growth;
      nbrs = index.within(location, radius);
    }
  }
}

std::vector<std::size_t> interior_indices(const PointCloud& cloud)
{
  std::vector<std::size_t> out(cloud.n_interior);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = i;
  }
  return out;
}

std::vector<std::size_t> boundary_indices(const PointCloud& cloud)
{
  std::vector<std::size_t> out(cloud.n_boundary);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = cloud.n_interior + i;
  }
  return out;
}

std::vector<std::size_t> all_indices(const PointCloud& cloud)
{
  std::vector<std::size_t> out(cloud.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = i;
  }
  return out;
}

ExtrapolationSet mls_extrapolation_weights(const PointCloud& cloud,
                                           std::span<const std::size_t> boundary_targets,
                                           const ExtrapolationOptions& options)
{
  const std::span<const Vec2> interior(cloud.points.data(), cloud.n_interior);
  const SpatialIndex index(interior, options.radius_factor * cloud.h);
  const auto exps = monomial_exponents(2, true);
  const auto nbasis = static_cast<Eigen::Index>(exps.size());

  ExtrapolationSet set;
  set.targets.assign(boundary_targets.begin(), boundary_targets.end());
  set.rows.reserve(boundary_targets.size());
  for (const std::size_t t : boundary_targets) {
    if (t >= cloud.size()) {
      throw InvalidArgument("mls_extrapolation_weights: target index out of range");
    }
    const Vec2& x = cloud.points[t];
    double radius = options.radius_factor * cloud.h;
    bool done = false;
    for (int attempt = 0; attempt <= options.max_retries && !done; ++attempt, radius *= options.growth) {
      const std::vector<std::size_t> nbrs = index.within(x, radius);
      if (nbrs.size() < std::max<std::size_t>(options.min_neighbors, exps.size())) {
        continue;
      }
      const auto m = static_cast<Eigen::Index>(nbrs.size());
      Eigen::MatrixXd P(m, nbasis);
      Eigen::VectorXd sw(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Vec2 rel = (cloud.points[nbrs[static_cast<std::size_t>(j)]] - x) / radius;
        const double d = rel.norm();
        if (!(d > 0.0)) {
          throw ExtrapolationFailure(t, "interior point coincides with the boundary target");
        }
        sw(j) = 1.0 / d; // sqrt of the d^-2 weight
        for (Eigen::Index c = 0; c < nbasis; ++c) {
          const auto [a, b] = exps[static_cast<std::size_t>(c)];
          P(j, c) = sw(j) * std::pow(rel.x(), a) * std::pow(rel.y(), b);
        }
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P);
      qr.setThreshold(1e-10);
      if (qr.rank() < nbasis) {
        continue;
      }
      const Eigen::MatrixXd coeff = qr.solve(Eigen::MatrixXd(sw.asDiagonal()));
      StencilRow row;
      row.center = t;
      row.neighbors = nbrs;
      row.weights.resize(nbrs.size());
      for (Eigen::Index j = 0; j < m; ++j) {
        row.weights[static_cast<std::size_t>(j)] = coeff(0, j);
      }
      set.rows.push_back(std::move(row));
      done = true;
    }
    if (!done) {
      throw ExtrapolationFailure(t, "no well-posed quadratic fit after enlarging the radius");
    }
  }
  return set;
}

std::vector<double> mls_extrapolate(const ExtrapolationSet& extrapolation,
                                    const PointCloud& cloud,
                                    std::span<const double> interior_field)
{
  if (interior_field.size() != cloud.n_interior) {
    throw SizeMismatch("mls_extrapolate: interior field must have n_interior entries");
  }
  std::vector<double> out(extrapolation.rows.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    const StencilRow& row = extrapolation.rows[r];
    double acc = 0.0;
    for (std::size_t k = 0; k < row.neighbors.size(); ++k) {
      acc += row.weights[k] * interior_field[row.neighbors[k]];
    }
    out[r] = acc;
  }
  return out;
}

std::vector<double> mls_extrapolate(const PointCloud& cloud,
                                    std::span<const double> interior_field,
                                    std::span<const std::size_t> boundary_targets,
                                    const ExtrapolationOptions& options)
{
  return mls_extrapolate(mls_extrapolation_weights(cloud, boundary_targets, options), cloud, interior_field);
}

OperatorBundle build_operators(const PointCloud& cloud,
                               int order,
                               const StencilOptions& options,
                               bool with_extrapolation)
{
  OperatorBundle ops;
  ops.order = order;
  const OperatorSpec lap{ Operator::Laplacian, order };
  const OperatorSpec gx{ Operator::Dx, order };
  const OperatorSpec gy{ Operator::Dy, order };
  const auto interior = interior_indices(cloud);
  const auto all = all_indices(cloud);

  const Neighborhood lap_nb = neighbors(cloud, options.base_radius_factor, required_neighbors(cloud, lap, options));
  ops.laplacian = operator_weights(cloud, lap_nb, lap, interior, options);
  const Neighborhood grad_nb = neighbors(cloud, options.base_radius_factor, required_neighbors(cloud, gx, options));
  ops.dx = operator_weights(cloud, grad_nb, gx, all, options);
  ops.dy = operator_weights(cloud, grad_nb, gy, all, options);
  if (with_extrapolation) {
    ops.extrapolation = mls_extrapolation_weights(cloud, boundary_indices(cloud));
  }
  return ops;
}

} // namespace mfd
