#include "mfd/geometry.hpp"

#include "mfd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec2 averaged_normal(const Vec2& a, const Vec2& b)
{
  return (a + b).normalized();
}

} // namespace

BoundaryPiece BoundaryPiece::segment(Vec2 a, Vec2 b)
{
  BoundaryPiece p;
  p.kind = Kind::Segment;
  p.from = a;
  p.to = b;
  return p;
}

BoundaryPiece BoundaryPiece::arc(Vec2 c, double r, double theta0, double theta1)
{
  BoundaryPiece p;
  p.kind = Kind::Arc;
  p.center = c;
  p.radius = r;
  p.theta_begin = theta0;
  p.theta_end = theta1;
  p.from = c + r * Vec2(std::cos(theta0), std::sin(theta0));
  p.to = c + r * Vec2(std::cos(theta1), std::sin(theta1));
  return p;
}

Vec2 BoundaryPiece::closest_point(const Vec2& x) const
{
  if (kind == Kind::Segment) {
    const Vec2 d = to - from;
    const double t = std::clamp((x - from).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return from + t * d;
  }
  const Vec2 rel = x - center;
  if (rel.squaredNorm() == 0.0) {
    return from;
  }
  double theta = std::atan2(rel.y(), rel.x());
  while (theta < theta_begin) {
    theta += kTwoPi;
  }
  while (theta >= theta_begin + kTwoPi) {
    theta -= kTwoPi;
  }
  if (theta <= theta_end) {
    return center + radius * rel.normalized();
  }
  // outside the angular range: nearest endpoint
  return (x - from).squaredNorm() <= (x - to).squaredNorm() ? from : to;
}

Vec2 BoundaryPiece::outward_normal(const Vec2& on_piece) const
{
  if (kind == Kind::Segment) {
    const Vec2 d = (to - from).normalized();
    return Vec2(d.y(), -d.x());
  }
  return (on_piece - center).normalized();
}

double BoundaryPiece::length() const
{
  if (kind == Kind::Segment) {
    return (to - from).norm();
  }
  return radius * (theta_end - theta_begin);
}

LevelSetDomain::LevelSetDomain(Shape shape,
                               std::string name,
                               std::vector<BoundaryPiece> pieces,
                               std::vector<CornerPoint> corners,
                               double area,
                               Box2 bbox)
  : shape_(shape)
  , name_(std::move(name))
  , pieces_(std::move(pieces))
  , corners_(std::move(corners))
  , area_(area)
  , bbox_(bbox)
{}

LevelSetDomain LevelSetDomain::unit_square()
{
  // Piece order (bottom, right, top, left) doubles as the projection tie-break.
  std::vector<BoundaryPiece> pieces{
    BoundaryPiece::segment({ 0, 0 }, { 1, 0 }),
    BoundaryPiece::segment({ 1, 0 }, { 1, 1 }),
    BoundaryPiece::segment({ 1, 1 }, { 0, 1 }),
    BoundaryPiece::segment({ 0, 1 }, { 0, 0 }),
  };
  const Vec2 down(0, -1), right(1, 0), up(0, 1), left(-1, 0);
  std::vector<CornerPoint> corners{
    { { 0, 0 }, averaged_normal(left, down) },
    { { 1, 0 }, averaged_normal(down, right) },
    { { 1, 1 }, averaged_normal(right, up) },
    { { 0, 1 }, averaged_normal(up, left) },
  };
  return LevelSetDomain(Shape::Square,
                        "square",
                        std::move(pieces),
                        std::move(corners),
                        1.0,
                        Box2(Vec2(0, 0), Vec2(1, 1)));
}

LevelSetDomain LevelSetDomain::paper()
{
  std::vector<BoundaryPiece> pieces{
    BoundaryPiece::segment({ 0, 0 }, { 1, 0 }),
    BoundaryPiece::segment({ 1, 0 }, { 1, 0.5 }),
    BoundaryPiece::arc({ 0.5, 0.5 }, 0.5, 0.0, std::numbers::pi),
    BoundaryPiece::segment({ 0, 0.5 }, { 0, 0 }),
  };
  const Vec2 down(0, -1), right(1, 0), left(-1, 0);
  // (0,0.5) and (1,0.5) are tangential junctions, not corners.
  std::vector<CornerPoint> corners{
    { { 0, 0 }, averaged_normal(left, down) },
    { { 1, 0 }, averaged_normal(down, right) },
  };
  return LevelSetDomain(Shape::Paper,
                        "paper",
                        std::move(pieces),
                        std::move(corners),
                        0.5 + std::numbers::pi * 0.25 / 2.0,
                        Box2(Vec2(0, 0), Vec2(1, 1)));
}

LevelSetDomain LevelSetDomain::unit_disk()
{
  std::vector<BoundaryPiece> pieces{
    BoundaryPiece::arc({ 0, 0 }, 1.0, -std::numbers::pi, std::numbers::pi),
  };
  return LevelSetDomain(
    Shape::Disk, "disk", std::move(pieces), {}, std::numbers::pi, Box2(Vec2(-1, -1), Vec2(1, 1)));
}

LevelSetDomain LevelSetDomain::by_name(std::string_view name)
{
  if (name == "square") {
    return unit_square();
  }
  if (name == "paper") {
    return paper();
  }
  if (name == "disk") {
    return unit_disk();
  }
  throw InvalidArgument("unknown domain '" + std::string(name) + "' (expected paper, square or disk)");
}

bool LevelSetDomain::inside(const Vec2& x) const
{
  switch (shape_) {
    case Shape::Square:
      return x.x() > 0 && x.x() < 1 && x.y() > 0 && x.y() < 1;
    case Shape::Paper:
      return (x - Vec2(0.5, 0.5)).squaredNorm() < 0.25 ||
             (x.x() > 0 && x.x() < 1 && x.y() > 0 && x.y() < 0.5);
    case Shape::Disk:
      return x.squaredNorm() < 1.0;
  }
  return false;
}

LevelSetDomain::Closest LevelSetDomain::closest(const Vec2& x) const
{
  Closest best{ x, std::numeric_limits<double>::infinity(), 0 };
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const Vec2 c = pieces_[k].closest_point(x);
    const double d = (x - c).norm();
    if (d < best.distance) {
      best = { c, d, k };
    }
  }
  return best;
}

double LevelSetDomain::phi(const Vec2& x) const
{
  const double d = closest(x).distance;
  return inside(x) ? -d : d;
}

const CornerPoint* LevelSetDomain::corner_at(const Vec2& x) const
{
  const double tol = 1e-8 * diameter();
  for (const auto& c : corners_) {
    if ((c.point - x).norm() <= tol) {
      return &c;
    }
  }
  return nullptr;
}

bool LevelSetDomain::is_on_boundary(const Vec2& x, double relative_tol) const
{
  return std::abs(phi(x)) <= relative_tol * diameter();
}

Vec2 LevelSetDomain::gradient(const Vec2& x) const
{
  const Closest c = closest(x);
  if (c.distance <= 1e-14 * diameter()) {
    if (const CornerPoint* corner = corner_at(x)) {
      return corner->normal;
    }
    return pieces_[c.piece].outward_normal(c.point);
  }
  const Vec2 away = (x - c.point) / c.distance;
  return inside(x) ? Vec2(-away) : away;
}

Vec2 LevelSetDomain::normal(const Vec2& x) const
{
  if (const CornerPoint* corner = corner_at(x)) {
    return corner->normal;
  }
  const Closest c = closest(x);
  if (c.distance > 1e-8 * diameter()) {
    throw QueryNotOnBoundary("normal requested at a point with |phi| = " + std::to_string(c.distance));
  }
  return pieces_[c.piece].outward_normal(c.point);
}

Vec2 LevelSetDomain::project_to_boundary(const Vec2& x) const
{
  const double diam = diameter();
  const Box2 inflated(bbox_.min() - Vec2::Constant(diam), bbox_.max() + Vec2::Constant(diam));
  if (!inflated.contains(x)) {
    throw InvalidArgument("projection query outside the inflated bounding box");
  }
  const double tol = 1e-10 * diam;
  Vec2 y = x;
  for (int it = 0; it < 20; ++it) {
    const double p = phi(y);
    if (std::abs(p) <= tol) {
      return y;
    }
    y -= p * gradient(y);
  }
  if (std::abs(phi(y)) <= tol) {
    return y;
  }
  throw ProjectionDiverged("boundary projection did not converge in 20 iterations");
}

double LevelSetDomain::perimeter() const
{
  double total = 0.0;
  for (const auto& p : pieces_) {
    total += p.length();
  }
  return total;
}

} // namespace mfd
