#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfd {

using Vec2 = Eigen::Vector2d;
using Box2 = Eigen::AlignedBox2d;

/// One smooth piece of a domain boundary, traversed counter-clockwise.
struct BoundaryPiece {
  enum class Kind { Segment, Arc };

  Kind kind = Kind::Segment;
  // Segment: from -> to.
  Vec2 from = Vec2::Zero();
  Vec2 to = Vec2::Zero();
  // Arc: center, radius and the angular range [theta_begin, theta_end].
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double theta_begin = 0.0;
  double theta_end = 0.0;

  static BoundaryPiece segment(Vec2 a, Vec2 b);
  static BoundaryPiece arc(Vec2 c, double r, double theta0, double theta1);

  Vec2 closest_point(const Vec2& x) const;
  /// Outward unit normal at a point on the piece.
  Vec2 outward_normal(const Vec2& on_piece) const;
  double length() const;
};

/// A non-smooth boundary point with a prescribed (averaged) outward normal.
struct CornerPoint {
  Vec2 point;
  Vec2 normal;
};

/**
 * Implicitly defined 2D domain Omega = {x : phi(x) < 0}.
 *
 * The built-in domains are unions of convex pieces whose boundaries are
 * made of segments and circular arcs. phi is evaluated as the exact
 * Euclidean distance to that boundary, signed by an inside test, so
 * |grad phi| = 1 wherever the closest boundary point is unique.
 *
 * Instances are immutable; every query is thread-safe.
 */
class LevelSetDomain {
public:
  enum class Shape { Square, Paper, Disk };

  /// (0,1)^2 with averaged normals at the four corners.
  static LevelSetDomain unit_square();
  /// {(x-0.5)^2 + (y-0.5)^2 < 0.25} union (0,1) x (0,0.5).
  static LevelSetDomain paper();
  /// Unit disk centered at the origin.
  static LevelSetDomain unit_disk();
  /// "square", "paper" or "disk"; throws InvalidArgument otherwise.
  static LevelSetDomain by_name(std::string_view name);

  double phi(const Vec2& x) const;

  /// Unit outward normal at a boundary point (or registered corner).
  /// Throws QueryNotOnBoundary if x is not on the boundary.
  Vec2 normal(const Vec2& x) const;

  /// grad phi / |grad phi| at any point off the boundary; at boundary points
  /// this is the outward normal of the closest piece.
  Vec2 gradient(const Vec2& x) const;

  /// Newton-like projection x <- x - phi(x) grad phi(x), at most 20 sweeps.
  /// Throws ProjectionDiverged if |phi| <= 1e-10 diameter is not reached.
  Vec2 project_to_boundary(const Vec2& x) const;

  bool is_on_boundary(const Vec2& x, double relative_tol = 1e-8) const;

  double area() const noexcept { return area_; }
  double perimeter() const;
  double diameter() const noexcept { return bbox_.diagonal().norm(); }
  const Box2& bounding_box() const noexcept { return bbox_; }
  std::span<const CornerPoint> corners() const noexcept { return corners_; }
  std::span<const BoundaryPiece> pieces() const noexcept { return pieces_; }
  Shape shape() const noexcept { return shape_; }
  const std::string& name() const noexcept { return name_; }

private:
  struct Closest {
    Vec2 point;
    double distance;
    std::size_t piece;
  };

  LevelSetDomain(Shape shape,
                 std::string name,
                 std::vector<BoundaryPiece> pieces,
                 std::vector<CornerPoint> corners,
                 double area,
                 Box2 bbox);

  Closest closest(const Vec2& x) const;
  bool inside(const Vec2& x) const;
  const CornerPoint* corner_at(const Vec2& x) const;

  Shape shape_;
  std::string name_;
  std::vector<BoundaryPiece> pieces_;
  std::vector<CornerPoint> corners_;
  double area_;
  Box2 bbox_;
};

} // namespace mfd
