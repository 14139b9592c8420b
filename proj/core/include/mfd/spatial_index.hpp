#pragma once

#include "mfd/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mfd {

/**
 * Uniform bucket grid over a fixed set of 2D points for exact fixed-radius
 * queries. Points are referenced, not copied; the span must outlive the
 * index.
 */
class SpatialIndex {
public:
  SpatialIndex(std::span<const Vec2> points, double cell_size);

  /// Indices j with |points[j] - center| <= radius, in ascending order.
  std::vector<std::size_t> within(const Vec2& center, double radius) const;

  /// Calls visit(j, squared_distance) for every j within radius (unordered).
  template<typename Visitor>
  void for_each_within(const Vec2& center, double radius, Visitor&& visit) const
  {
    const double r2 = radius * radius;
    const auto [ix0, iy0] = cell_of(center - Vec2::Constant(radius));
    const auto [ix1, iy1] = cell_of(center + Vec2::Constant(radius));
    for (long iy = iy0; iy <= iy1; ++iy) {
      for (long ix = ix0; ix <= ix1; ++ix) {
        const std::size_t cell = static_cast<std::size_t>(iy) * nx_ + static_cast<std::size_t>(ix);
        for (std::size_t k = offsets_[cell]; k < offsets_[cell + 1]; ++k) {
          const std::size_t j = sorted_[k];
          const double d2 = (points_[j] - center).squaredNorm();
          if (d2 <= r2) {
            visit(j, d2);
          }
        }
      }
    }
  }

  std::size_t size() const noexcept { return points_.size(); }

private:
  std::pair<long, long> cell_of(const Vec2& x) const;

  std::span<const Vec2> points_;
  Vec2 origin_;
  double cell_;
  std::size_t nx_ = 1;
  std::size_t ny_ = 1;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> sorted_;
};

} // namespace mfd
