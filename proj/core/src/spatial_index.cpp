#include "mfd/spatial_index.hpp"

#include "mfd/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mfd {

SpatialIndex::SpatialIndex(std::span<const Vec2> points, double cell_size)
  : points_(points)
  , origin_(Vec2::Zero())
  , cell_(cell_size)
{
  if (!(cell_size > 0.0)) {
    throw InvalidArgument("spatial index cell size must be positive");
  }
  Box2 box;
  for (const auto& p : points_) {
    box.extend(p);
  }
  if (points_.empty()) {
    box = Box2(Vec2::Zero(), Vec2::Zero());
  }
  origin_ = box.min();
  const Vec2 extent = box.max() - box.min();
  // Cap the grid size so that a tiny cell on a sparse set cannot blow up memory.
  const double max_cells_per_axis = 4096.0;
  cell_ = std::max({ cell_, extent.x() / max_cells_per_axis, extent.y() / max_cells_per_axis });
  nx_ = static_cast<std::size_t>(std::floor(extent.x() / cell_)) + 1;
  ny_ = static_cast<std::size_t>(std::floor(extent.y() / cell_)) + 1;

  std::vector<std::size_t> cell_ids(points_.size());
  offsets_.assign(nx_ * ny_ + 1, 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto [ix, iy] = cell_of(points_[i]);
    cell_ids[i] = static_cast<std::size_t>(iy) * nx_ + static_cast<std::size_t>(ix);
    ++offsets_[cell_ids[i] + 1];
  }
  for (std::size_t c = 0; c < nx_ * ny_; ++c) {
    offsets_[c + 1] += offsets_[c];
  }
  sorted_.resize(points_.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    sorted_[fill[cell_ids[i]]++] = i;
  }
}

std::pair<long, long> SpatialIndex::cell_of(const Vec2& x) const
{
  const auto clampi = [](double v, std::size_t n) {
    const double c = std::floor(v);
    if (c < 0.0) {
      return 0L;
    }
    if (c > static_cast<double>(n - 1)) {
      return static_cast<long>(n - 1);
    }
    return static_cast<long>(c);
  };
  return { clampi((x.x() - origin_.x()) / cell_, nx_), clampi((x.y() - origin_.y()) / cell_, ny_) };
}

std::vector<std::size_t> SpatialIndex::within(const Vec2& center, double radius) const
{
  std::vector<std::size_t> out;
  for_each_within(center, radius, [&](std::size_t j, double) { out.push_back(j); });
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace mfd
