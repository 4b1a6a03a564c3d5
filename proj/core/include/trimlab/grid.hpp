#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace trimlab {

enum class BoundaryMode { reflect };

/// Integer lattice coordinates; the physical position is epsilon * coords.
struct SiteId {
  std::vector<int> coords;

  int dim() const noexcept { return static_cast<int>(coords.size()); }
  bool operator==(const SiteId&) const = default;
};

/// Linear site index. Indices are laid out row-major with the first
/// coordinate most significant, so index order coincides with the
/// lexicographic total order used for argmax tie-breaking.
using SiteIndex = std::size_t;

/// One of the 2d unit jump directions. Zero-based: value < d is +e_value,
/// value >= d is -e_(value-d).
struct Direction {
  int value = 0;

  int axis(int dim) const noexcept { return value < dim ? value : value - dim; }
  int sign(int dim) const noexcept { return value < dim ? +1 : -1; }
  /// The involution i -> i* with k_{i*} = -k_i.
  Direction reversed(int dim) const noexcept { return {value < dim ? value + dim : value - dim}; }

  bool operator==(const Direction&) const = default;
};

/// Lexicographic comparison (first coordinate most significant).
/// Throws DimensionMismatch when the coordinate vectors differ in length.
std::strong_ordering total_order_cmp(const SiteId& a, const SiteId& b);

/// Geometry of the truncated epsilon-grid [-L, L]^d.
///
/// Immutable after construction; copies share the neighbour table.
class GridSpec {
 public:
  GridSpec(double epsilon, int dim, double half_width,
           BoundaryMode boundary = BoundaryMode::reflect);

  double epsilon() const noexcept { return epsilon_; }
  int dim() const noexcept { return dim_; }
  double half_width() const noexcept { return half_width_; }
  BoundaryMode boundary() const noexcept { return boundary_; }
  /// L / epsilon.
  int steps_per_side() const noexcept { return steps_; }
  /// Sites along one axis, 2 L / epsilon + 1.
  int side() const noexcept { return 2 * steps_ + 1; }
  std::size_t site_count() const noexcept { return site_count_; }
  int direction_count() const noexcept { return 2 * dim_; }

  bool contains(const SiteId& x) const noexcept;
  SiteIndex index(const SiteId& x) const;
  SiteId site(SiteIndex i) const;
  int coord(SiteIndex i, int axis) const noexcept {
    return static_cast<int>((i / strides_[axis]) % static_cast<std::size_t>(side())) - steps_;
  }
  double position(SiteIndex i, int axis) const noexcept { return epsilon_ * coord(i, axis); }
  std::vector<double> position(SiteIndex i) const;

  /// x + epsilon k_i, or nothing when the step leaves the box (reflect mode
  /// suppresses the move).
  std::optional<SiteId> neighbor(const SiteId& x, Direction i) const;
  std::optional<SiteIndex> neighbor(SiteIndex x, Direction i) const noexcept {
    const std::int64_t n = (*neighbors_)[x * direction_count() + i.value];
    if (n < 0) return std::nullopt;
    return static_cast<SiteIndex>(n);
  }
  /// Raw neighbour table entry; -1 when suppressed.
  std::int64_t neighbor_or_none(SiteIndex x, int direction) const noexcept {
    return (*neighbors_)[x * direction_count() + direction];
  }
  bool interior(SiteIndex x) const noexcept;

  double distance(SiteIndex a, SiteIndex b) const noexcept;
  /// Nearest site to a physical point (rounding half away from zero), clamped to the box.
  SiteIndex nearest(std::span<const double> point) const;

  /// Same epsilon, dimension and box.
  bool same_as(const GridSpec& other) const noexcept {
    return dim_ == other.dim_ && steps_ == other.steps_ && epsilon_ == other.epsilon_;
  }

 private:
  double epsilon_;
  int dim_;
  double half_width_;
  BoundaryMode boundary_;
  int steps_;
  std::size_t site_count_;
  std::vector<std::size_t> strides_;
  std::shared_ptr<const std::vector<std::int64_t>> neighbors_;
};

}  // namespace trimlab
