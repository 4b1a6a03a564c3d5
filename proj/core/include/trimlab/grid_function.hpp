#pragma once

#include <optional>
#include <span>
#include <vector>

#include "trimlab/grid.hpp"

namespace trimlab {

/// Real function on the sites of a GridSpec with lazily cached norms.
class GridFunction {
 public:
  explicit GridFunction(const GridSpec& grid, double fill = 0.0)
      : grid_(grid), values_(grid.site_count(), fill) {}
  GridFunction(const GridSpec& grid, std::vector<double> values);

  static GridFunction indicator(const GridSpec& grid, SiteIndex x);

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](SiteIndex x) const noexcept { return values_[x]; }
  void set(SiteIndex x, double v) {
    values_[x] = v;
    invalidate();
  }
  std::span<const double> values() const noexcept { return values_; }
  /// Mutable view; drops the cached norms.
  std::span<double> mutable_values() {
    invalidate();
    return values_;
  }

  double l1() const;
  double l2() const;
  double linf() const;
  double sum() const;

 private:
  void invalidate() noexcept { norms_.reset(); }
  struct Norms {
    double l1, l2, linf;
  };
  const Norms& norms() const;

  GridSpec grid_;
  std::vector<double> values_;
  mutable std::optional<Norms> norms_;
};

/// Usual inner product on the grid.
double inner(const GridFunction& f, const GridFunction& g);

/// Throws GridMismatch unless both live on the same grid.
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

}  // namespace trimlab
