#include "trimlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trimlab/errors.hpp"

namespace trimlab {

std::strong_ordering total_order_cmp(const SiteId& a, const SiteId& b) {
  if (a.coords.size() != b.coords.size())
    throw Error(ErrorKind::dimension_mismatch,
                "total_order_cmp: dimension " + std::to_string(a.coords.size()) + " vs " +
                    std::to_string(b.coords.size()));
  for (std::size_t k = 0; k < a.coords.size(); ++k)
    if (auto c = a.coords[k] <=> b.coords[k]; c != 0) return c;
  return std::strong_ordering::equal;
}

GridSpec::GridSpec(double epsilon, int dim, double half_width, BoundaryMode boundary)
    : epsilon_(epsilon), dim_(dim), half_width_(half_width), boundary_(boundary) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw Error(ErrorKind::invalid_parameter, "epsilon must lie in (0, 1)");
  if (dim < 1) throw Error(ErrorKind::invalid_parameter, "dimension must be >= 1");
  if (!(half_width > 0.0)) throw Error(ErrorKind::invalid_parameter, "half_width must be positive");
  const double ratio = half_width / epsilon;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1.0)
    throw Error(ErrorKind::invalid_parameter,
                "half_width / epsilon must be a positive integer (got " + std::to_string(ratio) +
                    ")");
  steps_ = static_cast<int>(rounded);

  const auto side_sz = static_cast<std::size_t>(side());
  strides_.assign(dim_, 1);
  for (int axis = dim_ - 2; axis >= 0; --axis) strides_[axis] = strides_[axis + 1] * side_sz;
  site_count_ = strides_[0] * side_sz;

  const int nd = direction_count();
  auto table = std::make_shared<std::vector<std::int64_t>>(site_count_ * nd, -1);
  for (SiteIndex x = 0; x < site_count_; ++x) {
    for (int i = 0; i < nd; ++i) {
      const Direction dir{i};
      const int axis = dir.axis(dim_);
      const int c = coord(x, axis) + dir.sign(dim_);
      if (c < -steps_ || c > steps_) continue;
      const auto stride = static_cast<std::int64_t>(strides_[axis]);
      (*table)[x * nd + i] = static_cast<std::int64_t>(x) + dir.sign(dim_) * stride;
    }
  }
  neighbors_ = std::move(table);
}

bool GridSpec::contains(const SiteId& x) const noexcept {
  if (x.dim() != dim_) return false;
  for (int c : x.coords)
    if (c < -steps_ || c > steps_) return false;
  return true;
}

SiteIndex GridSpec::index(const SiteId& x) const {
  if (x.dim() != dim_)
    throw Error(ErrorKind::dimension_mismatch, "site dimension does not match grid");
  if (!contains(x)) throw Error(ErrorKind::invalid_parameter, "site outside the truncation box");
  SiteIndex idx = 0;
  for (int axis = 0; axis < dim_; ++axis)
    idx += static_cast<std::size_t>(x.coords[axis] + steps_) * strides_[axis];
  return idx;
}

SiteId GridSpec::site(SiteIndex i) const {
  SiteId s;
  s.coords.resize(dim_);
  for (int axis = 0; axis < dim_; ++axis) s.coords[axis] = coord(i, axis);
  return s;
}

std::vector<double> GridSpec::position(SiteIndex i) const {
  std::vector<double> p(dim_);
  for (int axis = 0; axis < dim_; ++axis) p[axis] = position(i, axis);
  return p;
}

std::optional<SiteId> GridSpec::neighbor(const SiteId& x, Direction i) const {
  if (!contains(x)) throw Error(ErrorKind::invalid_parameter, "site outside the truncation box");
  SiteId y = x;
  y.coords[i.axis(dim_)] += i.sign(dim_);
  if (!contains(y)) return std::nullopt;
  return y;
}

bool GridSpec::interior(SiteIndex x) const noexcept {
  for (int axis = 0; axis < dim_; ++axis) {
    const int c = coord(x, axis);
    if (c == -steps_ || c == steps_) return false;
  }
  return true;
}

double GridSpec::distance(SiteIndex a, SiteIndex b) const noexcept {
  double s = 0.0;
  for (int axis = 0; axis < dim_; ++axis) {
    const double d = epsilon_ * (coord(a, axis) - coord(b, axis));
    s += d * d;
  }
  return std::sqrt(s);
}

SiteIndex GridSpec::nearest(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != dim_)
    throw Error(ErrorKind::dimension_mismatch, "point dimension does not match grid");
  SiteId s;
  s.coords.resize(dim_);
  for (int axis = 0; axis < dim_; ++axis) {
    long c = std::lround(point[axis] / epsilon_);
    c = std::clamp<long>(c, -steps_, steps_);
    s.coords[axis] = static_cast<int>(c);
  }
  return index(s);
}

}  // namespace trimlab
