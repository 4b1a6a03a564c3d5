#include "trimlab/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trimlab/errors.hpp"
#include "trimlab/numerics.hpp"

namespace trimlab {

GridFunction::GridFunction(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.site_count())
    throw Error(ErrorKind::grid_mismatch, "value count does not match grid site count");
}

GridFunction GridFunction::indicator(const GridSpec& grid, SiteIndex x) {
  GridFunction f(grid);
  f.set(x, 1.0);
  return f;
}

const GridFunction::Norms& GridFunction::norms() const {
  if (!norms_) {
    double l1 = 0.0, l2 = 0.0, linf = 0.0;
    for (double v : values_) {
      const double a = std::abs(v);
      l1 += a;
      l2 += v * v;
      linf = std::max(linf, a);
    }
    norms_ = Norms{l1, std::sqrt(l2), linf};
  }
  return *norms_;
}

double GridFunction::l1() const { return norms().l1; }
double GridFunction::l2() const { return norms().l2; }
double GridFunction::linf() const { return norms().linf; }
double GridFunction::sum() const { return exact_sum(values_); }

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!a.same_as(b)) throw Error(ErrorKind::grid_mismatch, std::string(what) + ": grid mismatch");
}

double inner(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
  return s;
}

}  // namespace trimlab
