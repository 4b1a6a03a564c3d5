#include <doctest.h>

#include <cmath>
#include <vector>

#include "trimlab/errors.hpp"
#include "trimlab/grid.hpp"
#include "trimlab/grid_function.hpp"

using namespace trimlab;

TEST_CASE("site count and coordinates") {
  GridSpec g(0.25, 2, 1.0);
  CHECK(g.steps_per_side() == 4);
  CHECK(g.side() == 9);
  CHECK(g.site_count() == 81);
  CHECK(g.direction_count() == 4);
  for (SiteIndex i = 0; i < g.site_count(); ++i) {
    const SiteId s = g.site(i);
    CHECK(g.index(s) == i);
    for (int a = 0; a < 2; ++a) {
      CHECK(g.coord(i, a) == s.coords[a]);
      CHECK(g.position(i, a) == 0.25 * s.coords[a]);
    }
  }
}

TEST_CASE("index order is the lexicographic order") {
  GridSpec g(0.5, 3, 1.0);
  for (SiteIndex i = 0; i + 1 < g.site_count(); ++i) {
    CHECK(total_order_cmp(g.site(i), g.site(i + 1)) == std::strong_ordering::less);
  }
  CHECK(total_order_cmp(SiteId{{0, 5}}, SiteId{{1, -5}}) == std::strong_ordering::less);
  CHECK_THROWS_AS(total_order_cmp(SiteId{{0}}, SiteId{{0, 0}}), Error);
}

TEST_CASE("neighbours move one lattice step and reflect mode suppresses exits") {
  GridSpec g(0.5, 2, 1.0);
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    const SiteId s = g.site(x);
    for (int i = 0; i < 4; ++i) {
      const Direction dir{i};
      SiteId t = s;
      t.coords[dir.axis(2)] += dir.sign(2);
      const auto n = g.neighbor(x, dir);
      CHECK(n.has_value() == g.contains(t));
      if (n) {
        CHECK(g.site(*n) == t);
        CHECK(g.neighbor(*n, dir.reversed(2)) == x);
      }
    }
  }
  int interior = 0;
  for (SiteIndex x = 0; x < g.site_count(); ++x) interior += g.interior(x);
  CHECK(interior == 9);
}

TEST_CASE("direction involution") {
  for (int d = 1; d <= 3; ++d)
    for (int v = 0; v < 2 * d; ++v) {
      const Direction i{v};
      CHECK(i.reversed(d).reversed(d) == i);
      CHECK(i.reversed(d).axis(d) == i.axis(d));
      CHECK(i.reversed(d).sign(d) == -i.sign(d));
    }
}

TEST_CASE("nearest rounds half away from zero and clamps") {
  GridSpec g(0.1, 1, 1.0);
  const double p1[] = {0.05};
  const double p2[] = {-0.05};
  const double p3[] = {7.0};
  const double p4[] = {0.14};
  CHECK(g.position(g.nearest(p1), 0) == doctest::Approx(0.1));
  CHECK(g.position(g.nearest(p2), 0) == doctest::Approx(-0.1));
  CHECK(g.position(g.nearest(p3), 0) == doctest::Approx(1.0));
  CHECK(g.position(g.nearest(p4), 0) == doctest::Approx(0.1));
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(GridSpec(0.0, 1, 1.0), Error);
  CHECK_THROWS_AS(GridSpec(0.3, 1, 1.0), Error);
  CHECK_THROWS_AS(GridSpec(0.5, 0, 1.0), Error);
}

TEST_CASE("grid functions cache norms and invalidate on write") {
  GridSpec g(0.5, 1, 1.0);
  GridFunction f(g, std::vector<double>{1, -2, 3, 0, -4});
  CHECK(f.l1() == 10.0);
  CHECK(f.linf() == 4.0);
  CHECK(f.l2() == doctest::Approx(std::sqrt(30.0)));
  CHECK(f.sum() == -2.0);
  f.set(0, 10.0);
  CHECK(f.linf() == 10.0);
  f.mutable_values()[1] = 0.0;
  CHECK(f.l1() == 17.0);
  GridFunction e = GridFunction::indicator(g, 2);
  CHECK(inner(f, e) == 3.0);
  GridSpec h(0.25, 1, 1.0);
  CHECK_THROWS_AS(inner(f, GridFunction(h)), Error);
}
