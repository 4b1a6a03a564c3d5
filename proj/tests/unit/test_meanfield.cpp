#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "trimlab/errors.hpp"
#include "trimlab/meanfield.hpp"
#include "trimlab/numerics.hpp"
#include "trimlab/operators.hpp"

using namespace trimlab;

namespace {

RateTable rates(double eps, double L) {
  return build_q_from_b(DriftModel::tanh_well(2.0), MollifierSpec{}, GridSpec(eps, 1, L));
}

GridFunction bump(const GridSpec& g) {
  GridFunction u(g);
  for (SiteIndex x = 0; x < g.site_count(); ++x) u.set(x, std::exp(-g.position(x, 0) * g.position(x, 0)));
  const double s = u.sum();
  for (SiteIndex x = 0; x < g.site_count(); ++x) u.set(x, u[x] / s);
  return u;
}

}  // namespace

TEST_CASE("water level matches bisection") {
  RandomStream r(4, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> f(1 + r.below(40));
    for (auto& v : f) v = r.uniform();
    double total = 0.0, lo = 1.0;
    for (double v : f) total += v, lo = std::min(lo, v);
    const double m = r.uniform() * (total - lo * static_cast<double>(f.size()));
    const WaterLevel w = water_level_cap(f, m);
    CHECK(w.level == doctest::Approx(oracle::water_level_bisect(f, m)).epsilon(1e-10).scale(1.0));
    double removed = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      CHECK(w.capped[k] == std::min(f[k], w.level));
      removed += f[k] - w.capped[k];
    }
    CHECK(removed == doctest::Approx(m).epsilon(1e-12).scale(1.0));
  }
  const std::vector<double> f{1.0, 2.0};
  CHECK_THROWS_AS(water_level_cap(f, 5.0), Error);
}

TEST_CASE("one splitting step conserves mass and removes at the top") {
  const RateTable rt = rates(0.1, 3.0);
  const GridFunction u = bump(rt.grid());
  const auto st = step_trim_splitting(rt, u, 1e-4);
  CHECK(std::abs(st.u_next.sum() - 1.0) < 1e-14);
  CHECK(st.lambda.sum() == doctest::Approx(1.0).epsilon(1e-10));
  double top = 0.0;
  for (SiteIndex x = 0; x < u.size(); ++x) top = std::max(top, st.u_next[x]);
  for (SiteIndex x = 0; x < u.size(); ++x) {
    CHECK(st.lambda[x] >= 0.0);
    if (st.lambda[x] > 0.0) CHECK(st.u_next[x] == top);
  }
}

TEST_CASE("without removal the solver follows the growth semigroup") {
  const RateTable rt = rates(0.2, 2.0);
  const GridFunction u0 = bump(rt.grid());
  SchemeConfig cfg;
  cfg.dt = 1e-4;
  cfg.removal = false;
  const auto sol = solve(rt, u0, 0.5, cfg);
  const Eigen::MatrixXd P = oracle::expm_taylor(0.5 * oracle::generator(rt));
  const Eigen::Map<const Eigen::VectorXd> v0(u0.values().data(), u0.size());
  const Eigen::VectorXd ref = std::exp(0.5) * (P.transpose() * v0);
  const GridFunction& uT = sol.path.u.back();
  for (SiteIndex x = 0; x < u0.size(); ++x) CHECK(std::abs(uT[x] - ref(x)) < 1e-5);
}

TEST_CASE("full solve: invariants along the path") {
  const RateTable rt = rates(0.1, 4.0);
  const GridFunction u0 = bump(rt.grid());
  for (Scheme s : {Scheme::trim_splitting, Scheme::active_set}) {
    SchemeConfig cfg;
    cfg.dt = 1e-4;
    cfg.scheme = s;
    cfg.record_stride = 100;
    const auto sol = solve(rt, u0, 0.5, cfg);
    const auto& d = sol.diagnostics;
    CHECK(d.mass_ok());
    CHECK(d.lambda_ok());
    CHECK(d.support_ok());
    CHECK(d.growth_ok());
    CHECK(sol.path.times.back() == doctest::Approx(0.5));
    CHECK(sol.path.size() == sol.removal.size());
    for (const auto& u : sol.path.u) CHECK(std::abs(u.sum() - 1.0) < 1e-9);
    // Total removal over [0, T] is T.
    CHECK(exact_sum(sol.removal_total) == doctest::Approx(0.5).epsilon(1e-9));
    const auto res = ode_residuals(rt, sol.path, sol.removal);
    CHECK(res.min_lambda >= 0.0);
  }
}

TEST_CASE("the two schemes agree in density units") {
  const RateTable rt = rates(0.1, 4.0);
  const GridFunction u0 = bump(rt.grid());
  SchemeConfig a, b;
  b.scheme = Scheme::active_set;
  const auto sa = solve(rt, u0, 0.3, a), sb = solve(rt, u0, 0.3, b);
  double diff = 0.0;
  for (SiteIndex x = 0; x < u0.size(); ++x)
    diff = std::max(diff, std::abs(sa.path.u.back()[x] - sb.path.u.back()[x]));
  CHECK(diff / 0.1 < 1e-2);
}

TEST_CASE("positivity bound and input checks") {
  const RateTable rt = rates(0.1, 2.0);
  SchemeConfig cfg;
  cfg.dt = 0.01;
  CHECK_THROWS_AS(solve(rt, bump(rt.grid()), 1.0, cfg), Error);
  cfg.dt = 1e-4;
  CHECK_THROWS_AS(solve(rt, GridFunction(rt.grid(), 1.0), 1.0, cfg), Error);
}

TEST_CASE("modulus of continuity of a linear profile") {
  GridSpec g(0.1, 1, 1.0);
  GridFunction f(g);
  for (SiteIndex x = 0; x < g.site_count(); ++x) f.set(x, 3.0 * g.position(x, 0));
  CHECK(modulus_of_continuity(f, 0.25) == doctest::Approx(0.6));
  CHECK(modulus_of_continuity(f, 0.05) == 0.0);
  const GridFunction U = to_density(f);
  CHECK(U[0] == doctest::Approx(-30.0));
}

TEST_CASE("argmax band") {
  GridSpec g(0.5, 1, 1.0);
  GridFunction f(g, std::vector<double>{0.1, 0.3, 0.29, 0.3, 0.0});
  CHECK(argmax_band(f, 0.0) == std::vector<SiteIndex>{1, 3});
  CHECK(argmax_band(f, 0.02) == std::vector<SiteIndex>{1, 2, 3});
}
