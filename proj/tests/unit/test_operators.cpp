#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "trimlab/numerics.hpp"
#include "trimlab/operators.hpp"

using namespace trimlab;

namespace {

GridFunction random_function(const GridSpec& g, std::uint64_t seed) {
  RandomStream r(seed, 9);
  GridFunction f(g);
  for (SiteIndex x = 0; x < g.site_count(); ++x) f.set(x, 2.0 * r.uniform() - 1.0);
  return f;
}

RateTable tanh_rates(double eps, int d, double L) {
  return build_q_from_b(DriftModel::tanh_well(2.0), MollifierSpec{}, GridSpec(eps, d, L));
}

}  // namespace

TEST_CASE("L and L* match the generator matrix built independently") {
  for (int d : {1, 2}) {
    const RateTable rt = tanh_rates(d == 1 ? 0.1 : 0.25, d, 1.5);
    const Eigen::MatrixXd Q = oracle::generator(rt);
    const GridFunction f = random_function(rt.grid(), 1);
    const Eigen::Map<const Eigen::VectorXd> fv(f.values().data(), f.size());
    const Eigen::VectorXd Lf = Q * fv;
    const Eigen::VectorXd Lsf = Q.transpose() * fv;
    const GridFunction a = apply_L(rt, f), b = apply_Lstar(rt, f);
    const double scale = Q.cwiseAbs().maxCoeff();
    for (SiteIndex x = 0; x < f.size(); ++x) {
      CHECK(std::abs(a[x] - Lf(x)) <= 1e-13 * scale);
      CHECK(std::abs(b[x] - Lsf(x)) <= 1e-13 * scale);
    }
    CHECK((generator_matrix(rt) - Q).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("duality and mass conservation") {
  const RateTable rt = tanh_rates(0.1, 1, 2.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const GridFunction f = random_function(rt.grid(), 2 * s), g = random_function(rt.grid(), 2 * s + 1);
    CHECK(duality_residual(rt, f, g) <= 1e-10 * f.l2() * g.l2());
    const GridFunction Lf = apply_Lstar(rt, f);
    double scale = 0.0;
    for (SiteIndex x = 0; x < f.size(); ++x) scale += rt.r_out(x) * std::abs(f[x]);
    CHECK(std::abs(exact_sum(Lf.values())) <= 64 * 2.2e-16 * scale);
  }
}

TEST_CASE("L* = Lbar - h in the interior and the rho formula agrees there") {
  const RateTable rt = tanh_rates(0.1, 1, 2.0);
  const auto& g = rt.grid();
  const HField h = compute_h(rt);
  const GridFunction f = random_function(g, 5);
  const GridFunction a = apply_Lstar(rt, f), b = apply_barL(rt, f), c = apply_Lstar_rho_formula(rt, f);
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    CHECK(std::abs(a[x] - (b[x] - h.h_box[x] * f[x])) <= 1e-12);
    if (g.interior(x)) {
      CHECK(std::abs(a[x] - (b[x] - h.h[x] * f[x])) <= 1e-11);
      CHECK(std::abs(a[x] - c[x]) <= 1e-11);
    }
  }
}

TEST_CASE("barL annihilates constants") {
  const RateTable rt = tanh_rates(0.25, 2, 1.0);
  const GridFunction one(rt.grid(), 1.0);
  CHECK(apply_barL(rt, one).linf() == 0.0);
  CHECK(apply_L(rt, one).linf() == 0.0);
}

TEST_CASE("dense kernel matches an independent Taylor exponential") {
  const RateTable rt = tanh_rates(0.2, 1, 2.0);
  const Eigen::MatrixXd Q = oracle::generator(rt);
  for (double t : {0.05, 0.5}) {
    const Eigen::MatrixXd P = dense_kernel(rt, t);
    const Eigen::MatrixXd ref = oracle::expm_taylor(t * Q);
    CHECK((P - ref).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(P.minCoeff() > -1e-14);
  }
}

// The semigroup is RK4 with h * (max r_out + max rho_in) <= 1: accurate to about 1e-8.
TEST_CASE("semigroup action agrees with the dense kernel") {
  const RateTable rt = tanh_rates(0.2, 1, 2.0);
  const double t = 0.3;
  const Eigen::MatrixXd P = dense_kernel(rt, t);
  const Semigroup p(rt), s(rt, 1.0);
  const GridSpec& g = rt.grid();
  const SiteIndex x0 = 4;
  const GridFunction row = p.row(x0, t);
  for (SiteIndex y = 0; y < g.site_count(); ++y) CHECK(std::abs(row[y] - P(x0, y)) < 1e-7);
  const GridFunction grown = s.row(x0, t);
  CHECK(grown.sum() == doctest::Approx(std::exp(t)).epsilon(1e-9));
}
