#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "trimlab/numerics.hpp"

using namespace trimlab;

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly") {
  for (int n : {2, 4, 8, 16}) {
    GaussLegendre gl(n);
    double wsum = 0.0;
    for (double w : gl.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) s += gl.weights[k] * std::pow(gl.nodes[k], p);
      const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
      CHECK(std::abs(s - exact) < 1e-13);
    }
  }
}

TEST_CASE("integrate handles a kink at a breakpoint") {
  const auto f = [](double x) { return std::abs(x - 0.3); };
  const double bp[] = {0.3};
  const double v = integrate(f, -1.0, 1.0, 400, bp);
  CHECK(v == doctest::Approx(0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7).epsilon(1e-14));
  CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 64) ==
        doctest::Approx(std::numbers::e - 1.0).epsilon(1e-14));
}

TEST_CASE("exact_sum is correctly rounded") {
  const std::vector<double> a{1e100, 1.0, -1e100};
  CHECK(exact_sum(a) == 1.0);
  const std::vector<double> b{0.1, 0.2, 0.3, -0.6};
  // 0.1 + 0.2 + 0.3 - 0.6 in exact binary arithmetic.
  CHECK(exact_sum(b) == 2.7755575615628914e-17);
  std::vector<double> c(10, 0.1);
  CHECK(exact_sum(c) == 1.0);
  ExactAccumulator acc;
  for (double v : a) acc.add(v);
  CHECK(acc.value() == 1.0);
}

TEST_CASE("random streams are reproducible and independent") {
  RandomStream a(7, 0), b(7, 0), c(7, 1), d(8, 0);
  int same_c = 0, same_d = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto x = a.next();
    CHECK(x == b.next());
    same_c += x == c.next();
    same_d += x == d.next();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
}

TEST_CASE("below and uniform have the right first moments") {
  RandomStream r(3, 2);
  const int n = 200000;
  double su = 0.0, sb = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    su += u;
    const auto b = r.below(7);
    REQUIRE(b < 7);
    sb += static_cast<double>(b);
  }
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sb / n - 3.0) < 5 * std::sqrt(4.0 / n));
}

TEST_CASE("exponential waiting times have mean 1/rate") {
  RandomStream r(11, 0);
  const int n = 100000;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += r.exponential(4.0);
  CHECK(std::abs(s / n - 0.25) < 5 * 0.25 / std::sqrt(n));
}
