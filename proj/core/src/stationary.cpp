#include "trimlab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "trimlab/errors.hpp"
#include "trimlab/numerics.hpp"

namespace trimlab {

namespace {

double sech2(double x) {
  const double c = std::cosh(x);
  return 1.0 / (c * c);
}

}  // namespace

ClosedFormSolution example1(BetaFormula beta) {
  const double sqrt2 = std::numbers::sqrt2;
  const double w = std::log(1.0 + sqrt2);
  const double h = 1.0 / (2.0 * (w + sqrt2));

  ClosedFormSolution s;
  s.name = beta == BetaFormula::derived ? "example1" : "example1_printed_beta";
  s.drift = DriftModel::tanh_well(2.0);
  s.u = [w, h](double x) {
    const double a = std::abs(x);
    if (a <= w) return h;
    const double c = std::cosh(a);
    return 2.0 * h * std::sinh(a) / (c * c);
  };
  const double factor = beta == BetaFormula::derived ? 2.0 : 1.0;
  s.beta_density = [h, factor](double x) { return h * (1.0 + factor * sech2(x)); };
  s.support_lo = -w;
  s.support_hi = w;
  s.argmax_lo = -w;
  s.argmax_hi = w;
  s.kinks = {-w, w};
  s.decay_rate = 1.0;
  s.parameters = {{"w", w}, {"h", h}};
  s.implementer_derived = beta == BetaFormula::derived;
  return s;
}

ClosedFormSolution example2_flat(double a, double w) {
  if (!(a > 2.0)) throw Error(ErrorKind::invalid_parameter, "example2_flat requires a > 2");
  if (!(w >= 0.0)) throw Error(ErrorKind::invalid_parameter, "example2_flat requires w >= 0");
  const double r = std::sqrt(a * a - 4.0);
  const double l1 = 0.5 * (a - r), l2 = 0.5 * (a + r);
  const double level = 1.0 / (2.0 * (w + a));

  ClosedFormSolution s;
  s.name = "example2_flat";
  s.drift = DriftModel::sign_well(a);
  s.u = [=](double x) {
    const double d = std::abs(x) - w;
    if (d <= 0.0) return level;
    return level / r * (l2 * std::exp(-l1 * d) - l1 * std::exp(-l2 * d));
  };
  s.beta_density = [level](double) { return level; };
  s.support_lo = -w;
  s.support_hi = w;
  s.atoms = {{0.0, a / (w + a)}};
  s.argmax_lo = -w;
  s.argmax_hi = w;
  s.kinks = {-w, 0.0, w};
  s.decay_rate = l1;
  s.parameters = {{"a", a}, {"w", w}, {"r", r}, {"lambda1", l1}, {"lambda2", l2}};
  return s;
}

ClosedFormSolution example2_sharp(double a, double v0) {
  if (!(a > 2.0)) throw Error(ErrorKind::invalid_parameter, "example2_sharp requires a > 2");
  const double r = std::sqrt(a * a - 4.0);
  const double l1 = 0.5 * (a - r), l2 = 0.5 * (a + r);
  const double lo = 1.0 / (2.0 * a), hi = 1.0 / (a - r);
  const double slack = 1e-12 * hi;
  if (!(v0 >= lo - slack && v0 <= hi + slack))
    throw Error(ErrorKind::invalid_parameter, "example2_sharp: u(0) outside [1/(2a), 1/(a-r)]");
  const double A = (0.5 - v0 * l1) / r;
  const double B = (v0 * l2 - 0.5) / r;

  ClosedFormSolution s;
  s.name = "example2_sharp";
  s.drift = DriftModel::sign_well(a);
  s.u = [=](double x) {
    const double d = std::abs(x);
    return A * std::exp(-l1 * d) + B * std::exp(-l2 * d);
  };
  s.beta_density = [](double) { return 0.0; };
  s.atoms = {{0.0, 1.0}};
  s.kinks = {0.0};
  s.decay_rate = A != 0.0 ? l1 : l2;
  s.parameters = {{"a", a}, {"v0", v0}, {"r", r}, {"lambda1", l1},
                  {"lambda2", l2}, {"A", A}, {"B", B}};
  s.implementer_derived = true;
  return s;
}

ClosedFormSolution example2_critical() {
  ClosedFormSolution s;
  s.name = "example2_critical";
  s.drift = DriftModel::sign_well(2.0);
  s.u = [](double x) {
    const double d = std::abs(x);
    return 0.25 * std::exp(-d) * (d + 1.0);
  };
  s.beta_density = [](double) { return 0.0; };
  s.atoms = {{0.0, 1.0}};
  s.kinks = {0.0};
  s.decay_rate = 1.0;
  s.parameters = {{"a", 2.0}};
  return s;
}

double BumpTest::value(double x) const {
  const double z = (x - center) / radius;
  if (std::abs(z) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - z * z));
}

double BumpTest::d1(double x) const {
  const double z = (x - center) / radius;
  if (std::abs(z) >= 1.0) return 0.0;
  const double q = 1.0 - z * z;
  // d/dz exp(-1/q) = exp(-1/q) * (-2z / q^2)
  return std::exp(-1.0 / q) * (-2.0 * z / (q * q)) / radius;
}

double BumpTest::d2(double x) const {
  const double z = (x - center) / radius;
  if (std::abs(z) >= 1.0) return 0.0;
  const double q = 1.0 - z * z;
  const double g = -2.0 * z / (q * q);
  // g' = (-2 q^2 - (-2z)(2q)(-2z)) / q^4 = (-2 q - 8 z^2) / q^3
  const double dg = (-2.0 * q - 8.0 * z * z) / (q * q * q);
  return std::exp(-1.0 / q) * (g * g + dg) / (radius * radius);
}

WeakFormReport weak_form_residual(const ClosedFormSolution& sol, const std::vector<BumpTest>& tests,
                                  double T, int nodes) {
  WeakFormReport rep;
  for (const BumpTest& phi : tests) {
    WeakFormEntry e;
    e.phi = phi;
    const auto integrand = [&](double x) {
      const double b = sol.drift.component(std::span<const double>(&x, 1), 0);
      return (phi.d2(x) + b * phi.d1(x) + phi.value(x)) * sol.u(x);
    };
    e.generator_term = integrate(integrand, phi.lo(), phi.hi(), nodes, sol.kinks);

    double removal = 0.0;
    const double lo = std::max(phi.lo(), sol.support_lo);
    const double hi = std::min(phi.hi(), sol.support_hi);
    if (hi > lo)
      removal += integrate([&](double x) { return phi.value(x) * sol.beta_density(x); }, lo, hi,
                           nodes, sol.kinks);
    for (const Atom& a : sol.atoms) removal += a.weight * phi.value(a.location);
    e.removal_term = removal;
    e.residual = std::abs(T * (e.generator_term - e.removal_term));
    if (!std::isfinite(e.residual))
      throw Error(ErrorKind::invalid_parameter, "weak_form_residual: quadrature did not converge");
    rep.max_residual = std::max(rep.max_residual, e.residual);
    rep.entries.push_back(e);
  }
  return rep;
}

SolutionChecks check_solution(const ClosedFormSolution& sol, int scan_points) {
  SolutionChecks c;
  const double plateau = std::max(std::abs(sol.argmax_lo), std::abs(sol.argmax_hi));
  const double reach = plateau + 40.0 / sol.decay_rate;
  c.mass = integrate(sol.u, -reach, reach, 200'000, sol.kinks, 10);

  c.beta_rate = 0.0;
  if (sol.support_hi > sol.support_lo)
    c.beta_rate += integrate(sol.beta_density, sol.support_lo, sol.support_hi, 20'000, sol.kinks, 10);
  for (const Atom& a : sol.atoms) c.beta_rate += a.weight;

  c.min_u = std::numeric_limits<double>::infinity();
  c.max_u = -std::numeric_limits<double>::infinity();
  double plateau_min = std::numeric_limits<double>::infinity();
  double plateau_max = -std::numeric_limits<double>::infinity();
  c.max_outside_argmax = -std::numeric_limits<double>::infinity();
  const double span_lo = -reach / 4.0, span_hi = reach / 4.0;
  const auto visit = [&](double x) {
    const double v = sol.u(x);
    c.min_u = std::min(c.min_u, v);
    c.max_u = std::max(c.max_u, v);
    if (x >= sol.argmax_lo && x <= sol.argmax_hi) {
      plateau_min = std::min(plateau_min, v);
      plateau_max = std::max(plateau_max, v);
    } else {
      c.max_outside_argmax = std::max(c.max_outside_argmax, v);
    }
  };
  for (int k = 0; k < scan_points; ++k)
    visit(span_lo + (span_hi - span_lo) * k / static_cast<double>(scan_points - 1));
  // Make sure the argmax set itself is sampled.
  visit(sol.argmax_lo);
  visit(sol.argmax_hi);
  visit(0.5 * (sol.argmax_lo + sol.argmax_hi));

  c.plateau_spread = plateau_max - plateau_min;
  c.max_on_argmax = plateau_min == c.max_u && c.max_outside_argmax < c.max_u;
  return c;
}

GridFunction sample_on_grid(const ClosedFormSolution& sol, const GridSpec& grid) {
  if (grid.dim() != 1)
    throw Error(ErrorKind::dimension_mismatch, "closed-form solutions live in one dimension");
  std::vector<double> v(grid.site_count());
  for (SiteIndex x = 0; x < grid.site_count(); ++x) v[x] = grid.epsilon() * sol.u(grid.position(x, 0));
  const double mass = exact_sum(v);
  for (double& y : v) y /= mass;
  return GridFunction(grid, std::move(v));
}

}  // namespace trimlab
