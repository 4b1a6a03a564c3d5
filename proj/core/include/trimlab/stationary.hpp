#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "trimlab/drift.hpp"
#include "trimlab/grid_function.hpp"

namespace trimlab {

/// Which removal density ships with the tanh-well flat-top solution.
/// `derived`: h (1 + 2 sech^2 x), the density obtained by substituting the
/// profile into the stationary equation (unit mass). `printed`:
/// h (1 + sech^2 x), as published (mass 2h (w + tanh w) ~ 0.692).
enum class BetaFormula { derived, printed };

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

/// Analytic stationary pair (u, beta) on the line.
struct ClosedFormSolution {
  std::string name;
  DriftModel drift = DriftModel::zero();
  std::function<double(double)> u;
  /// Absolutely continuous part of beta_t, supported on [support_lo, support_hi].
  std::function<double(double)> beta_density;
  double support_lo = 0.0, support_hi = 0.0;
  std::vector<Atom> atoms;
  /// The argmax set: [argmax_lo, argmax_hi] (a singleton when equal).
  double argmax_lo = 0.0, argmax_hi = 0.0;
  /// Points where u or b fail to be smooth; quadrature cuts there.
  std::vector<double> kinks;
  /// Slowest exponential decay rate of the tails (for truncating integrals).
  double decay_rate = 1.0;
  std::map<std::string, double> parameters;
  /// Set for closed forms that were derived here rather than printed.
  bool implementer_derived = false;
};

/// Flat-top solution for b = -2 tanh: plateau h on [-w, w] with
/// w = log(1 + sqrt 2), h = 1 / (2 (w + sqrt 2)); 2h sinh|x| / cosh^2 x outside.
ClosedFormSolution example1(BetaFormula beta = BetaFormula::derived);

/// Flat top of half-width w >= 0 for b = -a sign(x), a > 2.
ClosedFormSolution example2_flat(double a, double w);

/// Sharp top u(x) = A e^{-l1 |x|} + B e^{-l2 |x|}, beta = delta_0, with
/// A + B = v0 and 2 (A l2 + B l1) = 1; v0 in [1/(2a), 1/(a - r)].
ClosedFormSolution example2_sharp(double a, double v0);

/// a = 2: u(x) = e^{-|x|} (|x| + 1) / 4, beta = delta_0.
ClosedFormSolution example2_critical();

/// Smooth compactly supported bump exp(-1 / (1 - z^2)), z = (x - center) / radius,
/// with analytic first and second derivatives.
struct BumpTest {
  double center = 0.0;
  double radius = 1.0;

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  double lo() const { return center - radius; }
  double hi() const { return center + radius; }
};

struct WeakFormEntry {
  BumpTest phi;
  double generator_term = 0.0;  // <L phi + phi, u>
  double removal_term = 0.0;    // <phi, beta_t>
  double residual = 0.0;        // |T (generator_term - removal_term)|
};

struct WeakFormReport {
  std::vector<WeakFormEntry> entries;
  double max_residual = 0.0;
};

/// Residual of <phi, u(t)> = <phi, u0> + int_0^T <L phi + phi, u> - int_0^T <phi, beta_s>
/// for the stationary pair, where L phi = phi'' + b phi'. Composite
/// Gauss-Legendre with about `nodes` nodes, cut at kinks and drift jumps.
WeakFormReport weak_form_residual(const ClosedFormSolution& sol, const std::vector<BumpTest>& tests,
                                  double T, int nodes = 10'000);

struct SolutionChecks {
  double mass = 0.0;        // integral of u
  double beta_rate = 0.0;   // density integral + atom weights
  double min_u = 0.0;       // over the scan
  double max_u = 0.0;
  double max_outside_argmax = 0.0;  // sup of u off the argmax set (scan)
  double plateau_spread = 0.0;      // max - min of u on the argmax set (scan)
  bool max_on_argmax = false;
};

/// Quadrature mass checks plus a uniform scan of `scan_points` points.
SolutionChecks check_solution(const ClosedFormSolution& sol, int scan_points = 100'000);

/// Point samples eps u(x) on a one-dimensional grid, renormalized to unit mass.
GridFunction sample_on_grid(const ClosedFormSolution& sol, const GridSpec& grid);

}  // namespace trimlab
