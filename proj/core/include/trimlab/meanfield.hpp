#pragma once

#include <optional>
#include <span>
#include <vector>

#include "trimlab/drift.hpp"
#include "trimlab/grid_function.hpp"
#include "trimlab/paths.hpp"

namespace trimlab {

struct WaterLevel {
  std::vector<double> capped;
  double level = 0.0;
};

/// Level c with sum_x (f(x) - c)^+ = m, and min(f, c). Exact piecewise-linear
/// search over the sorted values. Throws InfeasibleMass when
/// m > sum f - (min f) * |sites|.
WaterLevel water_level_cap(std::span<const double> f, double m);

enum class Scheme { trim_splitting, active_set };

struct SchemeConfig {
  double dt = 1e-4;
  Scheme scheme = Scheme::trim_splitting;
  /// Active-set band width in density units (U = eps^-d u). Unset: eps^2.
  std::optional<double> tau_flat;
  /// Record every `record_stride`-th step (the final time is always recorded).
  std::size_t record_stride = 1;
  /// Removal off gives the linear equation du = (L* + growth) u; removal
  /// requires growth.
  bool growth = true;
  bool removal = true;
  /// Abort when the total mass clipped from negative undershoots exceeds this.
  double clip_abort = 1e-6;
};

double effective_tau_flat(const SchemeConfig& cfg, const GridSpec& grid);

struct SplitStep {
  GridFunction u_next;
  GridFunction lambda;
  double level = 0.0;
};

/// u~ = u + dt (L* u + u); cap u~ at the water level removing |u~|_1 - 1;
/// Lambda = (u~ - u_next) / dt.
SplitStep step_trim_splitting(const RateTable& rt, const GridFunction& u, double dt);

struct ActiveSetStep {
  GridFunction u_next;
  GridFunction lambda;
  std::vector<SiteIndex> active;  // sorted
  double level_rate = 0.0;        // common plateau rate h-dot
  std::size_t retries = 0;
};

/// One explicit step of the free-obstacle form: sites in the active set move
/// together at the common rate h-dot = (sum_A (L*u + u) - 1) / |A| and carry
/// Lambda = (L*u + u) - h-dot. The set sheds sites with Lambda < 0 and
/// absorbs sites that would rise to within `tau_u` (mass units) of the
/// updated level while growing at least as fast as it.
ActiveSetStep step_active_set(const RateTable& rt, const GridFunction& u,
                              std::span<const SiteIndex> active, double dt, double tau_u);

/// Sites within `tau_u` (mass units) of the maximum, sorted.
std::vector<SiteIndex> argmax_band(const GridFunction& u, double tau_u);

struct SolveDiagnostics {
  std::size_t steps = 0;
  double dt = 0.0;
  double tau_flat = 0.0;          // density units
  double max_mass_error = 0.0;    // max_k |sum u_k - 1|
  double min_u = 0.0;             // before clipping
  double clipped_mass = 0.0;
  double min_lambda = 0.0;
  double max_lambda_sum_error = 0.0;
  double max_support_gap = 0.0;   // density units: max over supp Lambda_k of |U_k|_inf - U_k(x)
  double max_support_excess = 0.0;  // max_k (gap_k - allowed band_k); <= 0 means admissible
  double support_integral = 0.0;  // sum_k dt sum_x (|u_k|_inf - u_k(x)) Lambda_k(x)
  double growth_constant = 0.0;   // C_2 used in the l_inf growth bound
  double max_growth_ratio = 0.0;  // max_k |U_k|_inf / (|U_0|_inf e^{(1 + C_2) t_k})
  std::size_t max_retries = 0;

  bool mass_ok(double tol = 1e-9) const { return max_mass_error <= tol; }
  bool lambda_ok(double tol = 1e-9) const {
    return min_lambda >= 0.0 && max_lambda_sum_error <= tol;
  }
  bool support_ok() const { return max_support_excess <= 0.0; }
  bool growth_ok(double slack = 1e-6) const { return max_growth_ratio <= 1.0 + slack; }
};

struct MeanFieldSolution {
  DensityPath path;
  RemovalRatePath removal;
  /// sum_k dt Lambda_k per site: the removal measure of {x} x [0, T].
  std::vector<double> removal_total;
  SolveDiagnostics diagnostics;
};

/// Integrates the grid ODE from u0 to T. Throws InvalidParameter when the
/// positivity bound dt (max r_out + 1) < 1 fails or u0 is not a probability
/// vector (with removal on).
MeanFieldSolution solve(const RateTable& rt, const GridFunction& u0, double T,
                        const SchemeConfig& cfg);

struct OdeResidualReport {
  /// Integrated-form residual of the evolution equation on dyadic
  /// subintervals (trapezoid rule), l_inf over sites, per level.
  std::vector<double> integrated_by_level;
  double integrated_max = 0.0;
  double max_lambda_sum_error = 0.0;
  double min_lambda = 0.0;
  double support_integral = 0.0;
};

OdeResidualReport ode_residuals(const RateTable& rt, const DensityPath& path,
                                const RemovalRatePath& removal, int dyadic_levels = 4);

/// sup_{|x-y| <= eta} |f(x) - f(y)| over the sites of f's grid.
double modulus_of_continuity(const GridFunction& f, double eta);

/// Density units: eps^-d u.
GridFunction to_density(const GridFunction& u);

}  // namespace trimlab
