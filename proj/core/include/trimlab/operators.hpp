#pragma once

#include <span>

#include <Eigen/Dense>

#include "trimlab/drift.hpp"
#include "trimlab/grid_function.hpp"
#include "trimlab/paths.hpp"

namespace trimlab {

/// L f(x) = sum_i r_i(x) (f(x + eps k_i) - f(x)); suppressed directions are omitted.
GridFunction apply_L(const RateTable& rt, const GridFunction& f);

/// Exact transpose of the truncated L: L* f(x) = sum_{i allowed} r_{i*}(x + eps k_i)
/// f(x + eps k_i) - r_out(x) f(x). Column sums vanish, so mass is conserved.
GridFunction apply_Lstar(const RateTable& rt, const GridFunction& f);

/// The adjoint written through the infinite-grid rates,
/// sum_i rho_i(x) f(x + eps k_i) - r_bar(x) f(x). Agrees with apply_Lstar at
/// interior sites; at boundary sites the missing neighbours contribute zero.
GridFunction apply_Lstar_rho_formula(const RateTable& rt, const GridFunction& f);

/// Markov generator bar L f(x) = sum_{i allowed} rho_i(x) (f(x + eps k_i) - f(x)).
GridFunction apply_barL(const RateTable& rt, const GridFunction& f);

/// |<L f, g> - <f, L* g>|.
double duality_residual(const RateTable& rt, const GridFunction& f, const GridFunction& g);

/// Raw kernel: out = L* in (spans of length site_count).
void lstar_into(const RateTable& rt, std::span<const double> in, std::span<double> out);

/// Forward evolution v -> exp(t (L* + growth)) v, realized matrix-free by
/// classical RK4 sub-steps with h * (max_r_out + max_rho_in + growth) <= 1.
/// With growth = 1 this is the action of s_t = e^t p_t; with growth = 0, of p_t.
class Semigroup {
 public:
  explicit Semigroup(const RateTable& rt, double growth = 0.0) : rt_(&rt), growth_(growth) {}

  GridFunction apply(const GridFunction& v, double t) const;
  void apply_in_place(std::vector<double>& v, double t) const;
  /// Row x of the kernel: exp(t (L* + growth)) applied to the indicator of x.
  GridFunction row(SiteIndex x, double t) const;

  double growth() const noexcept { return growth_; }

 private:
  const RateTable* rt_;
  double growth_;
};

/// Dense generator matrix Q(x, y) (rows: from-site) of the truncated walk.
Eigen::MatrixXd generator_matrix(const RateTable& rt);

/// p_t(x, y) = exp(t Q)(x, y) by scaling-and-squaring Pade; grids up to 2000 sites.
Eigen::MatrixXd dense_kernel(const RateTable& rt, double t);

/// l_inf over y of u(y, t) - [sum_x u(x, s) s_{t-s}(x, y) - int_s^t sum_x Lambda(x, tau)
/// s_{t-tau}(x, y) dtau], trapezoid rule on the path mesh. `s` and `t` must be
/// mesh times; HorizonExceeded otherwise.
double duhamel_residual(const RateTable& rt, const DensityPath& path, const RemovalRatePath& removal,
                        double s, double t);

}  // namespace trimlab
