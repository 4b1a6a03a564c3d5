#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "trimlab/grid.hpp"

namespace trimlab {

struct ZeroDrift {};

/// b(x)_j = -scale * tanh(x_j).
struct TanhWell {
  double scale = 2.0;
};

/// b(x)_j = -a * sign(x_j). Discontinuous: usable for closed-form oracles only.
struct SignWell {
  double a = 2.0;
};

/// Drift sampled on a regular grid, evaluated by multilinear interpolation
/// (clamped outside the table).
struct TabulatedDrift {
  GridSpec grid;
  std::vector<double> values;  // site-major, dim components per site
};

class DriftModel {
 public:
  using Kind = std::variant<ZeroDrift, TanhWell, SignWell, TabulatedDrift>;

  static DriftModel zero() { return DriftModel(ZeroDrift{}); }
  static DriftModel tanh_well(double scale) { return DriftModel(TanhWell{scale}); }
  static DriftModel sign_well(double a);
  static DriftModel tabulated(TabulatedDrift table);
  /// CSV with header x_1..x_d,b_1..b_d; rows must cover a full regular grid.
  static DriftModel from_csv(const std::string& path);

  const Kind& kind() const noexcept { return kind_; }
  bool irregular() const noexcept { return std::holds_alternative<SignWell>(kind_); }
  std::string name() const;

  /// Component `axis` of b at an arbitrary point.
  double component(std::span<const double> x, int axis) const;
  std::vector<double> operator()(std::span<const double> x) const;

  /// Known global Lipschitz constant of b when available (0 for zero drift).
  double lipschitz_constant() const;

 private:
  explicit DriftModel(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// Standard bump mollifier on the line, rescaled to the given radius.
struct MollifierSpec {
  double radius = 0.5;
  int nodes = 128;
};

/// Quadrature realization of a MollifierSpec: nodes s_j in (-radius, radius)
/// and weights w_j with sum_j w_j g(s_j) ~ (g * eta)(0).
class Mollifier {
 public:
  explicit Mollifier(const MollifierSpec& spec);

  /// eta(s), unit integral (normalizing constant computed to ~1e-15).
  double density(double s) const;
  /// Integral of eta under the configured node rule (close to 1).
  double rule_mass() const noexcept { return rule_mass_; }
  const MollifierSpec& spec() const noexcept { return spec_; }

  /// (g * eta)(x) = integral g(x - s) eta(s) ds.
  double convolve(const std::function<double(double)>& g, double x) const;

 private:
  MollifierSpec spec_;
  double normalizer_ = 1.0;
  double rule_mass_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Discrete drift perturbation q_{eps,i}(x) at arbitrary integer coordinates
/// (the box plus its one-site halo are queried). Direction is zero-based.
using PerturbationFn = std::function<double(std::span<const int> coords, Direction i)>;

/// Per-site, per-direction jump rates r = eps^-2 + eps^-1 q together with the
/// adjoint rates rho_i(x) = r_{i*}(x + eps k_i).
///
/// q and rho are defined by the infinite-grid formulas at every box site (the
/// halo values of q are evaluated, not clamped). Box-restricted sums skip the
/// directions the grid suppresses.
class RateTable {
 public:
  static RateTable from_perturbation(const GridSpec& grid, const PerturbationFn& q);

  const GridSpec& grid() const noexcept { return grid_; }
  int directions() const noexcept { return nd_; }

  double q(SiteIndex x, int i) const noexcept { return q_[x * nd_ + i]; }
  /// q_i(x - eps k_i), which may lie in the halo.
  double q_behind(SiteIndex x, int i) const noexcept { return q_back_[x * nd_ + i]; }
  double r(SiteIndex x, int i) const noexcept { return r_[x * nd_ + i]; }
  double rho(SiteIndex x, int i) const noexcept { return rho_[x * nd_ + i]; }
  std::span<const double> rates(SiteIndex x) const noexcept {
    return {r_.data() + x * nd_, static_cast<std::size_t>(nd_)};
  }

  /// Sum over all 2d directions.
  double r_bar(SiteIndex x) const noexcept { return r_bar_[x]; }
  double rho_bar(SiteIndex x) const noexcept { return rho_bar_[x]; }
  /// Sums over the directions allowed at x.
  double r_out(SiteIndex x) const noexcept { return r_out_[x]; }
  double rho_in(SiteIndex x) const noexcept { return rho_in_[x]; }

  double max_r_out() const noexcept { return max_r_out_; }
  double max_rho_in() const noexcept { return max_rho_in_; }
  /// sup |q| over box sites (the reported C_1 candidate).
  double sup_abs_q() const noexcept { return sup_abs_q_; }
  /// The discrete drift b_eps(x) = sum_i q_i(x) k_i.
  std::vector<double> discrete_drift(SiteIndex x) const;

 private:
  explicit RateTable(const GridSpec& grid) : grid_(grid), nd_(grid.direction_count()) {}

  GridSpec grid_;
  int nd_;
  std::vector<double> q_, q_back_, r_, rho_;
  std::vector<double> r_bar_, rho_bar_, r_out_, rho_in_;
  double max_r_out_ = 0.0, max_rho_in_ = 0.0, sup_abs_q_ = 0.0;
};

/// q_{eps,i} = (b . e_i)^+ * eta for i <= d and q_{eps,i+d} = -b . e_i + q_{eps,i},
/// with the one-dimensional mollifier applied along axis i. The discrete drift
/// reproduces b exactly at every site.
///
/// Throws IrregularDrift for sign_well and EpsilonTooLarge if some r or rho is
/// not strictly positive.
RateTable build_q_from_b(const DriftModel& b, const MollifierSpec& m, const GridSpec& g);

struct Assumption1Report {
  double sup_q = 0.0;
  double lipschitz_q = 0.0;
  double second_difference_q = 0.0;
  double drift_error = 0.0;  // sup_x |b_eps(x) - b(x)|
  double threshold = 0.0;
  std::size_t pairs_examined = 0;
  bool violation = false;
};

/// Measures sup|q|, the Lipschitz quotient of q and the Lipschitz quotient of
/// the forward difference (q_i(x + eps k_i) - q_i(x)) / eps over site pairs.
/// All pairs are examined up to `max_pairs`; beyond that, adjacent pairs plus
/// a seeded random sample.
Assumption1Report validate_assumption1(const RateTable& rt, const DriftModel& b, double c1,
                                       std::size_t max_pairs = 4'000'000,
                                       std::uint64_t seed = 0x5eed);

struct HField {
  std::vector<double> h;         // eps^-1 sum_i (q_i(x) - q_i(x - eps k_i))
  std::vector<double> h_direct;  // r_bar(x) - rho_bar(x)
  std::vector<double> h_box;     // r_out(x) - rho_in(x): exact zeroth-order term on the box
  double sup_abs = 0.0;
  double lipschitz = 0.0;
  double max_formula_gap = 0.0;  // max_x |h - h_direct|
  /// max(sup|h|, max_x(-h_box)): growth constant valid on the truncated box.
  double growth_constant = 0.0;
};

HField compute_h(const RateTable& rt);

}  // namespace trimlab
