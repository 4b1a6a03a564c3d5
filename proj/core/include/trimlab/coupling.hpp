#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "trimlab/drift.hpp"

namespace trimlab {

enum class MoveFlag : std::uint8_t { both, x_only, y_only };

/// Accepted moves of two walkers driven by shared candidate events with the
/// adjoint rates rho. Only events that move at least one walker are stored.
struct CoupledPairPath {
  SiteIndex x0 = 0, y0 = 0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<SiteIndex> xs, ys;  // positions after each stored event
  std::vector<MoveFlag> flags;
  std::uint64_t candidates = 0;
  double sup_distance = 0.0;      // sup_{t <= horizon} |X - Y|
  /// First time |X - Y| >= 1, if any.
  std::optional<double> tau;

  /// Positions at time t (right-continuous).
  std::pair<SiteIndex, SiteIndex> at(double t) const;
};

/// Per direction i, candidates arrive at rate E_i = max over the box of rho_i;
/// a candidate with mark theta ~ U[0, E_i) moves X iff theta < rho_i(X) and
/// the move stays in the box, and likewise Y.
CoupledPairPath simulate_coupled_walkers(SiteIndex x0, SiteIndex y0, const RateTable& rt, double T,
                                         std::uint64_t seed);

struct ContractionReport {
  std::size_t paths = 0;
  double initial_distance = 0.0;
  double bound = 0.0;           // |x0 - y0| e^{C T}
  double delta = 0.0;
  double mean_sup = 0.0;
  double stderr_sup = 0.0;
  double tail_probability = 0.0;  // P(sup |X - Y| > bound + delta)
  std::size_t tail_count = 0;
  double tau_fraction = 0.0;      // fraction of paths with tau <= horizon
};

/// Throws InvalidParameter when the paths do not share (x0, y0, T).
ContractionReport contraction_report(const RateTable& rt, const std::vector<CoupledPairPath>& paths,
                                     double C, double delta);

}  // namespace trimlab
