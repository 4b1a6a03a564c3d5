#pragma once

#include <vector>

#include "trimlab/grid_function.hpp"

namespace trimlab {

/// Time-indexed grid densities u_k (probability vectors, mass-1 units).
struct DensityPath {
  std::vector<double> times;
  std::vector<GridFunction> u;

  std::size_t size() const noexcept { return times.size(); }
};

/// Removal rates Lambda_k >= 0 with sum 1, indexed like the DensityPath they
/// belong to: rates[k] is the rate in force on [times[k], times[k+1]).
struct RemovalRatePath {
  std::vector<double> times;
  std::vector<GridFunction> rates;

  std::size_t size() const noexcept { return times.size(); }
};

}  // namespace trimlab
