#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trimlab/coupling.hpp"
#include "trimlab/drift.hpp"
#include "trimlab/io.hpp"
#include "trimlab/meanfield.hpp"
#include "trimlab/particle.hpp"

namespace trimlab {

enum class MetricKind { wasserstein1_1d, sup_density, site_sup };

struct MetricSpec {
  MetricKind kind = MetricKind::wasserstein1_1d;
  /// Kernel half-width for sup_density (physical units).
  double bandwidth = 0.25;
};

/// Distances between measures on one grid (weights summing to one).
/// wasserstein1_1d: eps sum_x |F_a(x) - F_b(x)|. site_sup: eps^-d max_x |a - b|
/// (density units). sup_density: the same after smoothing both with a
/// product Epanechnikov kernel of the given half-width.
double metric(const GridFunction& a, const GridFunction& b, const MetricSpec& spec);

/// Runs fn(0..n-1) on up to `jobs` threads; results keep index order.
template <class R>
std::vector<R> parallel_map(std::size_t n, unsigned jobs, const std::function<R(std::size_t)>& fn);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& v);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ExperimentConfig {
  DriftModel drift = DriftModel::tanh_well(2.0);
  MollifierSpec mollifier;
  int dim = 1;
  double half_width = 6.0;
  std::vector<double> epsilons{0.1};
  std::vector<Count> populations{1000, 10000, 100000};
  double T = 1.0;
  double dt = 1e-4;
  Scheme scheme = Scheme::trim_splitting;
  std::optional<double> tau_flat;
  std::vector<std::uint64_t> seeds;
  RemovalTiming timing = RemovalTiming::pre_birth;
  /// Also run the other removal-timing convention and report it.
  bool both_timings = false;
  MetricSpec metric;
  unsigned jobs = 1;
};

/// Example-1 stationary profile sampled on the grid (d = 1).
GridFunction example1_initial_data(const GridSpec& grid);

struct ConvergeNRow {
  Count population = 0;
  RemovalTiming timing = RemovalTiming::pre_birth;
  std::vector<double> distances;       // per seed, xi^N_T vs u_T
  std::vector<double> beta_distances;  // per seed, time-averaged removal histograms
  MeanStderr distance;
  MeanStderr beta_distance;
};

struct ConvergeNResult {
  std::vector<ConvergeNRow> rows;
  double slope = 0.0;  // log-log, main timing convention
  MeanFieldSolution reference;

  /// Seed-averaged distances strictly decrease in N (main timing convention).
  bool strictly_decreasing() const;
  Table table() const;
};

/// Fixed eps = epsilons[0]; Example-1 initial data; meanfield reference from
/// the same grid and T.
ConvergeNResult experiment_converge_N(const ExperimentConfig& cfg);

enum class ReferenceKind { example1, richardson };

struct ConvergeEpsRow {
  double epsilon = 0.0;
  double sup_error = 0.0;               // on the coarsest grid's sites, density units
  std::vector<double> omega;            // per eta, over the run's own sites
  std::vector<double> omega_coarse;     // per eta, over the coarsest grid's sites
  SolveDiagnostics diagnostics;
};

struct ConvergeEpsResult {
  std::vector<double> etas;
  std::vector<ConvergeEpsRow> rows;     // in the order of cfg.epsilons
  std::vector<GridFunction> densities;  // U^(eps)(., T)
  /// omega(u, eta) of the closed-form limit, per eta (example1 reference only).
  std::vector<double> continuum_omega;

  bool error_strictly_decreasing() const;
  /// omega(U^(eps), eta) does not increase as eps decreases, for every eta.
  bool omega_non_increasing() const;
  Table table() const;
};

/// epsilons must be decreasing. Richardson uses 2 U_{eps_min} - U_{2 eps_min}
/// at the coarse sites (the two finest runs must differ by a factor 2).
ConvergeEpsResult experiment_converge_eps(const ExperimentConfig& cfg,
                                          ReferenceKind ref = ReferenceKind::example1,
                                          std::vector<double> etas = {0.5, 0.25, 0.1});

/// sup_{|x-y| <= eta} |u(x) - u(y)| over [-L, L], sampled at `spacing`.
double continuum_modulus(const std::function<double(double)>& u, double half_width, double eta,
                         double spacing = 1e-3);

/// Values of U at the sites of `coarse` (which must be sites of U's grid).
GridFunction restrict_to(const GridFunction& U, const GridSpec& coarse);

/// sup over the sites of `coarse` of |U(x) - ref(x)|. U in density units on a
/// grid containing the coarse sites.
double sup_error_on_coarse(const GridFunction& U, const GridSpec& coarse,
                           const std::function<double(std::span<const double>)>& ref);

struct OperatorSuiteReport {
  std::size_t sites = 0;
  std::size_t pairs = 0;
  double max_duality_ratio = 0.0;    // |<Lf, g> - <f, L*g>| / (|f|_2 |g|_2)
  double max_column_sum_ratio = 0.0; // |sum_x L*f| / (64 DBL_EPSILON sum_x |r_out f|)
  double max_column_sum = 0.0;
  double interior_residual = 0.0;    // max over interior x of |L*f - (Lbar f - h f)|
  double box_residual = 0.0;         // same on every site with h_box
  bool kernel_checked = false;
  double kernel_row_error = 0.0;     // max_x |sum_y p_t(x, y) - 1|
  double seconds = 0.0;

  bool duality_ok() const { return max_duality_ratio <= 1e-10; }
  bool column_sum_ok() const { return max_column_sum_ratio <= 1.0; }
  bool interior_ok() const { return interior_residual <= 1e-12; }
  bool kernel_ok() const { return kernel_checked && kernel_row_error <= 1e-9; }
  bool all_ok() const { return duality_ok() && column_sum_ok() && interior_ok() && kernel_ok(); }
};

/// Duality, conservation, the L* = Lbar - h decomposition and kernel row
/// sums, on `pairs` random (f, g) with entries uniform in [-1, 1]. The dense
/// kernel at time t is only formed for grids of at most 2000 sites.
OperatorSuiteReport operator_identity_suite(const RateTable& rt, std::uint64_t seed,
                                            std::size_t pairs = 100, double kernel_t = 0.5);

enum class DominationInit { profile, single_site };

struct DominationResult {
  Count population = 0;
  std::size_t runs = 0;
  std::size_t passed = 0;
  std::vector<double> untrimmed_totals;
  MeanStderr untrimmed;
  double expected_untrimmed = 0.0;  // N e^T
  double z_score = 0.0;

  bool all_passed() const { return runs > 0 && passed == runs; }
  bool mean_ok(double sigmas = 3.0) const { return std::abs(z_score) <= sigmas; }
  Table table() const;
};

/// Coupled trimmed/untrimmed runs at eps = epsilons[0], N = populations[0].
DominationResult experiment_domination(const ExperimentConfig& cfg,
                                       DominationInit init = DominationInit::profile);

struct CouplingSweepRow {
  double epsilon = 0.0;
  ContractionReport report;
};

struct CouplingSweepResult {
  std::vector<CouplingSweepRow> rows;  // in the order of cfg.epsilons

  /// Tail probability does not increase along the sweep.
  bool tail_non_increasing() const;
  Table table() const;
};

/// Walkers start at the grid sites nearest x0 and y0 (ties away from zero).
CouplingSweepResult experiment_coupling(const ExperimentConfig& cfg, std::vector<double> x0,
                                        std::vector<double> y0, double C, double delta);

}  // namespace trimlab

#include "trimlab/detail/parallel.hpp"
