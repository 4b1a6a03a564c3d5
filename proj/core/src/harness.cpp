#include "trimlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "trimlab/operators.hpp"

#include "trimlab/errors.hpp"
#include "trimlab/numerics.hpp"
#include "trimlab/stationary.hpp"

namespace trimlab {

namespace {

// Separable Epanechnikov smoothing, then density units.
std::vector<double> smooth(const GridFunction& f, double bandwidth) {
  const GridSpec& g = f.grid();
  const int m = static_cast<int>(std::floor(bandwidth / g.epsilon() + 1e-9));
  std::vector<double> w(static_cast<std::size_t>(2 * m + 1));
  double wsum = 0.0;
  for (int k = -m; k <= m; ++k) {
    const double z = (k * g.epsilon()) / (bandwidth + g.epsilon());
    w[static_cast<std::size_t>(k + m)] = 0.75 * (1.0 - z * z);
    wsum += w[static_cast<std::size_t>(k + m)];
  }
  for (double& v : w) v /= wsum;

  std::vector<double> cur(f.values().begin(), f.values().end());
  std::vector<double> nxt(cur.size());
  for (int axis = 0; axis < g.dim(); ++axis) {
    const int dir = axis;  // +e_axis
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      double acc = w[static_cast<std::size_t>(m)] * cur[x];
      std::int64_t up = static_cast<std::int64_t>(x), down = static_cast<std::int64_t>(x);
      for (int k = 1; k <= m; ++k) {
        if (up >= 0) up = g.neighbor_or_none(static_cast<SiteIndex>(up), dir);
        if (down >= 0) down = g.neighbor_or_none(static_cast<SiteIndex>(down), dir + g.dim());
        if (up >= 0) acc += w[static_cast<std::size_t>(m + k)] * cur[static_cast<SiteIndex>(up)];
        if (down >= 0) acc += w[static_cast<std::size_t>(m - k)] * cur[static_cast<SiteIndex>(down)];
      }
      nxt[x] = acc;
    }
    std::swap(cur, nxt);
  }
  const double scale = std::pow(g.epsilon(), -g.dim());
  for (double& v : cur) v *= scale;
  return cur;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (salt * 0x9E3779B97F4A7C15ULL);
  return splitmix64(s);
}

const char* timing_name(RemovalTiming t) {
  return t == RemovalTiming::pre_birth ? "pre_birth" : "post_birth";
}

}  // namespace

double metric(const GridFunction& a, const GridFunction& b, const MetricSpec& spec) {
  require_same_grid(a.grid(), b.grid(), "metric");
  const GridSpec& g = a.grid();
  switch (spec.kind) {
    case MetricKind::wasserstein1_1d: {
      if (g.dim() != 1)
        throw Error(ErrorKind::dimension_mismatch, "wasserstein1_1d requires a one-dimensional grid");
      double diff = 0.0;
      std::vector<double> terms;
      terms.reserve(g.site_count());
      for (SiteIndex x = 0; x + 1 < g.site_count(); ++x) {
        diff += a[x] - b[x];
        terms.push_back(std::abs(diff));
      }
      return g.epsilon() * exact_sum(terms);
    }
    case MetricKind::site_sup: {
      double worst = 0.0;
      for (SiteIndex x = 0; x < g.site_count(); ++x) worst = std::max(worst, std::abs(a[x] - b[x]));
      return worst * std::pow(g.epsilon(), -g.dim());
    }
    case MetricKind::sup_density: {
      if (!(spec.bandwidth > 0.0)) throw Error(ErrorKind::invalid_parameter, "bandwidth must be positive");
      const auto sa = smooth(a, spec.bandwidth);
      const auto sb = smooth(b, spec.bandwidth);
      double worst = 0.0;
      for (std::size_t x = 0; x < sa.size(); ++x) worst = std::max(worst, std::abs(sa[x] - sb[x]));
      return worst;
    }
  }
  throw Error(ErrorKind::invalid_parameter, "unknown metric");
}

MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr out;
  if (v.empty()) return out;
  const auto n = static_cast<double>(v.size());
  out.mean = exact_sum(v) / n;
  if (v.size() > 1) {
    std::vector<double> sq;
    sq.reserve(v.size());
    for (double x : v) sq.push_back((x - out.mean) * (x - out.mean));
    out.stderr_ = std::sqrt(exact_sum(sq) / (n - 1.0) / n);
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

GridFunction example1_initial_data(const GridSpec& grid) { return sample_on_grid(example1(), grid); }

bool ConvergeNResult::strictly_decreasing() const {
  const RemovalTiming main = rows.empty() ? RemovalTiming::pre_birth : rows.front().timing;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r.timing != main) continue;
    if (!(r.distance.mean < prev)) return false;
    prev = r.distance.mean;
  }
  return true;
}

Table ConvergeNResult::table() const {
  Table t;
  t.columns = {"N", "timing", "seeds", "distance_mean", "distance_stderr", "beta_distance_mean",
               "beta_distance_stderr"};
  for (const auto& r : rows)
    t.add_row({static_cast<std::int64_t>(r.population), std::string(timing_name(r.timing)),
               static_cast<std::int64_t>(r.distances.size()), r.distance.mean, r.distance.stderr_,
               r.beta_distance.mean, r.beta_distance.stderr_});
  return t;
}

ConvergeNResult experiment_converge_N(const ExperimentConfig& cfg) {
  if (cfg.epsilons.empty() || cfg.populations.empty() || cfg.seeds.empty())
    throw Error(ErrorKind::invalid_parameter, "converge_N needs an epsilon, populations and seeds");
  if (cfg.dim != 1) throw Error(ErrorKind::dimension_mismatch, "converge_N uses one-dimensional data");
  const GridSpec g(cfg.epsilons.front(), 1, cfg.half_width);
  const RateTable rt = build_q_from_b(cfg.drift, cfg.mollifier, g);
  const GridFunction u0 = example1_initial_data(g);

  SchemeConfig sc;
  sc.dt = cfg.dt;
  sc.scheme = cfg.scheme;
  sc.tau_flat = cfg.tau_flat;
  sc.record_stride = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
  ConvergeNResult res;
  res.reference = solve(rt, u0, cfg.T, sc);
  const GridFunction& uT = res.reference.path.u.back();
  std::vector<double> bref = res.reference.removal_total;
  for (double& v : bref) v /= cfg.T;
  const GridFunction beta_ref(g, std::move(bref));

  std::vector<RemovalTiming> timings{cfg.timing};
  if (cfg.both_timings)
    timings.push_back(cfg.timing == RemovalTiming::pre_birth ? RemovalTiming::post_birth
                                                             : RemovalTiming::pre_birth);
  const double snap[] = {cfg.T};
  for (RemovalTiming timing : timings) {
    for (Count N : cfg.populations) {
      const ParticleConfiguration init = ParticleConfiguration::from_profile(u0, N);
      SimOptions opt;
      opt.timing = timing;
      opt.keep_intervals = false;
      using Pair = std::pair<double, double>;
      const auto per_seed = parallel_map<Pair>(cfg.seeds.size(), cfg.jobs, [&](std::size_t k) {
        const auto run = simulate_trimmed(init, rt, cfg.T, SimSeed{derive_seed(cfg.seeds[k], static_cast<std::uint64_t>(N))},
                                          snap, opt);
        const double d = metric(empirical_measure(run.snapshots.back().config), uT, cfg.metric);
        std::vector<double> occ = run.ledger.occupation_times();
        for (double& v : occ) v /= cfg.T;
        const double bd = metric(GridFunction(g, std::move(occ)), beta_ref, cfg.metric);
        return Pair{d, bd};
      });
      ConvergeNRow row;
      row.population = N;
      row.timing = timing;
      for (const auto& [d, bd] : per_seed) {
        row.distances.push_back(d);
        row.beta_distances.push_back(bd);
      }
      row.distance = mean_stderr(row.distances);
      row.beta_distance = mean_stderr(row.beta_distances);
      res.rows.push_back(std::move(row));
    }
  }
  std::vector<double> xs, ys;
  for (const auto& r : res.rows)
    if (r.timing == cfg.timing) {
      xs.push_back(static_cast<double>(r.population));
      ys.push_back(r.distance.mean);
    }
  res.slope = loglog_slope(xs, ys);
  return res;
}

double continuum_modulus(const std::function<double(double)>& u, double half_width, double eta,
                         double spacing) {
  const auto n = static_cast<long>(std::llround(2.0 * half_width / spacing));
  const long reach = static_cast<long>(std::floor(eta / spacing + 1e-9));
  std::vector<double> v(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = u(-half_width + spacing * static_cast<double>(k));
  double worst = 0.0;
  for (long k = 0; k <= n; ++k)
    for (long j = k + 1; j <= std::min(n, k + reach); ++j)
      worst = std::max(worst, std::abs(v[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(k)]));
  return worst;
}

GridFunction restrict_to(const GridFunction& U, const GridSpec& coarse) {
  const GridSpec& fine = U.grid();
  if (fine.dim() != coarse.dim()) throw Error(ErrorKind::dimension_mismatch, "restrict_to");
  std::vector<double> v(coarse.site_count());
  for (SiteIndex x = 0; x < coarse.site_count(); ++x) {
    const auto pos = coarse.position(x);
    const SiteIndex y = fine.nearest(pos);
    for (int a = 0; a < fine.dim(); ++a)
      if (std::abs(fine.position(y, a) - pos[static_cast<std::size_t>(a)]) > 1e-9)
        throw Error(ErrorKind::grid_mismatch, "coarse site is not a site of the finer grid");
    v[x] = U[y];
  }
  return GridFunction(coarse, std::move(v));
}

double sup_error_on_coarse(const GridFunction& U, const GridSpec& coarse,
                           const std::function<double(std::span<const double>)>& ref) {
  const GridSpec& fine = U.grid();
  if (fine.dim() != coarse.dim()) throw Error(ErrorKind::dimension_mismatch, "sup_error_on_coarse");
  double worst = 0.0;
  for (SiteIndex x = 0; x < coarse.site_count(); ++x) {
    const auto pos = coarse.position(x);
    const SiteIndex y = fine.nearest(pos);
    for (int a = 0; a < fine.dim(); ++a)
      if (std::abs(fine.position(y, a) - pos[static_cast<std::size_t>(a)]) > 1e-9)
        throw Error(ErrorKind::grid_mismatch, "coarse site is not a site of the finer grid");
    worst = std::max(worst, std::abs(U[y] - ref(pos)));
  }
  return worst;
}

bool ConvergeEpsResult::error_strictly_decreasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].sup_error < rows[k - 1].sup_error)) return false;
  return true;
}

bool ConvergeEpsResult::omega_non_increasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    for (std::size_t j = 0; j < etas.size(); ++j)
      if (rows[k].omega[j] > rows[k - 1].omega[j]) return false;
  return true;
}

Table ConvergeEpsResult::table() const {
  Table t;
  t.columns = {"epsilon", "sup_error"};
  for (double eta : etas) t.columns.push_back("omega_" + format_label(eta));
  for (double eta : etas) t.columns.push_back("omega_coarse_" + format_label(eta));
  if (!continuum_omega.empty())
    for (double eta : etas) t.columns.push_back("omega_limit_" + format_label(eta));
  t.columns.push_back("max_mass_error");
  t.columns.push_back("max_growth_ratio");
  for (const auto& r : rows) {
    std::vector<Cell> row{r.epsilon, r.sup_error};
    for (double w : r.omega) row.emplace_back(w);
    for (double w : r.omega_coarse) row.emplace_back(w);
    for (double w : continuum_omega) row.emplace_back(w);
    row.emplace_back(r.diagnostics.max_mass_error);
    row.emplace_back(r.diagnostics.max_growth_ratio);
    t.add_row(std::move(row));
  }
  return t;
}

ConvergeEpsResult experiment_converge_eps(const ExperimentConfig& cfg, ReferenceKind ref,
                                          std::vector<double> etas) {
  if (cfg.epsilons.empty()) throw Error(ErrorKind::invalid_parameter, "converge_eps needs epsilons");
  if (cfg.dim != 1) throw Error(ErrorKind::dimension_mismatch, "converge_eps uses one-dimensional data");
  for (std::size_t k = 1; k < cfg.epsilons.size(); ++k)
    if (!(cfg.epsilons[k] < cfg.epsilons[k - 1]))
      throw Error(ErrorKind::invalid_parameter, "converge_eps: epsilons must decrease");

  using Out = std::pair<GridFunction, SolveDiagnostics>;
  const auto runs = parallel_map<Out>(cfg.epsilons.size(), cfg.jobs, [&](std::size_t k) {
    const GridSpec g(cfg.epsilons[k], 1, cfg.half_width);
    const RateTable rt = build_q_from_b(cfg.drift, cfg.mollifier, g);
    SchemeConfig sc;
    sc.dt = cfg.dt;
    sc.scheme = cfg.scheme;
    sc.tau_flat = cfg.tau_flat;
    sc.record_stride = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
    auto sol = solve(rt, example1_initial_data(g), cfg.T, sc);
    return Out{to_density(sol.path.u.back()), sol.diagnostics};
  });

  ConvergeEpsResult res;
  res.etas = etas;
  if (ref == ReferenceKind::example1) {
    const auto sol = example1();
    for (double eta : etas) res.continuum_omega.push_back(continuum_modulus(sol.u, cfg.half_width, eta));
  }
  for (const auto& r : runs) res.densities.push_back(r.first);
  const GridSpec coarse(cfg.epsilons.front(), 1, cfg.half_width);

  std::function<double(std::span<const double>)> reference;
  if (ref == ReferenceKind::example1) {
    const auto sol = example1();
    reference = [sol](std::span<const double> p) { return sol.u(p[0]); };
  } else {
    const std::size_t n = res.densities.size();
    if (n < 2 || std::abs(cfg.epsilons[n - 2] - 2.0 * cfg.epsilons[n - 1]) > 1e-12)
      throw Error(ErrorKind::invalid_parameter, "richardson reference needs the two finest eps in ratio 2");
    const GridFunction& fine = res.densities[n - 1];
    const GridFunction& half = res.densities[n - 2];
    reference = [&fine, &half](std::span<const double> p) {
      return 2.0 * fine[fine.grid().nearest(p)] - half[half.grid().nearest(p)];
    };
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    ConvergeEpsRow row;
    row.epsilon = cfg.epsilons[k];
    row.sup_error = sup_error_on_coarse(res.densities[k], coarse, reference);
    const GridFunction on_coarse = restrict_to(res.densities[k], coarse);
    for (double eta : etas) {
      row.omega.push_back(modulus_of_continuity(res.densities[k], eta));
      row.omega_coarse.push_back(modulus_of_continuity(on_coarse, eta));
    }
    row.diagnostics = runs[k].second;
    res.rows.push_back(std::move(row));
  }
  return res;
}

OperatorSuiteReport operator_identity_suite(const RateTable& rt, std::uint64_t seed,
                                            std::size_t pairs, double kernel_t) {
  const auto start = std::chrono::steady_clock::now();
  const GridSpec& g = rt.grid();
  const std::size_t S = g.site_count();
  OperatorSuiteReport rep;
  rep.sites = S;
  rep.pairs = pairs;
  const HField hf = compute_h(rt);

  const auto random_fn = [&](RandomStream& rs) {
    std::vector<double> v(S);
    for (double& x : v) x = 2.0 * rs.uniform() - 1.0;
    return GridFunction(g, std::move(v));
  };
  for (std::size_t k = 0; k < pairs; ++k) {
    RandomStream rs(seed, k);
    const GridFunction f = random_fn(rs);
    const GridFunction h = random_fn(rs);
    rep.max_duality_ratio = std::max(rep.max_duality_ratio, duality_residual(rt, f, h) / (f.l2() * h.l2()));

    const GridFunction ls = apply_Lstar(rt, f);
    const double col = ls.sum();
    double scale = 0.0;
    for (SiteIndex x = 0; x < S; ++x) scale += std::abs(rt.r_out(x) * f[x]);
    rep.max_column_sum = std::max(rep.max_column_sum, std::abs(col));
    rep.max_column_sum_ratio = std::max(rep.max_column_sum_ratio, std::abs(col) / (64.0 * DBL_EPSILON * scale));

    const GridFunction lb = apply_barL(rt, f);
    for (SiteIndex x = 0; x < S; ++x) {
      const double box = std::abs(ls[x] - (lb[x] - hf.h_box[x] * f[x]));
      rep.box_residual = std::max(rep.box_residual, box);
      if (g.interior(x))
        rep.interior_residual = std::max(rep.interior_residual, std::abs(ls[x] - (lb[x] - hf.h[x] * f[x])));
    }
  }
  if (S <= 2000) {
    const Eigen::MatrixXd P = dense_kernel(rt, kernel_t);
    rep.kernel_checked = true;
    for (Eigen::Index x = 0; x < P.rows(); ++x)
      rep.kernel_row_error = std::max(rep.kernel_row_error, std::abs(P.row(x).sum() - 1.0));
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

Table DominationResult::table() const {
  Table t;
  t.columns = {"N", "runs", "passed", "untrimmed_mean", "untrimmed_stderr", "expected", "z"};
  t.add_row({static_cast<std::int64_t>(population), static_cast<std::int64_t>(runs),
             static_cast<std::int64_t>(passed), untrimmed.mean, untrimmed.stderr_, expected_untrimmed,
             z_score});
  return t;
}

DominationResult experiment_domination(const ExperimentConfig& cfg, DominationInit init) {
  if (cfg.epsilons.empty() || cfg.populations.empty() || cfg.seeds.empty())
    throw Error(ErrorKind::invalid_parameter, "domination needs an epsilon, a population and seeds");
  const GridSpec g(cfg.epsilons.front(), cfg.dim, cfg.half_width);
  const RateTable rt = build_q_from_b(cfg.drift, cfg.mollifier, g);
  const Count N = cfg.populations.front();
  const ParticleConfiguration start = [&] {
    if (init == DominationInit::single_site) {
      const std::vector<double> origin(static_cast<std::size_t>(cfg.dim), 0.0);
      return ParticleConfiguration::all_at(g, g.nearest(origin), N);
    }
    if (cfg.dim != 1) throw Error(ErrorKind::dimension_mismatch, "profile start is one-dimensional");
    return ParticleConfiguration::from_profile(example1_initial_data(g), N);
  }();
  SimOptions opt;
  opt.timing = cfg.timing;
  opt.keep_intervals = false;
  const double snap[] = {cfg.T};
  using Out = std::pair<bool, double>;
  const auto runs = parallel_map<Out>(cfg.seeds.size(), cfg.jobs, [&](std::size_t k) {
    const auto run = simulate_coupled_pair(start, rt, cfg.T, SimSeed{cfg.seeds[k]}, snap, opt);
    return Out{run.domination_ok, static_cast<double>(run.untrimmed.back().config.total())};
  });
  DominationResult res;
  res.population = N;
  res.runs = runs.size();
  for (const auto& [ok, total] : runs) {
    if (ok) ++res.passed;
    res.untrimmed_totals.push_back(total);
  }
  res.untrimmed = mean_stderr(res.untrimmed_totals);
  res.expected_untrimmed = static_cast<double>(N) * std::exp(cfg.T);
  res.z_score = res.untrimmed.stderr_ > 0.0
                    ? (res.untrimmed.mean - res.expected_untrimmed) / res.untrimmed.stderr_
                    : (res.untrimmed.mean == res.expected_untrimmed ? 0.0 : std::numeric_limits<double>::infinity());
  return res;
}

bool CouplingSweepResult::tail_non_increasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].report.tail_probability > rows[k - 1].report.tail_probability) return false;
  return true;
}

Table CouplingSweepResult::table() const {
  Table t;
  t.columns = {"epsilon", "paths", "initial_distance", "bound", "delta", "mean_sup", "stderr_sup",
               "tail_probability", "tau_fraction"};
  for (const auto& r : rows)
    t.add_row({r.epsilon, static_cast<std::int64_t>(r.report.paths), r.report.initial_distance,
               r.report.bound, r.report.delta, r.report.mean_sup, r.report.stderr_sup,
               r.report.tail_probability, r.report.tau_fraction});
  return t;
}

CouplingSweepResult experiment_coupling(const ExperimentConfig& cfg, std::vector<double> x0,
                                        std::vector<double> y0, double C, double delta) {
  if (cfg.seeds.empty()) throw Error(ErrorKind::invalid_parameter, "coupling needs seeds");
  CouplingSweepResult res;
  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    const GridSpec g(cfg.epsilons[e], cfg.dim, cfg.half_width);
    const RateTable rt = build_q_from_b(cfg.drift, cfg.mollifier, g);
    const SiteIndex a = g.nearest(x0), b = g.nearest(y0);
    const auto paths = parallel_map<CoupledPairPath>(cfg.seeds.size(), cfg.jobs, [&](std::size_t k) {
      return simulate_coupled_walkers(a, b, rt, cfg.T, derive_seed(cfg.seeds[k], e));
    });
    res.rows.push_back({cfg.epsilons[e], contraction_report(rt, paths, C, delta)});
  }
  return res;
}

}  // namespace trimlab
