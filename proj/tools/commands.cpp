#include "commands.hpp"

#include <cfloat>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>

#include <CLI11.hpp>

#include "config.hpp"
#include "manifest.hpp"
#include "trimlab/coupling.hpp"
#include "trimlab/errors.hpp"
#include "trimlab/harness.hpp"
#include "trimlab/io.hpp"
#include "trimlab/meanfield.hpp"
#include "trimlab/operators.hpp"
#include "trimlab/particle.hpp"
#include "trimlab/stationary.hpp"

namespace fs = std::filesystem;

namespace trimlab::tools {

namespace {

struct Context {
  RunConfig cfg;
  fs::path out;
  unsigned jobs = 1;
  std::ostream& log;
  bool plots = true;
};

// ---- config -> model objects -------------------------------------------------

GridSpec make_grid(const RunConfig& c, double eps) {
  const int dim = static_cast<int>(c.integer("dim", 1));
  if (dim < 1 || dim > 3) throw ConfigError("dim", "must be 1, 2 or 3");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon", "must lie in (0, 1)");
  const double L = c.real("half_width", 6.0);
  if (!(L > 0.0)) throw ConfigError("half_width", "must be positive");
  const double steps = L / eps;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("half_width", "must be an integer multiple of epsilon");
  return GridSpec(eps, dim, L);
}

GridSpec make_grid(const RunConfig& c) { return make_grid(c, c.real("epsilon")); }

DriftModel make_drift(const RunConfig& c) {
  const auto kind = c.choice("drift", {"zero", "tanh_well", "sign_well", "tabulated"}, "tanh_well");
  if (kind == "zero") return DriftModel::zero();
  if (kind == "tanh_well") return DriftModel::tanh_well(c.real("drift.scale", 2.0));
  if (kind == "sign_well") {
    const double a = c.real("drift.a", 3.0);
    if (!(a >= 2.0)) throw ConfigError("drift.a", "sign_well needs a >= 2");
    return DriftModel::sign_well(a);
  }
  try {
    return DriftModel::from_csv(c.str("drift.file"));
  } catch (const Error& e) {
    throw ConfigError("drift.file", e.what());
  }
}

MollifierSpec make_mollifier(const RunConfig& c) {
  MollifierSpec m;
  m.radius = c.real("mollifier.radius", m.radius);
  m.nodes = static_cast<int>(c.integer("mollifier.nodes", m.nodes));
  if (!(m.radius > 0.0)) throw ConfigError("mollifier.radius", "must be positive");
  if (m.nodes < 2) throw ConfigError("mollifier.nodes", "must be at least 2");
  return m;
}

RateTable make_rates(const RunConfig& c, const GridSpec& g) {
  const DriftModel b = make_drift(c);
  try {
    return build_q_from_b(b, make_mollifier(c), g);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::irregular_drift)
      throw ConfigError("drift", "sign_well is discontinuous; it has no rate table (use the stationary subcommand)");
    if (e.kind() == ErrorKind::epsilon_too_large) throw ConfigError("epsilon", e.what());
    throw;
  }
}

double horizon(const RunConfig& c) {
  const double T = c.real("T", 1.0);
  if (!(T > 0.0)) throw ConfigError("T", "must be positive");
  return T;
}

SchemeConfig make_scheme(const RunConfig& c, const RateTable& rt, double T) {
  SchemeConfig s;
  s.dt = c.real("solver.dt", 1e-4);
  if (!(s.dt > 0.0)) throw ConfigError("solver.dt", "must be positive");
  if (!(s.dt * (rt.max_r_out() + 1.0) < 1.0) || !(s.dt * rt.max_rho_in() < 1.0)) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "violates the positivity bound dt * (max r_out + 1) < 1 (max r_out = %.6g)",
                  rt.max_r_out());
    throw ConfigError("solver.dt", buf);
  }
  s.scheme = c.choice("solver.scheme", {"trim_splitting", "active_set"}, "trim_splitting") == "active_set"
                 ? Scheme::active_set
                 : Scheme::trim_splitting;
  if (c.has("solver.tau_flat")) {
    s.tau_flat = c.real("solver.tau_flat");
    if (!(*s.tau_flat > 0.0)) throw ConfigError("solver.tau_flat", "must be positive");
  }
  const auto K = std::max<long long>(1, std::llround(T / s.dt));
  const auto stride = c.integer("solver.record_stride", std::max<long long>(1, K / 100));
  if (stride < 1) throw ConfigError("solver.record_stride", "must be at least 1");
  s.record_stride = static_cast<std::size_t>(stride);
  return s;
}

RemovalTiming make_timing(const RunConfig& c) {
  return c.choice("particle.timing", {"pre_birth", "post_birth"}, "pre_birth") == "post_birth"
             ? RemovalTiming::post_birth
             : RemovalTiming::pre_birth;
}

GridFunction make_initial(const RunConfig& c, const GridSpec& g) {
  const auto kind = c.choice("initial", {"example1", "point", "uniform", "file"},
                             g.dim() == 1 ? "example1" : "point");
  if (kind == "example1") {
    if (g.dim() != 1) throw ConfigError("initial", "example1 data is one-dimensional");
    return example1_initial_data(g);
  }
  if (kind == "point") {
    const std::vector<double> origin(static_cast<std::size_t>(g.dim()), 0.0);
    return GridFunction::indicator(g, g.nearest(origin));
  }
  if (kind == "uniform") return GridFunction(g, 1.0 / static_cast<double>(g.site_count()));
  try {
    return read_grid_function_csv(c.str("initial.file"), g);
  } catch (const Error& e) {
    throw ConfigError("initial.file", e.what());
  }
}

std::vector<std::uint64_t> make_seeds(const RunConfig& c, std::vector<std::int64_t> fallback) {
  std::vector<std::uint64_t> out;
  for (auto s : c.integers("seeds", std::move(fallback))) {
    if (s < 0) throw ConfigError("seeds", "seeds must be nonnegative");
    out.push_back(static_cast<std::uint64_t>(s));
  }
  return out;
}

MetricSpec make_metric(const RunConfig& c) {
  MetricSpec m;
  const auto kind = c.choice("metric", {"wasserstein1_1d", "sup_density", "site_sup"}, "wasserstein1_1d");
  m.kind = kind == "sup_density" ? MetricKind::sup_density
           : kind == "site_sup"  ? MetricKind::site_sup
                                 : MetricKind::wasserstein1_1d;
  m.bandwidth = c.real("metric.bandwidth", m.bandwidth);
  if (!(m.bandwidth > 0.0)) throw ConfigError("metric.bandwidth", "must be positive");
  return m;
}

ExperimentConfig make_experiment(const Context& ctx, std::vector<double> default_eps,
                                 std::vector<std::int64_t> default_seeds) {
  const RunConfig& c = ctx.cfg;
  ExperimentConfig e;
  e.drift = make_drift(c);
  e.mollifier = make_mollifier(c);
  e.dim = static_cast<int>(c.integer("dim", 1));
  e.half_width = c.real("half_width", 6.0);
  e.epsilons = c.reals("experiment.epsilons", std::move(default_eps));
  for (double eps : e.epsilons) {
    const GridSpec g = make_grid(c, eps);
    (void)make_rates(c, g);
  }
  e.T = horizon(c);
  e.dt = c.real("solver.dt", 1e-4);
  if (!(e.dt > 0.0)) throw ConfigError("solver.dt", "must be positive");
  e.scheme = c.choice("solver.scheme", {"trim_splitting", "active_set"}, "trim_splitting") == "active_set"
                 ? Scheme::active_set
                 : Scheme::trim_splitting;
  if (c.has("solver.tau_flat")) e.tau_flat = c.real("solver.tau_flat");
  e.seeds = make_seeds(c, std::move(default_seeds));
  e.timing = make_timing(c);
  e.both_timings = c.boolean("experiment.both_timings", false);
  e.metric = make_metric(c);
  e.jobs = ctx.jobs;
  return e;
}

// ---- output helpers ------------------------------------------------------------

void emit(Context& ctx, Manifest& m, const std::string& name, const std::string& text) {
  const fs::path p = ctx.out / name;
  write_text(p, text);
  m.add_artifact(ctx.out, p);
}

void emit_plot(Context& ctx, Manifest& m, const std::string& name, const std::vector<Series>& s,
               const PlotSpec& spec) {
  if (ctx.plots) emit(ctx, m, name, svg_line_plot(s, spec));
}

int finish(Context& ctx, Manifest& m) {
  for (const auto& g : m.gates()) {
    char line[256];
    std::snprintf(line, sizeof line, "[%s] %s = %.6g (threshold %.6g)\n", g.pass ? "PASS" : "FAIL",
                  g.name.c_str(), g.value, g.threshold);
    ctx.log << line;
  }
  write_text(ctx.out / "manifest.json", m.json());
  ctx.log << "manifest: " << (ctx.out / "manifest.json").string() << "\n";
  if (m.all_pass()) return 0;
  for (const auto& g : m.gates())
    if (!g.pass) ctx.log << "gate failed: " << g.name << "\n";
  return 1;
}

Series density_series(const GridFunction& u, const std::string& label) {
  Series s;
  s.label = label;
  const GridSpec& g = u.grid();
  const GridFunction U = to_density(u);
  const std::vector<double> origin(static_cast<std::size_t>(g.dim()), 0.0);
  const SiteIndex o = g.nearest(origin);
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    bool on_axis = true;
    for (int a = 1; a < g.dim(); ++a) on_axis = on_axis && g.coord(x, a) == g.coord(o, a);
    if (!on_axis) continue;
    s.x.push_back(g.position(x, 0));
    s.y.push_back(U[x]);
  }
  return s;
}

// ---- subcommands ----------------------------------------------------------------

int cmd_simulate(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const GridSpec g = make_grid(c);
  const RateTable rt = make_rates(c, g);
  const double T = horizon(c);
  const auto N = c.integer("particle.N", 1000);
  if (N < 1) throw ConfigError("particle.N", "must be at least 1");
  const auto times = c.reals("snapshot_times", {T});
  for (std::size_t k = 0; k < times.size(); ++k)
    if (!(times[k] >= 0.0 && times[k] <= T) || (k && times[k] < times[k - 1]))
      throw ConfigError("snapshot_times", "must be nondecreasing and lie in [0, T]");
  const auto seeds = make_seeds(c, {1});
  const GridFunction u0 = make_initial(c, g);
  SimOptions opt;
  opt.timing = make_timing(c);
  opt.keep_intervals = c.boolean("particle.keep_intervals", true);

  Manifest m("simulate", c, seeds);
  const auto init = ParticleConfiguration::from_profile(u0, N);
  bool conserved = true, tracker = true, exact_total = true;
  std::uint64_t events = 0;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const auto run = simulate_trimmed(init, rt, T, SimSeed{seeds[k]}, times, opt);
    events += run.stats.candidates;
    for (const auto& s : run.snapshots) {
      conserved = conserved && s.config.total() == N;
      tracker = tracker && s.config.argmax() == s.config.brute_force_argmax();
    }
    exact_total = exact_total && run.ledger.total_time() == T;
    const std::string tag = seeds.size() == 1 ? "" : "_seed" + std::to_string(seeds[k]);
    emit(ctx, m, "snapshots" + tag + ".csv", to_csv(snapshot_table(run.snapshots)));
    if (opt.keep_intervals) emit(ctx, m, "ledger" + tag + ".csv", to_csv(ledger_table(run.ledger, g)));
    if (k == 0) {
      emit_plot(ctx, m, "profile.svg",
                {density_series(u0, "initial"), density_series(empirical_measure(run.snapshots.back().config), "particles at T")},
                {"Empirical density", "x", "density", false, false});
    }
  }
  ctx.log << "candidate events: " << events << "\n";
  m.add_gate("population_conserved", conserved ? 1 : 0, 1, conserved);
  m.add_gate("argmax_tracker_matches_scan", tracker ? 1 : 0, 1, tracker);
  m.add_gate("ledger_total_equals_T", exact_total ? 1 : 0, 1, exact_total);
  return finish(ctx, m);
}

int cmd_solve(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const GridSpec g = make_grid(c);
  const RateTable rt = make_rates(c, g);
  const double T = horizon(c);
  const SchemeConfig sc = make_scheme(c, rt, T);
  GridFunction u0 = make_initial(c, g);

  Manifest m("solve", c, {});
  const auto sol = solve(rt, u0, T, sc);
  emit(ctx, m, "path.csv", to_csv(density_path_table(sol.path, sol.removal)));
  if (c.boolean("solver.binary", true)) {
    write_binary_path(ctx.out / "path.bin", sol.path, sol.removal);
    m.add_artifact(ctx.out, ctx.out / "path.bin");
  }
  const auto& d = sol.diagnostics;
  Table diag;
  diag.columns = {"quantity", "value"};
  for (const auto& [k, v] : std::vector<std::pair<std::string, double>>{
           {"steps", static_cast<double>(d.steps)}, {"dt", d.dt}, {"tau_flat", d.tau_flat},
           {"max_mass_error", d.max_mass_error}, {"min_u", d.min_u}, {"clipped_mass", d.clipped_mass},
           {"min_lambda", d.min_lambda}, {"max_lambda_sum_error", d.max_lambda_sum_error},
           {"max_support_gap", d.max_support_gap}, {"max_support_excess", d.max_support_excess},
           {"support_integral", d.support_integral}, {"growth_constant", d.growth_constant},
           {"max_growth_ratio", d.max_growth_ratio}, {"max_retries", static_cast<double>(d.max_retries)}})
    diag.add_row({k, v});
  emit(ctx, m, "diagnostics.csv", to_csv(diag));
  emit_plot(ctx, m, "profile.svg", {density_series(u0, "t = 0"), density_series(sol.path.u.back(), "t = T")},
            {"Mean-field density", "x", "density", false, false});

  m.add_gate("mass_error", d.max_mass_error, 1e-9, d.mass_ok());
  m.add_gate("min_lambda", d.min_lambda, 0.0, d.min_lambda >= 0.0);
  m.add_gate("lambda_sum_error", d.max_lambda_sum_error, 1e-9, d.max_lambda_sum_error <= 1e-9);
  m.add_gate("support_excess", d.max_support_excess, 0.0, d.support_ok());
  m.add_gate("linf_growth_ratio", d.max_growth_ratio, 1.0 + 1e-6, d.growth_ok());
  return finish(ctx, m);
}

std::vector<BumpTest> standard_bumps() {
  return {{0.0, 1.0}, {0.5, 0.8}, {-1.2, 1.0}, {2.0, 1.5}, {3.5, 1.5}};
}

int cmd_stationary(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto which = c.choice("stationary.which",
                              {"example1", "example2_flat", "example2_sharp", "example2_critical"}, "example1");
  const auto beta = c.choice("stationary.beta", {"derived", "printed"}, "derived");
  const auto check = c.choice("stationary.check", {"all", "weak-form", "mass"}, "all");
  const int nodes = static_cast<int>(c.integer("stationary.nodes", 10'000));
  if (nodes < 16) throw ConfigError("stationary.nodes", "must be at least 16");
  const double weak_max = c.real("gate.weak_form_max", 1e-6);

  ClosedFormSolution sol;
  try {
    if (which == "example1") {
      sol = example1(beta == "printed" ? BetaFormula::printed : BetaFormula::derived);
    } else if (which == "example2_flat") {
      sol = example2_flat(c.real("stationary.a", 3.0), c.real("stationary.w", 1.0));
    } else if (which == "example2_sharp") {
      const double a = c.real("stationary.a", 3.0);
      sol = example2_sharp(a, c.real("stationary.v0", 1.0 / (2.0 * a)));
    } else {
      sol = example2_critical();
    }
  } catch (const Error& e) {
    throw ConfigError(which == "example2_sharp" ? "stationary.v0" : "stationary.a", e.what());
  }

  Manifest m("stationary", c, {});
  const SolutionChecks chk = check_solution(sol);
  if (check != "weak-form") {
    m.add_gate("mass_error", std::abs(chk.mass - 1.0), 1e-8, std::abs(chk.mass - 1.0) <= 1e-8);
    m.add_gate("min_u", chk.min_u, 0.0, chk.min_u >= 0.0);
    m.add_gate("max_on_argmax_set", chk.max_on_argmax ? 1 : 0, 1, chk.max_on_argmax);
  }
  // Cheap, and the one check that separates the two Example-1 beta formulas.
  const bool beta_ok = std::abs(chk.beta_rate - 1.0) <= 1e-8;
  m.add_gate("beta_mass", chk.beta_rate, 1.0, beta_ok);
  if (!beta_ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "beta mass per unit time is %.3f, not 1\n", chk.beta_rate);
    ctx.log << buf;
  }
  if (check != "mass") {
    const auto rep = weak_form_residual(sol, standard_bumps(), c.real("T", 1.0), nodes);
    Table t;
    t.columns = {"center", "radius", "generator_term", "removal_term", "residual"};
    for (const auto& e : rep.entries)
      t.add_row({e.phi.center, e.phi.radius, e.generator_term, e.removal_term, e.residual});
    emit(ctx, m, "weak_form.csv", to_csv(t));
    m.add_gate("weak_form_residual", rep.max_residual, weak_max, rep.max_residual <= weak_max);
  }
  Table params;
  params.columns = {"parameter", "value"};
  for (const auto& [k, v] : sol.parameters) params.add_row({k, v});
  params.add_row({std::string("mass"), chk.mass});
  params.add_row({std::string("beta_rate"), chk.beta_rate});
  params.add_row({std::string("implementer_derived"), static_cast<std::int64_t>(sol.implementer_derived)});
  emit(ctx, m, "parameters.csv", to_csv(params));
  if (c.has("epsilon")) {
    GridSpec g = make_grid(c);
    if (g.dim() != 1) throw ConfigError("dim", "closed-form solutions are one-dimensional");
    emit(ctx, m, "sampled.csv", to_csv(grid_function_table(sample_on_grid(sol, g))));
  }
  Series s{sol.name, {}, {}};
  for (int k = 0; k <= 800; ++k) {
    const double x = -6.0 + 12.0 * k / 800.0;
    s.x.push_back(x);
    s.y.push_back(sol.u(x));
  }
  emit_plot(ctx, m, "profile.svg", {s}, {"Stationary profile", "x", "u", false, false});
  return finish(ctx, m);
}

int cmd_converge_n(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const double eps = c.real("epsilon");
  ExperimentConfig e = make_experiment(ctx, {eps}, {1, 20});
  e.epsilons = {eps};
  std::vector<Count> pops;
  for (auto n : c.integers("experiment.populations", {1000, 10000, 100000})) {
    if (n < 1) throw ConfigError("experiment.populations", "populations must be positive");
    pops.push_back(n);
  }
  e.populations = pops;
  {
    const GridSpec g = make_grid(c, eps);
    (void)make_scheme(c, make_rates(c, g), e.T);
  }
  const double w1_max = c.real("gate.w1_max", 0.05);
  Manifest m("converge-n", c, e.seeds);
  const auto res = experiment_converge_N(e);
  emit(ctx, m, "converge_n.csv", to_csv(res.table()));
  Table seeds;
  seeds.columns = {"N", "timing", "seed", "distance", "beta_distance"};
  for (const auto& r : res.rows)
    for (std::size_t k = 0; k < r.distances.size(); ++k)
      seeds.add_row({static_cast<std::int64_t>(r.population),
                     std::string(r.timing == RemovalTiming::pre_birth ? "pre_birth" : "post_birth"),
                     static_cast<std::int64_t>(e.seeds[k]), r.distances[k], r.beta_distances[k]});
  emit(ctx, m, "converge_n_seeds.csv", to_csv(seeds));
  Series s{"distance", {}, {}};
  for (const auto& r : res.rows)
    if (r.timing == e.timing) {
      s.x.push_back(static_cast<double>(r.population));
      s.y.push_back(r.distance.mean);
    }
  emit_plot(ctx, m, "converge_n.svg", {s}, {"Particle vs mean-field", "N", "distance", true, true});
  ctx.log << "log-log slope (reported, not gated): " << format_double(res.slope) << "\n";
  m.add_gate("distance_strictly_decreasing", res.strictly_decreasing() ? 1 : 0, 1, res.strictly_decreasing());
  const double last = s.y.empty() ? INFINITY : s.y.back();
  m.add_gate("distance_at_largest_N", last, w1_max, last <= w1_max);
  return finish(ctx, m);
}

int cmd_converge_eps(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  ExperimentConfig e = make_experiment(ctx, {0.1, 0.05, 0.025}, {1});
  const auto ref = c.choice("experiment.reference", {"example1", "richardson"}, "example1");
  const auto etas = c.reals("experiment.etas", {0.5, 0.25, 0.1});
  const double emax = c.real("gate.eps_error_max", 5e-2);
  for (double eps : e.epsilons) {
    const GridSpec g = make_grid(c, eps);
    (void)make_scheme(c, make_rates(c, g), e.T);
  }
  Manifest m("converge-eps", c, {});
  ConvergeEpsResult res;
  try {
    res = experiment_converge_eps(e, ref == "richardson" ? ReferenceKind::richardson : ReferenceKind::example1, etas);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::invalid_parameter) throw ConfigError("experiment.epsilons", err.what());
    throw;
  }
  emit(ctx, m, "converge_eps.csv", to_csv(res.table()));
  std::vector<Series> profiles;
  for (std::size_t k = 0; k < res.densities.size(); ++k) {
    Series s{"eps = " + format_label(e.epsilons[k]), {}, {}};
    const GridSpec& g = res.densities[k].grid();
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      s.x.push_back(g.position(x, 0));
      s.y.push_back(res.densities[k][x]);
    }
    profiles.push_back(std::move(s));
  }
  emit_plot(ctx, m, "converge_eps.svg", profiles, {"Density at T", "x", "U", false, false});
  m.add_gate("sup_error_strictly_decreasing", res.error_strictly_decreasing() ? 1 : 0, 1,
             res.error_strictly_decreasing());
  const double last = res.rows.back().sup_error;
  m.add_gate("sup_error_at_finest_eps", last, emax, last <= emax);
  m.add_gate("omega_non_increasing_as_eps_halves", res.omega_non_increasing() ? 1 : 0, 1,
             res.omega_non_increasing());
  return finish(ctx, m);
}

int cmd_dominate(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const double eps = c.real("epsilon");
  ExperimentConfig e = make_experiment(ctx, {eps}, {1, 100});
  e.epsilons = {eps};
  const auto N = c.integer("particle.N", 1000);
  if (N < 1) throw ConfigError("particle.N", "must be at least 1");
  e.populations = {N};
  const auto init = c.choice("dominate.init", {"profile", "single_site"}, e.dim == 1 ? "profile" : "single_site");
  Manifest m("dominate", c, e.seeds);
  const auto res = experiment_domination(e, init == "profile" ? DominationInit::profile : DominationInit::single_site);
  emit(ctx, m, "dominate.csv", to_csv(res.table()));
  Table t;
  t.columns = {"seed", "untrimmed_total"};
  for (std::size_t k = 0; k < res.untrimmed_totals.size(); ++k)
    t.add_row({static_cast<std::int64_t>(e.seeds[k]), res.untrimmed_totals[k]});
  emit(ctx, m, "dominate_seeds.csv", to_csv(t));
  m.add_gate("domination_pass_rate", static_cast<double>(res.passed) / static_cast<double>(res.runs), 1.0,
             res.all_passed());
  m.add_gate("untrimmed_mean_z", std::abs(res.z_score), 3.0, res.mean_ok());
  return finish(ctx, m);
}

int cmd_couple(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  ExperimentConfig e = make_experiment(ctx, {0.2, 0.1, 0.05}, {1, 500});
  const auto x0 = c.reals("coupling.x0", std::vector<double>(static_cast<std::size_t>(e.dim), 0.0));
  auto y0_default = std::vector<double>(static_cast<std::size_t>(e.dim), 0.0);
  y0_default[0] = 0.1;
  const auto y0 = c.reals("coupling.y0", y0_default);
  if (x0.size() != static_cast<std::size_t>(e.dim)) throw ConfigError("coupling.x0", "needs dim coordinates");
  if (y0.size() != static_cast<std::size_t>(e.dim)) throw ConfigError("coupling.y0", "needs dim coordinates");
  const double C = c.real("coupling.C", 2.0);
  const double delta = c.real("coupling.delta", 0.2);
  const double margin = c.real("gate.coupling_margin", 0.2);
  Manifest m("couple", c, e.seeds);
  const auto res = experiment_coupling(e, x0, y0, C, delta);
  emit(ctx, m, "couple.csv", to_csv(res.table()));
  for (const auto& row : res.rows) {
    const GridSpec g = make_grid(c, row.epsilon);
    const RateTable rt = make_rates(c, g);
    const auto path = simulate_coupled_walkers(g.nearest(x0), g.nearest(y0), rt, e.T, e.seeds.front());
    emit(ctx, m, "couple_path_eps" + format_label(row.epsilon) + ".csv", to_csv(coupled_path_table(path, g)));
  }
  const auto& last = res.rows.back().report;
  const double limit = (1.0 + margin) * last.bound;
  m.add_gate("mean_sup_distance_at_finest_eps", last.mean_sup, limit, last.mean_sup <= limit);
  m.add_gate("tail_probability_non_increasing", res.tail_non_increasing() ? 1 : 0, 1, res.tail_non_increasing());
  return finish(ctx, m);
}

int cmd_verify(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const GridSpec g = make_grid(c);
  const RateTable rt = make_rates(c, g);
  const auto pairs = c.integer("verify.pairs", 100);
  if (pairs < 1) throw ConfigError("verify.pairs", "must be at least 1");
  const auto seeds = make_seeds(c, {1});
  Manifest m("verify", c, seeds);
  const auto rep = operator_identity_suite(rt, seeds.front(), static_cast<std::size_t>(pairs),
                                           c.real("verify.kernel_t", 0.5));
  Table t;
  t.columns = {"quantity", "value"};
  for (const auto& [k, v] : std::vector<std::pair<std::string, double>>{
           {"sites", static_cast<double>(rep.sites)}, {"pairs", static_cast<double>(rep.pairs)},
           {"max_duality_ratio", rep.max_duality_ratio}, {"max_column_sum", rep.max_column_sum},
           {"max_column_sum_ratio", rep.max_column_sum_ratio}, {"interior_residual", rep.interior_residual},
           {"box_residual", rep.box_residual}, {"kernel_row_error", rep.kernel_row_error},
           {"seconds", rep.seconds}})
    t.add_row({k, v});
  const HField hf = compute_h(rt);
  t.add_row({std::string("sup_abs_h"), hf.sup_abs});
  t.add_row({std::string("lipschitz_h"), hf.lipschitz});
  t.add_row({std::string("growth_constant"), hf.growth_constant});
  emit(ctx, m, "verify.csv", to_csv(t));
  m.add_gate("duality_ratio", rep.max_duality_ratio, 1e-10, rep.duality_ok());
  m.add_gate("column_sum_ratio", rep.max_column_sum_ratio, 1.0, rep.column_sum_ok());
  m.add_gate("interior_decomposition_residual", rep.interior_residual, 1e-12, rep.interior_ok());
  if (rep.kernel_checked)
    m.add_gate("kernel_row_sum_error", rep.kernel_row_error, 1e-9, rep.kernel_ok());
  else
    ctx.log << "kernel row sums skipped: more than 2000 sites\n";
  return finish(ctx, m);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"trimlab: trimmed branching random walks, their mean-field limit and stationary solutions"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  unsigned jobs = 1;

  struct Sub {
    const char* name;
    const char* help;
    std::function<int(Context&)> fn;
  };
  const std::vector<Sub> subs = {
      {"simulate", "Exact particle simulation of the trimmed process", cmd_simulate},
      {"solve", "Mean-field grid ODE", cmd_solve},
      {"stationary", "Closed-form stationary solutions and their checks", cmd_stationary},
      {"converge-n", "Particle vs mean-field as N grows", cmd_converge_n},
      {"converge-eps", "Mean-field vs the continuum limit as eps shrinks", cmd_converge_eps},
      {"dominate", "Trimmed vs untrimmed coupled runs", cmd_dominate},
      {"couple", "Shared-noise walker coupling", cmd_couple},
      {"verify", "Operator identity suite", cmd_verify},
  };
  std::map<std::string, std::string> shortcuts;
  std::map<CLI::App*, const Sub*> by_app;
  for (const auto& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("-c,--config", config_path, "Configuration file (key = value lines)");
    sc->add_option("-s,--set", overrides, "Override a key: --set key=value")->take_all();
    sc->add_option("-o,--out", out_dir, "Output directory (overrides the output key)");
    sc->add_option("-j,--jobs", jobs, "Worker threads for seed-parallel experiments")->check(CLI::PositiveNumber);
    if (std::string(s.name) == "stationary") {
      sc->add_option_function<std::string>("--which", [&](const std::string& v) { shortcuts["stationary.which"] = v; },
                                            "example1 | example2_flat | example2_sharp | example2_critical");
      sc->add_option_function<std::string>("--check", [&](const std::string& v) { shortcuts["stationary.check"] = v; },
                                            "all | weak-form | mass");
      sc->add_option_function<std::string>("--beta", [&](const std::string& v) { shortcuts["stationary.beta"] = v; },
                                            "derived | printed (Example 1 removal density)");
    }
    by_app[sc] = &s;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const Sub* chosen = nullptr;
  for (auto* sc : app.get_subcommands()) chosen = by_app.at(sc);
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& [k, v] : shortcuts) cfg.set(k, v);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (!out_dir.empty()) cfg.set("output", out_dir);
    cfg.reject_unknown(known_keys());
    Context ctx{cfg, fs::path(cfg.str("output", "trimlab_out")), jobs, out, cfg.boolean("plots", true)};
    return chosen->fn(ctx);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace trimlab::tools
