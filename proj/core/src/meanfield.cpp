#include "trimlab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "trimlab/errors.hpp"
#include "trimlab/numerics.hpp"
#include "trimlab/operators.hpp"

namespace trimlab {

WaterLevel water_level_cap(std::span<const double> f, double m) {
  if (f.empty()) throw Error(ErrorKind::invalid_parameter, "water_level_cap on empty function");
  if (m < 0.0) throw Error(ErrorKind::invalid_parameter, "water_level_cap: negative mass");
  std::vector<double> sorted(f.begin(), f.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double total = exact_sum(sorted);
  const double removable = total - sorted.back() * static_cast<double>(sorted.size());
  if (m > removable * (1.0 + 1e-12) + 1e-300) {
    std::ostringstream os;
    os << "cannot remove mass " << m << " from above the minimum (at most " << removable << ")";
    throw Error(ErrorKind::infeasible_mass, os.str());
  }

  WaterLevel out;
  double prefix = 0.0;
  const std::size_t n = sorted.size();
  out.level = sorted.back();
  for (std::size_t k = 1; k <= n; ++k) {
    prefix += sorted[k - 1];
    const double c = (prefix - m) / static_cast<double>(k);
    if (k == n || c >= sorted[k]) {
      out.level = std::min(c, sorted[0]);
      break;
    }
  }
  out.capped.resize(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) out.capped[x] = std::min(f[x], out.level);
  return out;
}

double effective_tau_flat(const SchemeConfig& cfg, const GridSpec& grid) {
  return cfg.tau_flat.value_or(grid.epsilon() * grid.epsilon());
}

GridFunction to_density(const GridFunction& u) {
  const double scale = std::pow(u.grid().epsilon(), -u.grid().dim());
  GridFunction U(u.grid());
  auto v = U.mutable_values();
  for (std::size_t x = 0; x < u.size(); ++x) v[x] = scale * u[x];
  return U;
}

namespace {

// (L* u + g u) into out.
void growth_rhs(const RateTable& rt, std::span<const double> u, std::span<double> out, double g) {
  lstar_into(rt, u, out);
  if (g != 0.0)
    for (std::size_t x = 0; x < u.size(); ++x) out[x] += g * u[x];
}

}  // namespace

SplitStep step_trim_splitting(const RateTable& rt, const GridFunction& u, double dt) {
  require_same_grid(rt.grid(), u.grid(), "step_trim_splitting");
  const std::size_t S = u.size();
  std::vector<double> tilde(S);
  growth_rhs(rt, u.values(), tilde, 1.0);
  for (std::size_t x = 0; x < S; ++x) tilde[x] = u[x] + dt * tilde[x];

  const double excess = std::max(0.0, exact_sum(tilde) - 1.0);
  WaterLevel cap = water_level_cap(tilde, excess);

  std::vector<double> lambda(S);
  for (std::size_t x = 0; x < S; ++x) lambda[x] = (tilde[x] - cap.capped[x]) / dt;
  return SplitStep{GridFunction(u.grid(), std::move(cap.capped)),
                   GridFunction(u.grid(), std::move(lambda)), cap.level};
}

std::vector<SiteIndex> argmax_band(const GridFunction& u, double tau_u) {
  const double top = *std::max_element(u.values().begin(), u.values().end());
  std::vector<SiteIndex> band;
  for (SiteIndex x = 0; x < u.size(); ++x)
    if (u[x] >= top - tau_u) band.push_back(x);
  return band;
}

ActiveSetStep step_active_set(const RateTable& rt, const GridFunction& u,
                              std::span<const SiteIndex> active, double dt, double tau_u) {
  require_same_grid(rt.grid(), u.grid(), "step_active_set");
  const std::size_t S = u.size();
  if (active.empty()) throw Error(ErrorKind::invalid_parameter, "active set must be nonempty");

  std::vector<double> rate(S);
  growth_rhs(rt, u.values(), rate, 1.0);

  std::vector<char> in(S, 0);
  for (SiteIndex x : active) in.at(x) = 1;
  std::size_t members = std::count(in.begin(), in.end(), 1);

  ActiveSetStep out{GridFunction(u.grid()), GridFunction(u.grid()), {}, 0.0, 0};
  std::vector<double> next(S), lambda(S);
  for (;;) {
    if (out.retries > S)
      throw Error(ErrorKind::active_set_cycle, "active set failed to settle within |sites| retries");
    double sum = 0.0;
    for (std::size_t x = 0; x < S; ++x)
      if (in[x]) sum += rate[x];
    const double hdot = (sum - 1.0) / static_cast<double>(members);

    bool changed = false;
    for (std::size_t x = 0; x < S; ++x) {
      if (in[x] && rate[x] - hdot < 0.0 && members > 1) {
        in[x] = 0;
        --members;
        changed = true;
      }
    }
    if (changed) {
      ++out.retries;
      continue;
    }

    double level = -std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < S; ++x) {
      lambda[x] = in[x] ? rate[x] - hdot : 0.0;
      next[x] = u[x] + dt * (rate[x] - lambda[x]);
      if (in[x]) level = std::max(level, next[x]);
    }
    for (std::size_t x = 0; x < S; ++x) {
      if (!in[x] && next[x] > level - tau_u && rate[x] >= hdot) {
        in[x] = 1;
        ++members;
        changed = true;
      }
    }
    if (changed) {
      ++out.retries;
      continue;
    }
    out.level_rate = hdot;
    break;
  }

  for (SiteIndex x = 0; x < S; ++x)
    if (in[x]) out.active.push_back(x);
  out.u_next = GridFunction(u.grid(), std::move(next));
  out.lambda = GridFunction(u.grid(), std::move(lambda));
  return out;
}

MeanFieldSolution solve(const RateTable& rt, const GridFunction& u0, double T,
                        const SchemeConfig& cfg) {
  require_same_grid(rt.grid(), u0.grid(), "solve");
  const GridSpec& grid = rt.grid();
  const std::size_t S = grid.site_count();
  if (!(T > 0.0)) throw Error(ErrorKind::invalid_parameter, "solve: horizon T must be positive");
  if (!(cfg.dt > 0.0)) throw Error(ErrorKind::invalid_parameter, "solve: dt must be positive");
  const std::size_t K = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T / cfg.dt)));
  const double dt = T / static_cast<double>(K);
  const double g = cfg.growth ? 1.0 : 0.0;
  if (!(dt * (rt.max_r_out() + g) < 1.0) || !(dt * rt.max_rho_in() < 1.0)) {
    std::ostringstream os;
    os << "dt = " << dt << " violates the positivity bound dt * max(r_out + 1) < 1 (max r_out = "
       << rt.max_r_out() << ")";
    throw Error(ErrorKind::invalid_parameter, os.str());
  }
  if (cfg.removal) {
    if (*std::min_element(u0.values().begin(), u0.values().end()) < 0.0)
      throw Error(ErrorKind::invalid_parameter, "solve: u0 must be nonnegative");
    if (std::abs(u0.sum() - 1.0) > 1e-9)
      throw Error(ErrorKind::invalid_parameter, "solve: u0 must have unit mass");
  }
  if (cfg.removal && !cfg.growth)
    throw Error(ErrorKind::invalid_parameter,
                "solve: removal without growth cannot keep unit mass");

  const double scale = std::pow(grid.epsilon(), -grid.dim());
  const double tau = effective_tau_flat(cfg, grid);
  const double tau_u = tau / scale;
  const std::size_t stride = std::max<std::size_t>(1, cfg.record_stride);

  MeanFieldSolution sol;
  auto& diag = sol.diagnostics;
  diag.dt = dt;
  diag.tau_flat = tau;
  diag.growth_constant = compute_h(rt).growth_constant;
  diag.min_u = *std::min_element(u0.values().begin(), u0.values().end());
  diag.min_lambda = std::numeric_limits<double>::infinity();
  const double u0_inf = u0.linf();

  GridFunction u = u0;
  std::vector<SiteIndex> active = argmax_band(u, tau_u);

  // Advances u by one step; returns the removal rate in force.
  const auto advance = [&](const GridFunction& cur, bool commit) -> std::pair<GridFunction, GridFunction> {
    if (!cfg.removal) {
      // Linear forward equation (with or without the growth term).
      std::vector<double> rhs(S);
      growth_rhs(rt, cur.values(), rhs, g);
      for (std::size_t x = 0; x < S; ++x) rhs[x] = cur[x] + dt * rhs[x];
      return {GridFunction(grid, std::move(rhs)), GridFunction(grid)};
    }
    if (cfg.scheme == Scheme::trim_splitting) {
      auto st = step_trim_splitting(rt, cur, dt);
      return {std::move(st.u_next), std::move(st.lambda)};
    }
    auto st = step_active_set(rt, cur, active, dt, tau_u);
    diag.max_retries = std::max(diag.max_retries, st.retries);
    if (commit) active = std::move(st.active);
    return {std::move(st.u_next), std::move(st.lambda)};
  };

  std::vector<double> rate(S);
  sol.removal_total.assign(S, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double t = static_cast<double>(k) * dt;
    auto [next, lambda] = advance(u, true);

    if (cfg.removal) {
      const double lam_sum = lambda.sum();
      diag.max_lambda_sum_error = std::max(diag.max_lambda_sum_error, std::abs(lam_sum - 1.0));
      diag.min_lambda = std::min(
          diag.min_lambda, *std::min_element(lambda.values().begin(), lambda.values().end()));
      const double top = u.linf();
      growth_rhs(rt, u.values(), rate, g);
      double rate_inf = 0.0;
      for (double v : rate) rate_inf = std::max(rate_inf, std::abs(v));
      const double band = tau + 2.0 * dt * rate_inf * scale;
      double gap = 0.0, support = 0.0;
      for (std::size_t x = 0; x < S; ++x) {
        if (lambda[x] > 0.0) gap = std::max(gap, (top - u[x]) * scale);
        support += (top - u[x]) * lambda[x];
      }
      diag.max_support_gap = std::max(diag.max_support_gap, gap);
      diag.max_support_excess = std::max(diag.max_support_excess, gap - band);
      diag.support_integral += dt * support;
      for (std::size_t x = 0; x < S; ++x) sol.removal_total[x] += dt * lambda[x];
    }

    if (k % stride == 0) {
      sol.path.times.push_back(t);
      sol.path.u.push_back(u);
      sol.removal.times.push_back(t);
      sol.removal.rates.push_back(lambda);
    }

    auto nv = next.mutable_values();
    for (double& v : nv) {
      if (v < 0.0) {
        diag.min_u = std::min(diag.min_u, v);
        diag.clipped_mass += -v;
        v = 0.0;
      }
    }
    if (diag.clipped_mass > cfg.clip_abort) {
      std::ostringstream os;
      os << "clipped mass " << diag.clipped_mass << " exceeds " << cfg.clip_abort;
      throw Error(ErrorKind::clip_mass_exceeded, os.str());
    }
    u = std::move(next);

    const double t_next = static_cast<double>(k + 1) * dt;
    if (cfg.removal) diag.max_mass_error = std::max(diag.max_mass_error, std::abs(u.sum() - 1.0));
    if (u0_inf > 0.0)
      diag.max_growth_ratio = std::max(
          diag.max_growth_ratio, u.linf() / (u0_inf * std::exp((g + diag.growth_constant) * t_next)));
  }
  diag.steps = K;
  if (!cfg.removal) diag.min_lambda = 0.0;

  // Terminal record with the removal rate that would act from T on.
  auto terminal = advance(u, false);
  sol.path.times.push_back(T);
  sol.path.u.push_back(u);
  sol.removal.times.push_back(T);
  sol.removal.rates.push_back(std::move(terminal.second));
  return sol;
}

OdeResidualReport ode_residuals(const RateTable& rt, const DensityPath& path,
                                const RemovalRatePath& removal, int dyadic_levels) {
  if (path.size() < 2 || removal.size() != path.size())
    throw Error(ErrorKind::invalid_parameter, "ode_residuals: path and removal must share a mesh");
  const std::size_t S = rt.grid().site_count();
  const std::size_t K = path.size() - 1;

  // Integrand f_k = L* u_k + u_k - Lambda_k at every mesh time.
  std::vector<std::vector<double>> integrand(path.size(), std::vector<double>(S));
  for (std::size_t k = 0; k <= K; ++k) {
    growth_rhs(rt, path.u[k].values(), integrand[k], 1.0);
    for (std::size_t x = 0; x < S; ++x) integrand[k][x] -= removal.rates[k][x];
  }

  OdeResidualReport rep;
  rep.min_lambda = std::numeric_limits<double>::infinity();
  for (int level = 0; level <= dyadic_levels; ++level) {
    const std::size_t pieces = std::size_t{1} << level;
    if (pieces > K) break;
    double worst = 0.0;
    for (std::size_t j = 0; j < pieces; ++j) {
      const std::size_t a = j * K / pieces, b = (j + 1) * K / pieces;
      for (std::size_t x = 0; x < S; ++x) {
        double integral = 0.0;
        for (std::size_t k = a; k < b; ++k)
          integral += 0.5 * (path.times[k + 1] - path.times[k]) *
                      (integrand[k][x] + integrand[k + 1][x]);
        worst = std::max(worst, std::abs(path.u[b][x] - path.u[a][x] - integral));
      }
    }
    rep.integrated_by_level.push_back(worst);
    rep.integrated_max = std::max(rep.integrated_max, worst);
  }

  for (std::size_t k = 0; k <= K; ++k) {
    const auto& lam = removal.rates[k];
    rep.max_lambda_sum_error = std::max(rep.max_lambda_sum_error, std::abs(lam.sum() - 1.0));
    rep.min_lambda =
        std::min(rep.min_lambda, *std::min_element(lam.values().begin(), lam.values().end()));
    if (k < K) {
      const double top = path.u[k].linf();
      double s = 0.0;
      for (std::size_t x = 0; x < S; ++x) s += (top - path.u[k][x]) * lam[x];
      rep.support_integral += (path.times[k + 1] - path.times[k]) * s;
    }
  }
  return rep;
}

double modulus_of_continuity(const GridFunction& f, double eta) {
  const GridSpec& g = f.grid();
  const int d = g.dim();
  const int reach = static_cast<int>(std::floor(eta / g.epsilon() + 1e-9));
  if (reach <= 0) return 0.0;

  // Offsets within the eta-ball, restricted to the lexicographically positive half.
  std::vector<std::vector<int>> offsets;
  std::vector<int> off(d, -reach);
  for (;;) {
    long sq = 0;
    for (int v : off) sq += static_cast<long>(v) * v;
    const bool positive = [&] {
      for (int v : off)
        if (v != 0) return v > 0;
      return false;
    }();
    if (positive && static_cast<double>(sq) * g.epsilon() * g.epsilon() <= eta * eta * (1 + 1e-12))
      offsets.push_back(off);
    int k = d - 1;
    while (k >= 0 && off[k] == reach) off[k--] = -reach;
    if (k < 0) break;
    ++off[k];
  }

  double worst = 0.0;
  SiteId y;
  y.coords.resize(d);
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    for (const auto& o : offsets) {
      bool inside = true;
      for (int k = 0; k < d; ++k) {
        y.coords[k] = g.coord(x, k) + o[k];
        if (y.coords[k] < -g.steps_per_side() || y.coords[k] > g.steps_per_side()) inside = false;
      }
      if (inside) worst = std::max(worst, std::abs(f[x] - f[g.index(y)]));
    }
  }
  return worst;
}

}  // namespace trimlab
