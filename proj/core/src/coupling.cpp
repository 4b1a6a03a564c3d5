#include "trimlab/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "trimlab/errors.hpp"
#include "trimlab/numerics.hpp"

namespace trimlab {

std::pair<SiteIndex, SiteIndex> CoupledPairPath::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return {x0, y0};
  const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
  return {xs[k], ys[k]};
}

CoupledPairPath simulate_coupled_walkers(SiteIndex x0, SiteIndex y0, const RateTable& rt, double T,
                                         std::uint64_t seed) {
  const GridSpec& g = rt.grid();
  if (x0 >= g.site_count() || y0 >= g.site_count())
    throw Error(ErrorKind::invalid_parameter, "walker start outside the box");
  if (!(T >= 0.0)) throw Error(ErrorKind::invalid_parameter, "horizon must be nonnegative");

  const int nd = rt.directions();
  std::vector<double> envelope(static_cast<std::size_t>(nd), 0.0);
  for (SiteIndex x = 0; x < g.site_count(); ++x)
    for (int i = 0; i < nd; ++i) envelope[static_cast<std::size_t>(i)] = std::max(envelope[static_cast<std::size_t>(i)], rt.rho(x, i));
  std::vector<double> cumulative(static_cast<std::size_t>(nd));
  double total = 0.0;
  for (int i = 0; i < nd; ++i) cumulative[static_cast<std::size_t>(i)] = total += envelope[static_cast<std::size_t>(i)];

  RandomStream time(seed, 0), pick(seed, 1), mark(seed, 2);
  CoupledPairPath p;
  p.x0 = x0;
  p.y0 = y0;
  p.horizon = T;
  p.sup_distance = g.distance(x0, y0);
  if (p.sup_distance >= 1.0) p.tau = 0.0;

  SiteIndex X = x0, Y = y0;
  double t = 0.0;
  while (true) {
    t += time.exponential(total);
    if (t > T) break;
    ++p.candidates;
    const double a = pick.uniform() * total;
    int i = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), a) - cumulative.begin());
    i = std::min(i, nd - 1);
    const double theta = mark.uniform() * envelope[static_cast<std::size_t>(i)];
    const std::int64_t nx = theta < rt.rho(X, i) ? g.neighbor_or_none(X, i) : -1;
    const std::int64_t ny = theta < rt.rho(Y, i) ? g.neighbor_or_none(Y, i) : -1;
    if (nx < 0 && ny < 0) continue;
    if (nx >= 0) X = static_cast<SiteIndex>(nx);
    if (ny >= 0) Y = static_cast<SiteIndex>(ny);
    p.times.push_back(t);
    p.xs.push_back(X);
    p.ys.push_back(Y);
    p.flags.push_back(nx >= 0 && ny >= 0 ? MoveFlag::both : nx >= 0 ? MoveFlag::x_only : MoveFlag::y_only);
    const double dist = g.distance(X, Y);
    p.sup_distance = std::max(p.sup_distance, dist);
    if (!p.tau && dist >= 1.0) p.tau = t;
  }
  return p;
}

ContractionReport contraction_report(const RateTable& rt, const std::vector<CoupledPairPath>& paths,
                                     double C, double delta) {
  ContractionReport rep;
  rep.paths = paths.size();
  rep.delta = delta;
  if (paths.empty()) return rep;
  const CoupledPairPath& first = paths.front();
  for (const auto& p : paths)
    if (p.x0 != first.x0 || p.y0 != first.y0 || p.horizon != first.horizon)
      throw Error(ErrorKind::invalid_parameter, "contraction_report: paths differ in (x0, y0, T)");

  rep.initial_distance = rt.grid().distance(first.x0, first.y0);
  rep.bound = rep.initial_distance * std::exp(C * first.horizon);
  std::vector<double> sups;
  std::vector<double> squares;
  std::size_t stopped = 0;
  for (const auto& p : paths) {
    sups.push_back(p.sup_distance);
    squares.push_back(p.sup_distance * p.sup_distance);
    if (p.sup_distance > rep.bound + delta) ++rep.tail_count;
    if (p.tau) ++stopped;
  }
  const auto n = static_cast<double>(paths.size());
  rep.mean_sup = exact_sum(sups) / n;
  if (paths.size() > 1) {
    const double var = std::max(0.0, (exact_sum(squares) - n * rep.mean_sup * rep.mean_sup) / (n - 1.0));
    rep.stderr_sup = std::sqrt(var / n);
  }
  rep.tail_probability = static_cast<double>(rep.tail_count) / n;
  rep.tau_fraction = static_cast<double>(stopped) / n;
  return rep;
}

}  // namespace trimlab
