#include "trimlab/drift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "trimlab/errors.hpp"
#include "trimlab/numerics.hpp"

namespace trimlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double interpolate(const TabulatedDrift& t, std::span<const double> x, int axis) {
  const GridSpec& g = t.grid;
  const int d = g.dim();
  const int n = g.steps_per_side();
  std::vector<int> base(d);
  std::vector<double> frac(d);
  for (int k = 0; k < d; ++k) {
    const double s = std::clamp(x[k] / g.epsilon(), -static_cast<double>(n), static_cast<double>(n));
    int b = static_cast<int>(std::floor(s));
    if (b >= n) b = n - 1;
    base[k] = b;
    frac[k] = s - b;
  }
  double acc = 0.0;
  SiteId corner;
  corner.coords.resize(d);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const bool up = (mask >> k) & 1u;
      corner.coords[k] = base[k] + (up ? 1 : 0);
      w *= up ? frac[k] : 1.0 - frac[k];
    }
    if (w == 0.0) continue;
    acc += w * t.values[g.index(corner) * d + axis];
  }
  return acc;
}

}  // namespace

DriftModel DriftModel::sign_well(double a) {
  if (!(a >= 2.0)) throw Error(ErrorKind::invalid_parameter, "sign_well requires a >= 2");
  return DriftModel(SignWell{a});
}

DriftModel DriftModel::tabulated(TabulatedDrift table) {
  const auto expected = table.grid.site_count() * static_cast<std::size_t>(table.grid.dim());
  if (table.values.size() != expected)
    throw Error(ErrorKind::invalid_parameter, "tabulated drift: value count does not match grid");
  return DriftModel(std::move(table));
}

DriftModel DriftModel::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open drift table " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::io, "empty drift table " + path);
  const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2 || columns % 2 != 0)
    throw Error(ErrorKind::io, "drift table header must list x_1..x_d,b_1..b_d");
  const int d = columns / 2;

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != columns)
      throw Error(ErrorKind::io, "drift table row has wrong column count: " + line);
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw Error(ErrorKind::io, "drift table needs at least two rows");

  std::vector<double> xs;
  for (const auto& r : rows) xs.push_back(r[0]);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < xs.size(); ++k) spacing = std::min(spacing, xs[k] - xs[k - 1]);
  double half_width = 0.0;
  for (const auto& r : rows)
    for (int k = 0; k < d; ++k) half_width = std::max(half_width, std::abs(r[k]));

  GridSpec grid(spacing, d, half_width);
  std::vector<double> values(grid.site_count() * d, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    const SiteIndex s = grid.nearest(std::span<const double>(r.data(), d));
    for (int k = 0; k < d; ++k) values[s * d + k] = r[d + k];
  }
  for (double v : values)
    if (std::isnan(v)) throw Error(ErrorKind::io, "drift table does not cover a full grid");
  return tabulated(TabulatedDrift{grid, std::move(values)});
}

std::string DriftModel::name() const {
  return std::visit(overloaded{
                        [](const ZeroDrift&) { return std::string("zero"); },
                        [](const TanhWell& t) {
                          std::ostringstream os;
                          os << "tanh_well(" << t.scale << ")";
                          return os.str();
                        },
                        [](const SignWell& s) {
                          std::ostringstream os;
                          os << "sign_well(" << s.a << ")";
                          return os.str();
                        },
                        [](const TabulatedDrift&) { return std::string("tabulated"); },
                    },
                    kind_);
}

double DriftModel::component(std::span<const double> x, int axis) const {
  return std::visit(overloaded{
                        [](const ZeroDrift&) { return 0.0; },
                        [&](const TanhWell& t) { return -t.scale * std::tanh(x[axis]); },
                        [&](const SignWell& s) {
                          const double v = x[axis];
                          return v > 0.0 ? -s.a : (v < 0.0 ? s.a : 0.0);
                        },
                        [&](const TabulatedDrift& t) {
                          if (static_cast<int>(x.size()) != t.grid.dim())
                            throw Error(ErrorKind::dimension_mismatch,
                                        "tabulated drift evaluated in wrong dimension");
                          return interpolate(t, x, axis);
                        },
                    },
                    kind_);
}

std::vector<double> DriftModel::operator()(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = component(x, static_cast<int>(k));
  return out;
}

double DriftModel::lipschitz_constant() const {
  return std::visit(overloaded{
                        [](const ZeroDrift&) { return 0.0; },
                        [](const TanhWell& t) { return std::abs(t.scale); },
                        [](const SignWell&) { return std::numeric_limits<double>::infinity(); },
                        [](const TabulatedDrift& t) {
                          const GridSpec& g = t.grid;
                          const int d = g.dim();
                          double lip = 0.0;
                          for (SiteIndex x = 0; x < g.site_count(); ++x)
                            for (int i = 0; i < d; ++i)
                              if (auto y = g.neighbor(x, Direction{i}))
                                for (int k = 0; k < d; ++k)
                                  lip = std::max(lip, std::abs(t.values[*y * d + k] -
                                                               t.values[x * d + k]) /
                                                          g.epsilon());
                          return lip;
                        },
                    },
                    kind_);
}

Mollifier::Mollifier(const MollifierSpec& spec) : spec_(spec) {
  if (!(spec.radius > 0.0)) throw Error(ErrorKind::invalid_parameter, "mollifier radius must be positive");
  if (spec.nodes < 8) throw Error(ErrorKind::invalid_parameter, "mollifier needs at least 8 nodes");
  const double radius = spec.radius;
  const auto bump = [radius](double s) {
    const double z = s / radius;
    return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) / radius : 0.0;
  };
  normalizer_ = 1.0 / integrate(bump, -radius, radius, 1 << 14, {}, 16);

  const GaussLegendre rule(spec.nodes);
  nodes_.resize(spec.nodes);
  weights_.resize(spec.nodes);
  for (int k = 0; k < spec.nodes; ++k) {
    nodes_[k] = radius * rule.nodes[k];
    weights_[k] = radius * rule.weights[k] * density(nodes_[k]);
  }
  rule_mass_ = exact_sum(weights_);
}

double Mollifier::density(double s) const {
  const double z = s / spec_.radius;
  if (std::abs(z) >= 1.0) return 0.0;
  return normalizer_ * std::exp(-1.0 / (1.0 - z * z)) / spec_.radius;
}

double Mollifier::convolve(const std::function<double(double)>& g, double x) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) acc += weights_[k] * g(x - nodes_[k]);
  return acc;
}

RateTable RateTable::from_perturbation(const GridSpec& grid, const PerturbationFn& qfn) {
  RateTable t(grid);
  const int nd = t.nd_;
  const int d = grid.dim();
  const std::size_t S = grid.site_count();
  const double inv_eps = 1.0 / grid.epsilon();
  const double inv_eps2 = inv_eps * inv_eps;

  t.q_.resize(S * nd);
  t.q_back_.resize(S * nd);
  std::vector<int> coords(d);
  for (SiteIndex x = 0; x < S; ++x) {
    for (int k = 0; k < d; ++k) coords[k] = grid.coord(x, k);
    for (int i = 0; i < nd; ++i) {
      const Direction dir{i};
      t.q_[x * nd + i] = qfn(coords, dir);
      coords[dir.axis(d)] -= dir.sign(d);
      t.q_back_[x * nd + i] = qfn(coords, dir);
      coords[dir.axis(d)] += dir.sign(d);
    }
  }

  t.r_.resize(S * nd);
  t.rho_.resize(S * nd);
  t.r_bar_.assign(S, 0.0);
  t.rho_bar_.assign(S, 0.0);
  t.r_out_.assign(S, 0.0);
  t.rho_in_.assign(S, 0.0);
  for (SiteIndex x = 0; x < S; ++x) {
    for (int i = 0; i < nd; ++i) {
      const Direction dir{i};
      const double q = t.q_[x * nd + i];
      if (!std::isfinite(q) || !std::isfinite(t.q_back_[x * nd + i]))
        throw Error(ErrorKind::invalid_parameter, "non-finite drift perturbation");
      const double r = inv_eps2 + inv_eps * q;
      const double rho = inv_eps2 + inv_eps * t.q_back_[x * nd + dir.reversed(d).value];
      if (!(r > 0.0) || !(rho > 0.0)) {
        std::ostringstream os;
        os << "non-positive jump rate at site " << x << " direction " << i << " (r=" << r
           << ", rho=" << rho << "); decrease epsilon";
        throw Error(ErrorKind::epsilon_too_large, os.str());
      }
      t.r_[x * nd + i] = r;
      t.rho_[x * nd + i] = rho;
      t.r_bar_[x] += r;
      t.rho_bar_[x] += rho;
      if (grid.neighbor_or_none(x, i) >= 0) {
        t.r_out_[x] += r;
        t.rho_in_[x] += rho;
      }
      t.sup_abs_q_ = std::max(t.sup_abs_q_, std::abs(q));
    }
    t.max_r_out_ = std::max(t.max_r_out_, t.r_out_[x]);
    t.max_rho_in_ = std::max(t.max_rho_in_, t.rho_in_[x]);
  }
  return t;
}

std::vector<double> RateTable::discrete_drift(SiteIndex x) const {
  const int d = grid_.dim();
  std::vector<double> b(d, 0.0);
  for (int i = 0; i < nd_; ++i) {
    const Direction dir{i};
    b[dir.axis(d)] += dir.sign(d) * q(x, i);
  }
  return b;
}

RateTable build_q_from_b(const DriftModel& b, const MollifierSpec& m, const GridSpec& g) {
  if (b.irregular())
    throw Error(ErrorKind::irregular_drift,
                b.name() + " is discontinuous and cannot back a rate table");
  if (const auto* t = std::get_if<TabulatedDrift>(&b.kind()); t && t->grid.dim() != g.dim())
    throw Error(ErrorKind::dimension_mismatch, "tabulated drift dimension does not match grid");
  const Mollifier mollifier(m);
  const int d = g.dim();
  const double eps = g.epsilon();
  const PerturbationFn q = [&](std::span<const int> coords, Direction i) {
    std::vector<double> x(d);
    for (int k = 0; k < d; ++k) x[k] = eps * coords[k];
    const int axis = i.axis(d);
    const double center = x[axis];
    const double positive_part = mollifier.convolve(
        [&](double y) {
          x[axis] = y;
          return std::max(0.0, b.component(x, axis));
        },
        center);
    if (i.value < d) return positive_part;
    x[axis] = center;
    return -b.component(x, axis) + positive_part;
  };
  return RateTable::from_perturbation(g, q);
}

Assumption1Report validate_assumption1(const RateTable& rt, const DriftModel& b, double c1,
                                       std::size_t max_pairs, std::uint64_t seed) {
  const GridSpec& g = rt.grid();
  const int nd = rt.directions();
  const std::size_t S = g.site_count();
  const double eps = g.epsilon();

  Assumption1Report rep;
  rep.threshold = c1;
  rep.sup_q = rt.sup_abs_q();

  // Forward differences; NaN where the step leaves the box.
  std::vector<double> fwd(S * nd, std::numeric_limits<double>::quiet_NaN());
  for (SiteIndex x = 0; x < S; ++x)
    for (int i = 0; i < nd; ++i)
      if (auto y = g.neighbor(x, Direction{i})) fwd[x * nd + i] = (rt.q(*y, i) - rt.q(x, i)) / eps;

  const auto examine = [&](SiteIndex x, SiteIndex y) {
    const double dist = g.distance(x, y);
    for (int i = 0; i < nd; ++i) {
      rep.lipschitz_q = std::max(rep.lipschitz_q, std::abs(rt.q(x, i) - rt.q(y, i)) / dist);
      const double fx = fwd[x * nd + i], fy = fwd[y * nd + i];
      if (!std::isnan(fx) && !std::isnan(fy))
        rep.second_difference_q = std::max(rep.second_difference_q, std::abs(fx - fy) / dist);
    }
    ++rep.pairs_examined;
  };

  if (S * (S - 1) / 2 <= max_pairs) {
    for (SiteIndex x = 0; x < S; ++x)
      for (SiteIndex y = x + 1; y < S; ++y) examine(x, y);
  } else {
    for (SiteIndex x = 0; x < S; ++x)
      for (int i = 0; i < g.dim(); ++i)
        if (auto y = g.neighbor(x, Direction{i})) examine(x, *y);
    RandomStream rng(seed, 0);
    while (rep.pairs_examined < max_pairs) {
      const SiteIndex x = rng.below(S), y = rng.below(S);
      if (x != y) examine(x, y);
    }
  }

  for (SiteIndex x = 0; x < S; ++x) {
    const auto pos = g.position(x);
    const auto be = rt.discrete_drift(x);
    for (int k = 0; k < g.dim(); ++k)
      rep.drift_error = std::max(rep.drift_error, std::abs(be[k] - b.component(pos, k)));
  }

  rep.violation = rep.sup_q > c1 || rep.lipschitz_q > c1 || rep.second_difference_q > c1;
  return rep;
}

HField compute_h(const RateTable& rt) {
  const GridSpec& g = rt.grid();
  const int nd = rt.directions();
  const std::size_t S = g.site_count();
  const double inv_eps = 1.0 / g.epsilon();

  HField hf;
  hf.h.resize(S);
  hf.h_direct.resize(S);
  hf.h_box.resize(S);
  double min_h_box = std::numeric_limits<double>::infinity();
  for (SiteIndex x = 0; x < S; ++x) {
    double s = 0.0;
    for (int i = 0; i < nd; ++i) s += rt.q(x, i) - rt.q_behind(x, i);
    hf.h[x] = inv_eps * s;
    hf.h_direct[x] = rt.r_bar(x) - rt.rho_bar(x);
    hf.h_box[x] = rt.r_out(x) - rt.rho_in(x);
    hf.sup_abs = std::max(hf.sup_abs, std::abs(hf.h[x]));
    hf.max_formula_gap = std::max(hf.max_formula_gap, std::abs(hf.h[x] - hf.h_direct[x]));
    min_h_box = std::min(min_h_box, hf.h_box[x]);
  }
  hf.growth_constant = std::max(hf.sup_abs, -min_h_box);

  if (S <= 4000) {
    for (SiteIndex x = 0; x < S; ++x)
      for (SiteIndex y = x + 1; y < S; ++y)
        hf.lipschitz = std::max(hf.lipschitz, std::abs(hf.h[x] - hf.h[y]) / g.distance(x, y));
  } else {
    for (SiteIndex x = 0; x < S; ++x)
      for (int i = 0; i < g.dim(); ++i)
        if (auto y = g.neighbor(x, Direction{i}))
          hf.lipschitz = std::max(hf.lipschitz, std::abs(hf.h[x] - hf.h[*y]) / g.epsilon());
  }
  return hf;
}

}  // namespace trimlab
