#include "trimlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "trimlab/errors.hpp"

namespace trimlab {

GridFunction apply_L(const RateTable& rt, const GridFunction& f) {
  require_same_grid(rt.grid(), f.grid(), "apply_L");
  const GridSpec& g = rt.grid();
  const int nd = rt.directions();
  GridFunction out(g);
  auto o = out.mutable_values();
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    double acc = 0.0;
    for (int i = 0; i < nd; ++i) {
      const std::int64_t y = g.neighbor_or_none(x, i);
      if (y >= 0) acc += rt.r(x, i) * (f[static_cast<SiteIndex>(y)] - f[x]);
    }
    o[x] = acc;
  }
  return out;
}

void lstar_into(const RateTable& rt, std::span<const double> in, std::span<double> out) {
  const GridSpec& g = rt.grid();
  const int nd = rt.directions();
  const int d = g.dim();
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    double acc = -rt.r_out(x) * in[x];
    for (int i = 0; i < nd; ++i) {
      const std::int64_t y = g.neighbor_or_none(x, i);
      if (y < 0) continue;
      const auto ys = static_cast<SiteIndex>(y);
      // Entry L(y, x) of the truncated generator: the jump y -> x uses direction i*.
      acc += rt.r(ys, Direction{i}.reversed(d).value) * in[ys];
    }
    out[x] = acc;
  }
}

GridFunction apply_Lstar(const RateTable& rt, const GridFunction& f) {
  require_same_grid(rt.grid(), f.grid(), "apply_Lstar");
  GridFunction out(rt.grid());
  lstar_into(rt, f.values(), out.mutable_values());
  return out;
}

GridFunction apply_Lstar_rho_formula(const RateTable& rt, const GridFunction& f) {
  require_same_grid(rt.grid(), f.grid(), "apply_Lstar_rho_formula");
  const GridSpec& g = rt.grid();
  const int nd = rt.directions();
  GridFunction out(g);
  auto o = out.mutable_values();
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    double acc = -rt.r_bar(x) * f[x];
    for (int i = 0; i < nd; ++i) {
      const std::int64_t y = g.neighbor_or_none(x, i);
      if (y >= 0) acc += rt.rho(x, i) * f[static_cast<SiteIndex>(y)];
    }
    o[x] = acc;
  }
  return out;
}

GridFunction apply_barL(const RateTable& rt, const GridFunction& f) {
  require_same_grid(rt.grid(), f.grid(), "apply_barL");
  const GridSpec& g = rt.grid();
  const int nd = rt.directions();
  GridFunction out(g);
  auto o = out.mutable_values();
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    double acc = 0.0;
    for (int i = 0; i < nd; ++i) {
      const std::int64_t y = g.neighbor_or_none(x, i);
      if (y >= 0) acc += rt.rho(x, i) * (f[static_cast<SiteIndex>(y)] - f[x]);
    }
    o[x] = acc;
  }
  return out;
}

double duality_residual(const RateTable& rt, const GridFunction& f, const GridFunction& g) {
  return std::abs(inner(apply_L(rt, f), g) - inner(f, apply_Lstar(rt, g)));
}

void Semigroup::apply_in_place(std::vector<double>& v, double t) const {
  if (t < 0.0) throw Error(ErrorKind::invalid_parameter, "semigroup time must be nonnegative");
  if (t == 0.0) return;
  const double spectral_bound = rt_->max_r_out() + rt_->max_rho_in() + std::abs(growth_);
  const auto steps = static_cast<long>(std::ceil(t * spectral_bound));
  const double h = t / static_cast<double>(std::max(1L, steps));
  const std::size_t S = v.size();
  std::vector<double> k1(S), k2(S), k3(S), k4(S), tmp(S);
  const auto rhs = [&](const std::vector<double>& in, std::vector<double>& out) {
    lstar_into(*rt_, in, out);
    if (growth_ != 0.0)
      for (std::size_t x = 0; x < S; ++x) out[x] += growth_ * in[x];
  };
  for (long s = 0; s < std::max(1L, steps); ++s) {
    rhs(v, k1);
    for (std::size_t x = 0; x < S; ++x) tmp[x] = v[x] + 0.5 * h * k1[x];
    rhs(tmp, k2);
    for (std::size_t x = 0; x < S; ++x) tmp[x] = v[x] + 0.5 * h * k2[x];
    rhs(tmp, k3);
    for (std::size_t x = 0; x < S; ++x) tmp[x] = v[x] + h * k3[x];
    rhs(tmp, k4);
    for (std::size_t x = 0; x < S; ++x)
      v[x] += h / 6.0 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]);
  }
}

GridFunction Semigroup::apply(const GridFunction& v, double t) const {
  require_same_grid(rt_->grid(), v.grid(), "Semigroup::apply");
  std::vector<double> w(v.values().begin(), v.values().end());
  apply_in_place(w, t);
  return GridFunction(rt_->grid(), std::move(w));
}

GridFunction Semigroup::row(SiteIndex x, double t) const {
  return apply(GridFunction::indicator(rt_->grid(), x), t);
}

Eigen::MatrixXd generator_matrix(const RateTable& rt) {
  const GridSpec& g = rt.grid();
  const auto S = static_cast<Eigen::Index>(g.site_count());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(S, S);
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    for (int i = 0; i < rt.directions(); ++i) {
      const std::int64_t y = g.neighbor_or_none(x, i);
      if (y < 0) continue;
      Q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += rt.r(x, i);
      Q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) -= rt.r(x, i);
    }
  }
  return Q;
}

Eigen::MatrixXd dense_kernel(const RateTable& rt, double t) {
  if (rt.grid().site_count() > 2000)
    throw Error(ErrorKind::invalid_parameter, "dense_kernel is limited to grids of <= 2000 sites");
  const Eigen::MatrixXd Qt = t * generator_matrix(rt);
  return Qt.exp();
}

namespace {

std::size_t mesh_index(const std::vector<double>& times, double t, const char* which) {
  if (times.empty()) throw Error(ErrorKind::invalid_parameter, "empty path");
  const double scale = std::max(1.0, std::abs(times.back()));
  if (t < times.front() - 1e-12 * scale || t > times.back() + 1e-12 * scale) {
    std::ostringstream os;
    os << "duhamel_residual: " << which << " = " << t << " outside path horizon [" << times.front()
       << ", " << times.back() << "]";
    throw Error(ErrorKind::horizon_exceeded, os.str());
  }
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * scale);
  if (it == times.end() || std::abs(*it - t) > 1e-9 * scale) {
    std::ostringstream os;
    os << "duhamel_residual: " << which << " = " << t << " is not a mesh time";
    throw Error(ErrorKind::invalid_parameter, os.str());
  }
  return static_cast<std::size_t>(it - times.begin());
}

}  // namespace

double duhamel_residual(const RateTable& rt, const DensityPath& path, const RemovalRatePath& removal,
                        double s, double t) {
  if (t < s) throw Error(ErrorKind::invalid_parameter, "duhamel_residual requires s <= t");
  const std::size_t ks = mesh_index(path.times, s, "s");
  const std::size_t kt = mesh_index(path.times, t, "t");
  if (ks == kt) return 0.0;
  if (removal.size() != path.size())
    throw Error(ErrorKind::invalid_parameter, "removal path must share the density mesh");

  const Semigroup S(rt, 1.0);
  const std::size_t n = rt.grid().site_count();

  std::vector<double> free(path.u[ks].values().begin(), path.u[ks].values().end());
  S.apply_in_place(free, path.times[kt] - path.times[ks]);

  // Horner-style accumulation of sum_k w_k s_{t - tau_k} Lambda_k.
  std::vector<double> acc(n, 0.0);
  for (std::size_t k = ks; k <= kt; ++k) {
    if (k > ks) S.apply_in_place(acc, path.times[k] - path.times[k - 1]);
    const double left = k > ks ? path.times[k] - path.times[k - 1] : 0.0;
    const double right = k < kt ? path.times[k + 1] - path.times[k] : 0.0;
    const double w = 0.5 * (left + right);
    const auto lam = removal.rates[k].values();
    for (std::size_t x = 0; x < n; ++x) acc[x] += w * lam[x];
  }

  double worst = 0.0;
  const auto u = path.u[kt].values();
  for (std::size_t x = 0; x < n; ++x) worst = std::max(worst, std::abs(u[x] - (free[x] - acc[x])));
  return worst;
}

}  // namespace trimlab
