#include "trimlab/numerics.hpp"

#include <algorithm>
#include <numbers>
#include <utility>

#include "trimlab/errors.hpp"

namespace trimlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "InvalidParameter";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::grid_mismatch: return "GridMismatch";
    case ErrorKind::epsilon_too_large: return "EpsilonTooLarge";
    case ErrorKind::irregular_drift: return "IrregularDrift";
    case ErrorKind::infeasible_mass: return "InfeasibleMass";
    case ErrorKind::active_set_cycle: return "ActiveSetCycle";
    case ErrorKind::horizon_exceeded: return "HorizonExceeded";
    case ErrorKind::rate_overflow: return "RateOverflow";
    case ErrorKind::empty_population: return "EmptyPopulation";
    case ErrorKind::clip_mass_exceeded: return "ClipMassExceeded";
    case ErrorKind::io: return "IoError";
  }
  return "Unknown";
}

GaussLegendre::GaussLegendre(int order) : nodes(order), weights(order) {
  if (order < 1) throw Error(ErrorKind::invalid_parameter, "Gauss-Legendre order must be >= 1");
  const int n = order;
  // Returns (P_n(x), P_n'(x)).
  const auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return std::pair{p1, dp};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

double integrate(const std::function<double(double)>& f, double a, double b, int total_nodes,
                 std::span<const double> breakpoints, int order) {
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a};
  for (double p : breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const GaussLegendre rule(order);
  const int panels_total = std::max(1, total_nodes / order);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(panels_total + cuts.size()) * order);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], hi = cuts[c + 1];
    const int panels =
        std::max(1, static_cast<int>(std::lround(panels_total * (hi - lo) / (b - a))));
    const double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = lo + (p + 0.5) * h;
      for (int k = 0; k < order; ++k)
        terms.push_back(0.5 * h * rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]));
    }
  }
  return exact_sum(terms);
}

void ExactAccumulator::add(double x) {
  std::size_t i = 0;
  for (double y : partials_) {
    if (std::abs(x) < std::abs(y)) std::swap(x, y);
    const double hi = x + y;
    const double lo = y - (hi - x);
    if (lo != 0.0) partials_[i++] = lo;
    x = hi;
  }
  partials_.resize(i);
  partials_.push_back(x);
}

double ExactAccumulator::value() const {
  // Round-half-even correction on the top partials, following msum/fsum.
  if (partials_.empty()) return 0.0;
  std::size_t n = partials_.size();
  double hi = partials_[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials_[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

double exact_sum(std::span<const double> values) {
  ExactAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  std::uint64_t state = seed;
  std::uint64_t mixed = splitmix64(state) ^ (stream_id * 0xd1b54a32d192ed03ULL);
  for (auto& s : s_) s = splitmix64(mixed);
}

std::uint64_t RandomStream::next() noexcept {
  const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace trimlab
