#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace trimlab {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int order);
};

/// Composite Gauss-Legendre integration of `f` over [a, b].
///
/// The interval is cut at every breakpoint that falls strictly inside it, so
/// kinks and jumps of the integrand never sit under a node. `total_nodes` is
/// spread over the pieces proportionally to their length (at least one panel
/// per piece).
double integrate(const std::function<double(double)>& f, double a, double b,
                 int total_nodes, std::span<const double> breakpoints = {},
                 int order = 8);

/// Correctly rounded sum of `values` (Shewchuk partials, as in Python's fsum).
double exact_sum(std::span<const double> values);

/// Accumulator form of exact_sum for streaming use.
class ExactAccumulator {
 public:
  void add(double x);
  double value() const;

 private:
  std::vector<double> partials_;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// xoshiro256** stream. Seeded by hashing (seed, stream id) through splitmix64
/// so that every event category draws from an independent, reproducible stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform integer on [0, n), n > 0 (Lemire's nearly-divisionless method).
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Exponential with the given rate.
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

 private:
  std::uint64_t s_[4];
};

}  // namespace trimlab
