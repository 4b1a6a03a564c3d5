#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "trimlab/drift.hpp"
#include "trimlab/grid_function.hpp"
#include "trimlab/numerics.hpp"

namespace trimlab {

using Count = std::int64_t;

/// Occupancy buckets: for every level, the set of sites at that level as a
/// bitset over site indices (index order is the total order on sites).
/// argmax* is the lowest set bit of the top bucket.
class ArgmaxTracker {
 public:
  ArgmaxTracker() = default;
  ArgmaxTracker(std::size_t site_count, std::span<const Count> counts);

  /// Site x moved from `old_level` to old_level + 1.
  void increment(SiteIndex x, Count old_level);
  /// Site x moved from `old_level` to old_level - 1.
  void decrement(SiteIndex x, Count old_level);

  Count max_level() const noexcept { return max_; }
  SiteIndex argmax() const;

 private:
  struct Bucket {
    std::vector<std::uint64_t> bits;
    std::size_t size = 0;
  };
  void insert(std::size_t level, SiteIndex x);
  void erase(std::size_t level, SiteIndex x);

  std::size_t words_ = 0;
  std::vector<Bucket> buckets_;  // buckets_[k]: sites at level k >= 1
  Count max_ = 0;
};

class ParticleConfiguration {
 public:
  ParticleConfiguration(const GridSpec& grid, std::vector<Count> counts);

  static ParticleConfiguration all_at(const GridSpec& grid, SiteIndex x, Count n);
  /// Largest-remainder quantization of n u (ties to the lower index).
  static ParticleConfiguration from_profile(const GridFunction& u, Count n);

  const GridSpec& grid() const noexcept { return grid_; }
  Count count(SiteIndex x) const noexcept { return counts_[x]; }
  std::span<const Count> counts() const noexcept { return counts_; }
  Count total() const noexcept { return total_; }

  SiteIndex argmax() const { return tracker_.argmax(); }
  Count max_count() const noexcept { return tracker_.max_level(); }
  /// Linear scan with ties broken by the total order.
  SiteIndex brute_force_argmax() const;

  void add(SiteIndex x);
  void remove(SiteIndex x);

 private:
  GridSpec grid_;
  std::vector<Count> counts_;
  Count total_ = 0;
  ArgmaxTracker tracker_;
};

/// Weights counts / N. Each weight is a correctly rounded quotient.
GridFunction empirical_measure(const ParticleConfiguration& cfg);

struct LedgerInterval {
  SiteIndex site = 0;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct RemovalEvent {
  SiteIndex site = 0;
  double time = 0.0;
};

/// The argmax* site as a function of time, and the removal events. The
/// occupation time per site is kept exactly (error-free differences fed to
/// an exact accumulator), so the total equals T after rounding.
class RemovalLedger {
 public:
  RemovalLedger() = default;
  RemovalLedger(std::size_t site_count, bool keep_intervals);

  void open(SiteIndex site, double t);
  /// No-op when `site` already holds the argmax.
  void switch_to(SiteIndex site, double t);
  void close(double t);
  void record_removal(SiteIndex site, double t) { removals_.push_back({site, t}); }

  bool keeps_intervals() const noexcept { return keep_intervals_; }
  const std::vector<LedgerInterval>& intervals() const noexcept { return intervals_; }
  const std::vector<RemovalEvent>& removals() const noexcept { return removals_; }
  std::size_t switches() const noexcept { return switches_; }

  /// Time spent by argmax* at each site.
  std::vector<double> occupation_times() const;
  /// beta^N of the whole box over [0, T].
  double total_time() const;

 private:
  void credit(SiteIndex site, double t0, double t1);

  bool keep_intervals_ = true;
  std::vector<LedgerInterval> intervals_;
  std::vector<RemovalEvent> removals_;
  std::vector<ExactAccumulator> occupation_;
  ExactAccumulator total_;
  SiteIndex current_ = 0;
  double since_ = 0.0;
  bool open_ = false;
  std::size_t switches_ = 0;
};

/// Stream ids derived from the seed: waiting times, particle slots, marks.
struct SimSeed {
  std::uint64_t seed = 0;

  RandomStream time_stream() const noexcept { return {seed, 0}; }
  RandomStream slot_stream() const noexcept { return {seed, 1}; }
  RandomStream mark_stream() const noexcept { return {seed, 2}; }
};

/// pre_birth: the removed particle is taken from argmax* of the configuration
/// just before the branch. post_birth: the newborn is counted first.
enum class RemovalTiming { pre_birth, post_birth };

enum class EventKind { jump, branch, rejected };

struct EventInfo {
  std::uint64_t index = 0;  // counts every candidate, rejected ones included
  double time = 0.0;
  EventKind kind = EventKind::rejected;
  SiteIndex site = 0;
  int direction = -1;
  bool fired_trimmed = false;
  bool fired_untrimmed = false;
};

struct SimOptions {
  RemovalTiming timing = RemovalTiming::pre_birth;
  bool keep_intervals = true;
  /// Called after every candidate event with the trimmed configuration.
  std::function<void(const EventInfo&, const ParticleConfiguration&)> observer;
};

struct EngineStats {
  std::uint64_t candidates = 0;
  std::uint64_t jumps = 0;     // trimmed process
  std::uint64_t branches = 0;  // trimmed process
  std::uint64_t rejected = 0;
  double slot_rate = 0.0;      // dominating rate per particle slot
};

struct Snapshot {
  double time = 0.0;
  ParticleConfiguration config;
};

struct TrimmedRun {
  std::vector<Snapshot> snapshots;
  RemovalLedger ledger;
  EngineStats stats;
};

/// Exact event-driven simulation on [0, T]. Candidate events arrive at rate
/// (particle slots) x R, R = max_x (r_out(x) + 1); each picks a uniform slot
/// and a uniform mark in [0, R) that selects a branch (mark < 1), a direction
/// (cumulative r_i over allowed i), or nothing. Snapshot times must lie in [0, T].
TrimmedRun simulate_trimmed(const ParticleConfiguration& init, const RateTable& rt, double T,
                            SimSeed seed, std::span<const double> snapshot_times,
                            const SimOptions& opt = {});

struct CoupledRun {
  std::vector<Snapshot> trimmed;
  std::vector<Snapshot> untrimmed;
  RemovalLedger ledger;
  EngineStats stats;
  bool domination_ok = true;
  double first_violation = -1.0;
};

/// Trimmed and untrimmed processes driven by one candidate stream. Slots run
/// over max(c, c-bar) particles per site; slot j at x fires in a process iff
/// j is below that process's count at x.
CoupledRun simulate_coupled_pair(const ParticleConfiguration& init, const RateTable& rt, double T,
                                 SimSeed seed, std::span<const double> snapshot_times,
                                 const SimOptions& opt = {});

}  // namespace trimlab
