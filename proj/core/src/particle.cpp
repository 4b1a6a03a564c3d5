#include "trimlab/particle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "trimlab/errors.hpp"

namespace trimlab {

ArgmaxTracker::ArgmaxTracker(std::size_t site_count, std::span<const Count> counts)
    : words_((site_count + 63) / 64) {
  for (SiteIndex x = 0; x < counts.size(); ++x) {
    const Count c = counts[x];
    if (c <= 0) continue;
    insert(static_cast<std::size_t>(c), x);
    max_ = std::max(max_, c);
  }
}

void ArgmaxTracker::insert(std::size_t level, SiteIndex x) {
  if (buckets_.size() <= level) buckets_.resize(level + 1);
  Bucket& b = buckets_[level];
  if (b.bits.empty()) b.bits.assign(words_, 0);
  b.bits[x >> 6] |= std::uint64_t{1} << (x & 63);
  ++b.size;
}

void ArgmaxTracker::erase(std::size_t level, SiteIndex x) {
  Bucket& b = buckets_[level];
  b.bits[x >> 6] &= ~(std::uint64_t{1} << (x & 63));
  --b.size;
}

void ArgmaxTracker::increment(SiteIndex x, Count old_level) {
  if (old_level > 0) erase(static_cast<std::size_t>(old_level), x);
  insert(static_cast<std::size_t>(old_level + 1), x);
  max_ = std::max(max_, old_level + 1);
}

void ArgmaxTracker::decrement(SiteIndex x, Count old_level) {
  erase(static_cast<std::size_t>(old_level), x);
  if (old_level > 1) insert(static_cast<std::size_t>(old_level - 1), x);
  while (max_ > 0 && buckets_[static_cast<std::size_t>(max_)].size == 0) --max_;
}

SiteIndex ArgmaxTracker::argmax() const {
  if (max_ == 0) throw Error(ErrorKind::empty_population, "argmax of an empty configuration");
  const auto& bits = buckets_[static_cast<std::size_t>(max_)].bits;
  for (std::size_t w = 0; w < bits.size(); ++w)
    if (bits[w] != 0) return w * 64 + static_cast<SiteIndex>(std::countr_zero(bits[w]));
  throw Error(ErrorKind::empty_population, "argmax tracker is inconsistent");
}

ParticleConfiguration::ParticleConfiguration(const GridSpec& grid, std::vector<Count> counts)
    : grid_(grid), counts_(std::move(counts)) {
  if (counts_.size() != grid_.site_count())
    throw Error(ErrorKind::grid_mismatch, "configuration size differs from the grid");
  for (Count c : counts_) {
    if (c < 0) throw Error(ErrorKind::invalid_parameter, "negative occupation count");
    total_ += c;
  }
  if (total_ == 0) throw Error(ErrorKind::empty_population, "configuration holds no particles");
  tracker_ = ArgmaxTracker(counts_.size(), counts_);
}

ParticleConfiguration ParticleConfiguration::all_at(const GridSpec& grid, SiteIndex x, Count n) {
  if (x >= grid.site_count()) throw Error(ErrorKind::invalid_parameter, "site outside the grid");
  std::vector<Count> c(grid.site_count(), 0);
  c[x] = n;
  return ParticleConfiguration(grid, std::move(c));
}

ParticleConfiguration ParticleConfiguration::from_profile(const GridFunction& u, Count n) {
  if (n <= 0) throw Error(ErrorKind::invalid_parameter, "population size must be positive");
  const std::size_t S = u.size();
  std::vector<Count> c(S);
  std::vector<double> frac(S);
  Count placed = 0;
  for (SiteIndex x = 0; x < S; ++x) {
    if (!(u[x] >= 0.0)) throw Error(ErrorKind::invalid_parameter, "profile must be nonnegative");
    const double target = static_cast<double>(n) * u[x];
    const double whole = std::floor(target);
    c[x] = static_cast<Count>(whole);
    frac[x] = target - whole;
    placed += c[x];
  }
  if (std::abs(u.sum() - 1.0) > 1e-9)
    throw Error(ErrorKind::invalid_parameter, "profile must have unit mass");
  const Count deficit = n - placed;
  if (deficit < 0 || static_cast<std::size_t>(deficit) > S)
    throw Error(ErrorKind::invalid_parameter, "profile quantization failed");
  std::vector<SiteIndex> order(S);
  std::iota(order.begin(), order.end(), SiteIndex{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](SiteIndex a, SiteIndex b) { return frac[a] > frac[b]; });
  for (Count k = 0; k < deficit; ++k) ++c[order[static_cast<std::size_t>(k)]];
  return ParticleConfiguration(u.grid(), std::move(c));
}

SiteIndex ParticleConfiguration::brute_force_argmax() const {
  SiteIndex best = 0;
  for (SiteIndex x = 1; x < counts_.size(); ++x)
    if (counts_[x] > counts_[best]) best = x;
  return best;
}

void ParticleConfiguration::add(SiteIndex x) {
  tracker_.increment(x, counts_[x]);
  ++counts_[x];
  ++total_;
}

void ParticleConfiguration::remove(SiteIndex x) {
  if (counts_[x] == 0) throw Error(ErrorKind::empty_population, "removal from an empty site");
  tracker_.decrement(x, counts_[x]);
  --counts_[x];
  --total_;
}

GridFunction empirical_measure(const ParticleConfiguration& cfg) {
  GridFunction w(cfg.grid());
  auto v = w.mutable_values();
  const auto n = static_cast<double>(cfg.total());
  for (SiteIndex x = 0; x < v.size(); ++x) v[x] = static_cast<double>(cfg.count(x)) / n;
  return w;
}

RemovalLedger::RemovalLedger(std::size_t site_count, bool keep_intervals)
    : keep_intervals_(keep_intervals), occupation_(site_count) {}

void RemovalLedger::open(SiteIndex site, double t) {
  current_ = site;
  since_ = t;
  open_ = true;
}

void RemovalLedger::credit(SiteIndex site, double t0, double t1) {
  // t1 - t0 split into its rounded value and the rounding error (TwoSum).
  const double s = t1 - t0;
  const double bb = s - t1;
  const double err = (t1 - (s - bb)) + (-t0 - bb);
  occupation_[site].add(s);
  occupation_[site].add(err);
  total_.add(s);
  total_.add(err);
  if (keep_intervals_) intervals_.push_back({site, t0, t1});
}

void RemovalLedger::switch_to(SiteIndex site, double t) {
  if (!open_) throw Error(ErrorKind::invalid_parameter, "ledger is not open");
  if (site == current_) return;
  credit(current_, since_, t);
  current_ = site;
  since_ = t;
  ++switches_;
}

void RemovalLedger::close(double t) {
  if (!open_) throw Error(ErrorKind::invalid_parameter, "ledger is not open");
  credit(current_, since_, t);
  open_ = false;
}

std::vector<double> RemovalLedger::occupation_times() const {
  std::vector<double> out(occupation_.size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = occupation_[x].value();
  return out;
}

double RemovalLedger::total_time() const { return total_.value(); }

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0), n_(n) {
    top_ = 1;
    while (top_ * 2 <= n_) top_ *= 2;
  }

  void add(std::size_t i, Count delta) {
    total_ += delta;
    for (++i; i <= n_; i += i & (~i + 1)) tree_[i] += delta;
  }

  Count total() const noexcept { return total_; }

  /// Index x with prefix(x) <= k < prefix(x + 1), and k - prefix(x).
  std::pair<std::size_t, Count> find(Count k) const {
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      if (pos + step <= n_ && tree_[pos + step] <= k) {
        pos += step;
        k -= tree_[pos];
      }
    }
    return {pos, k};
  }

 private:
  std::vector<Count> tree_;
  std::size_t n_;
  std::size_t top_;
  Count total_ = 0;
};

template <bool Coupled>
class Engine {
 public:
  Engine(const ParticleConfiguration& init, const RateTable& rt, SimSeed seed,
         const SimOptions& opt)
      : rt_(rt),
        g_(rt.grid()),
        trimmed_(init),
        weights_(g_.site_count(), 0),
        fenwick_(g_.site_count()),
        time_(seed.time_stream()),
        slot_(seed.slot_stream()),
        mark_(seed.mark_stream()),
        opt_(opt),
        ledger_(g_.site_count(), opt.keep_intervals) {
    require_same_grid(g_, init.grid(), "simulate");
    if constexpr (Coupled) bar_.assign(init.counts().begin(), init.counts().end());
    for (SiteIndex x = 0; x < g_.site_count(); ++x) {
      slot_rate_ = std::max(slot_rate_, rt.r_out(x) + 1.0);
      refresh(x);
    }
    if (!std::isfinite(slot_rate_)) throw Error(ErrorKind::rate_overflow, "non-finite jump rate");
    stats_.slot_rate = slot_rate_;
  }

  void run(double T, std::span<const double> snapshot_times) {
    if (!(T >= 0.0)) throw Error(ErrorKind::invalid_parameter, "horizon must be nonnegative");
    for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
      const double s = snapshot_times[k];
      if (!(s >= 0.0 && s <= T))
        throw Error(ErrorKind::horizon_exceeded, "snapshot time outside [0, T]");
      if (k > 0 && s < snapshot_times[k - 1])
        throw Error(ErrorKind::invalid_parameter, "snapshot times must be nondecreasing");
    }
    ledger_.open(trimmed_.argmax(), 0.0);
    std::size_t next = 0;
    double t = 0.0;
    while (true) {
      const Count W = fenwick_.total();
      if (W <= 0) throw Error(ErrorKind::empty_population, "no particles left");
      const double R = static_cast<double>(W) * slot_rate_;
      if (!std::isfinite(R)) throw Error(ErrorKind::rate_overflow, "total event rate overflowed");
      t += time_.exponential(R);
      if (t > T) break;
      while (next < snapshot_times.size() && snapshot_times[next] < t) snapshot(snapshot_times[next++]);
      step(t, W);
    }
    while (next < snapshot_times.size()) snapshot(snapshot_times[next++]);
    ledger_.close(T);
  }

  std::vector<Snapshot> trimmed_snaps;
  std::vector<Snapshot> bar_snaps;

  RemovalLedger& ledger() { return ledger_; }
  const EngineStats& stats() const { return stats_; }
  bool domination_ok() const { return domination_ok_; }
  double first_violation() const { return first_violation_; }

 private:
  Count weight(SiteIndex x) const {
    if constexpr (Coupled) return std::max(trimmed_.count(x), bar_[x]);
    return trimmed_.count(x);
  }

  void refresh(SiteIndex x) {
    const Count w = weight(x);
    if (w != weights_[x]) {
      fenwick_.add(x, w - weights_[x]);
      weights_[x] = w;
    }
  }

  void check(SiteIndex x, double t) {
    if constexpr (Coupled) {
      if (trimmed_.count(x) > bar_[x] && domination_ok_) {
        domination_ok_ = false;
        first_violation_ = t;
      }
    }
  }

  void snapshot(double s) {
    trimmed_snaps.push_back({s, trimmed_});
    if constexpr (Coupled) bar_snaps.push_back({s, ParticleConfiguration(g_, bar_)});
  }

  void step(double t, Count W) {
    EventInfo ev;
    ev.index = stats_.candidates++;
    ev.time = t;
    const auto [x, j] = fenwick_.find(static_cast<Count>(slot_.below(static_cast<std::uint64_t>(W))));
    ev.site = x;
    const double sigma = mark_.uniform() * slot_rate_;
    if (sigma < 1.0) {
      ev.kind = EventKind::branch;
    } else {
      const double s = sigma - 1.0;
      double cum = 0.0;
      for (int i = 0; i < rt_.directions(); ++i) {
        if (g_.neighbor_or_none(x, i) < 0) continue;
        cum += rt_.r(x, i);
        if (s < cum) {
          ev.kind = EventKind::jump;
          ev.direction = i;
          break;
        }
      }
    }

    ev.fired_trimmed = ev.kind != EventKind::rejected && j < trimmed_.count(x);
    if constexpr (Coupled) ev.fired_untrimmed = ev.kind != EventKind::rejected && j < bar_[x];

    if (ev.kind == EventKind::rejected) {
      ++stats_.rejected;
    } else if (ev.kind == EventKind::branch) {
      if (ev.fired_trimmed) {
        ++stats_.branches;
        SiteIndex target;
        if (opt_.timing == RemovalTiming::pre_birth) {
          target = trimmed_.argmax();
          if (target != x) {
            trimmed_.add(x);
            trimmed_.remove(target);
          }
        } else {
          trimmed_.add(x);
          target = trimmed_.argmax();
          trimmed_.remove(target);
        }
        ledger_.record_removal(target, t);
        refresh(target);
        check(target, t);
      }
      if constexpr (Coupled) {
        if (ev.fired_untrimmed) ++bar_[x];
      }
      refresh(x);
      check(x, t);
    } else {
      const auto y = static_cast<SiteIndex>(g_.neighbor_or_none(x, ev.direction));
      if (ev.fired_trimmed) {
        ++stats_.jumps;
        trimmed_.remove(x);
        trimmed_.add(y);
      }
      if constexpr (Coupled) {
        if (ev.fired_untrimmed) {
          --bar_[x];
          ++bar_[y];
        }
      }
      refresh(x);
      refresh(y);
      check(x, t);
      check(y, t);
    }
    if (ev.fired_trimmed) ledger_.switch_to(trimmed_.argmax(), t);
    if (opt_.observer) opt_.observer(ev, trimmed_);
  }

  const RateTable& rt_;
  const GridSpec& g_;
  ParticleConfiguration trimmed_;
  std::vector<Count> bar_;
  std::vector<Count> weights_;
  Fenwick fenwick_;
  RandomStream time_, slot_, mark_;
  const SimOptions& opt_;
  RemovalLedger ledger_;
  EngineStats stats_;
  double slot_rate_ = 0.0;
  bool domination_ok_ = true;
  double first_violation_ = -1.0;
};

}  // namespace

TrimmedRun simulate_trimmed(const ParticleConfiguration& init, const RateTable& rt, double T,
                            SimSeed seed, std::span<const double> snapshot_times,
                            const SimOptions& opt) {
  Engine<false> e(init, rt, seed, opt);
  e.run(T, snapshot_times);
  return {std::move(e.trimmed_snaps), std::move(e.ledger()), e.stats()};
}

CoupledRun simulate_coupled_pair(const ParticleConfiguration& init, const RateTable& rt, double T,
                                 SimSeed seed, std::span<const double> snapshot_times,
                                 const SimOptions& opt) {
  Engine<true> e(init, rt, seed, opt);
  e.run(T, snapshot_times);
  CoupledRun out;
  out.trimmed = std::move(e.trimmed_snaps);
  out.untrimmed = std::move(e.bar_snaps);
  out.ledger = std::move(e.ledger());
  out.stats = e.stats();
  out.domination_ok = e.domination_ok();
  out.first_violation = e.first_violation();
  return out;
}

}  // namespace trimlab
