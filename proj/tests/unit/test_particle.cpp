#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "trimlab/errors.hpp"
#include "trimlab/operators.hpp"
#include "trimlab/particle.hpp"

using namespace trimlab;

namespace {

RateTable rates(double eps, double L) {
  return build_q_from_b(DriftModel::tanh_well(2.0), MollifierSpec{}, GridSpec(eps, 1, L));
}

}  // namespace

TEST_CASE("argmax tracker agrees with a scan under random updates") {
  GridSpec g(0.5, 2, 3.0);
  RandomStream r(1, 0);
  std::vector<Count> counts(g.site_count(), 0);
  counts[0] = 1;
  ParticleConfiguration cfg(g, counts);
  for (int step = 0; step < 20000; ++step) {
    const SiteIndex x = r.below(g.site_count());
    if (r.uniform() < 0.55 || cfg.count(x) == 0 || cfg.total() == 1) {
      cfg.add(x);
      ++counts[x];
    } else {
      cfg.remove(x);
      --counts[x];
    }
    const auto it = std::max_element(counts.begin(), counts.end());
    REQUIRE(cfg.argmax() == static_cast<SiteIndex>(it - counts.begin()));
    REQUIRE(cfg.max_count() == *it);
    REQUIRE(cfg.argmax() == cfg.brute_force_argmax());
  }
}

TEST_CASE("ties go to the lowest site in the total order") {
  GridSpec g(0.5, 1, 2.0);
  ParticleConfiguration cfg(g, {0, 2, 0, 2, 1, 0, 2, 0, 0});
  CHECK(cfg.argmax() == 1);
  cfg.remove(1);
  CHECK(cfg.argmax() == 3);
}

TEST_CASE("configurations") {
  GridSpec g(0.5, 1, 2.0);
  CHECK_THROWS_AS(ParticleConfiguration(g, std::vector<Count>(9, 0)), Error);
  const auto a = ParticleConfiguration::all_at(g, 4, 10);
  CHECK(a.total() == 10);
  CHECK(a.count(4) == 10);
  GridFunction u(g, std::vector<double>{0.1, 0.1, 0.1, 0.2, 0.0, 0.2, 0.1, 0.1, 0.1});
  const auto q = ParticleConfiguration::from_profile(u, 7);
  CHECK(q.total() == 7);
  for (SiteIndex x = 0; x < 9; ++x) CHECK(std::abs(static_cast<double>(q.count(x)) - 7 * u[x]) < 1.0);
  const auto m = empirical_measure(q);
  CHECK(m.sum() == doctest::Approx(1.0));
}

TEST_CASE("ledger is exact") {
  RemovalLedger led(5, true);
  led.open(2, 0.0);
  led.switch_to(2, 0.1);
  led.switch_to(3, 0.1 + 0.2);
  led.switch_to(1, 0.7);
  led.close(1.0);
  CHECK(led.total_time() == 1.0);
  CHECK(led.switches() == 2);
  CHECK(led.intervals().size() == 3);
  const auto occ = led.occupation_times();
  CHECK(occ[2] == doctest::Approx(0.3));
  CHECK(occ[3] == doctest::Approx(0.4));
  CHECK(occ[1] == doctest::Approx(0.3));
}

TEST_CASE("trimmed runs conserve the population and close the ledger at T") {
  const RateTable rt = rates(0.1, 3.0);
  const auto init = ParticleConfiguration::all_at(rt.grid(), rt.grid().site_count() / 2, 200);
  const std::vector<double> times{0.0, 0.25, 0.5, 0.75};
  for (RemovalTiming timing : {RemovalTiming::pre_birth, RemovalTiming::post_birth}) {
    SimOptions opt;
    opt.timing = timing;
    std::uint64_t seen = 0;
    bool conserved = true, tracked = true;
    opt.observer = [&](const EventInfo& ev, const ParticleConfiguration& c) {
      ++seen;
      conserved = conserved && c.total() == 200;
      if (ev.index % 97 == 0) tracked = tracked && c.argmax() == c.brute_force_argmax();
    };
    const auto run = simulate_trimmed(init, rt, 0.75, SimSeed{3}, times, opt);
    CHECK(conserved);
    CHECK(tracked);
    CHECK(seen == run.stats.candidates);
    CHECK(run.stats.jumps + run.stats.branches + run.stats.rejected == run.stats.candidates);
    CHECK(run.ledger.total_time() == 0.75);
    CHECK(run.ledger.removals().size() == run.stats.branches);
    REQUIRE(run.snapshots.size() == 4);
    CHECK(run.snapshots[0].config.counts()[rt.grid().site_count() / 2] == 200);
    for (const auto& s : run.snapshots) CHECK(s.config.total() == 200);
  }
}

TEST_CASE("same seed, same run; different seed, different run") {
  const RateTable rt = rates(0.1, 3.0);
  const auto init = ParticleConfiguration::all_at(rt.grid(), 30, 100);
  const std::vector<double> t{1.0};
  const auto a = simulate_trimmed(init, rt, 1.0, SimSeed{5}, t);
  const auto b = simulate_trimmed(init, rt, 1.0, SimSeed{5}, t);
  const auto c = simulate_trimmed(init, rt, 1.0, SimSeed{6}, t);
  CHECK(std::ranges::equal(a.snapshots[0].config.counts(), b.snapshots[0].config.counts()));
  CHECK(a.stats.candidates == b.stats.candidates);
  CHECK_FALSE(std::ranges::equal(a.snapshots[0].config.counts(), c.snapshots[0].config.counts()));
}

TEST_CASE("a single particle never moves on a branch") {
  const RateTable rt = rates(0.2, 2.0);
  const auto init = ParticleConfiguration::all_at(rt.grid(), 10, 1);
  for (RemovalTiming timing : {RemovalTiming::pre_birth, RemovalTiming::post_birth}) {
    SimOptions opt;
    opt.timing = timing;
    SiteIndex where = 10;
    bool ok = true;
    opt.observer = [&](const EventInfo& ev, const ParticleConfiguration& c) {
      const SiteIndex now = c.argmax();
      if (ev.kind != EventKind::jump) ok = ok && now == where;
      where = now;
    };
    simulate_trimmed(init, rt, 2.0, SimSeed{9}, {}, opt);
    CHECK(ok);
  }
}

TEST_CASE("a single particle is distributed like the random walk") {
  const RateTable rt = rates(0.25, 1.5);
  const auto& g = rt.grid();
  const double T = 0.4;
  const SiteIndex x0 = 4;
  const Eigen::MatrixXd P = oracle::expm_taylor(T * oracle::generator(rt));
  const int runs = 20000;
  std::vector<double> hist(g.site_count(), 0.0);
  const auto init = ParticleConfiguration::all_at(g, x0, 1);
  const std::vector<double> t{T};
  for (int k = 0; k < runs; ++k) {
    const auto run = simulate_trimmed(init, rt, T, SimSeed{static_cast<std::uint64_t>(k)}, t);
    hist[run.snapshots[0].config.argmax()] += 1.0 / runs;
  }
  for (SiteIndex y = 0; y < g.site_count(); ++y) {
    const double p = P(x0, y);
    CHECK(std::abs(hist[y] - p) <= 5.0 * std::sqrt(p * (1 - p) / runs) + 1e-4);
  }
}

TEST_CASE("coupled pair: domination and untrimmed growth") {
  const RateTable rt = rates(0.1, 3.0);
  const auto init = ParticleConfiguration::all_at(rt.grid(), 30, 50);
  const std::vector<double> t{0.5, 1.0};
  double total = 0.0;
  const int runs = 40;
  for (int k = 0; k < runs; ++k) {
    const auto run = simulate_coupled_pair(init, rt, 1.0, SimSeed{static_cast<std::uint64_t>(k)}, t);
    CHECK(run.domination_ok);
    for (std::size_t s = 0; s < t.size(); ++s) {
      CHECK(run.trimmed[s].config.total() == 50);
      for (SiteIndex x = 0; x < rt.grid().site_count(); ++x)
        CHECK(run.trimmed[s].config.count(x) <= run.untrimmed[s].config.count(x));
    }
    CHECK(run.ledger.total_time() == 1.0);
    total += static_cast<double>(run.untrimmed[1].config.total());
  }
  // Yule process: mean N e^T, variance N e^T (e^T - 1).
  const double mean = 50 * std::exp(1.0), sd = std::sqrt(50 * std::exp(1.0) * (std::exp(1.0) - 1.0) / runs);
  CHECK(std::abs(total / runs - mean) < 4 * sd);
}

TEST_CASE("snapshot times beyond the horizon are rejected") {
  const RateTable rt = rates(0.2, 2.0);
  const auto init = ParticleConfiguration::all_at(rt.grid(), 10, 3);
  const std::vector<double> bad{2.0};
  CHECK_THROWS_AS(simulate_trimmed(init, rt, 1.0, SimSeed{1}, bad), Error);
  const std::vector<double> unsorted{0.5, 0.2};
  CHECK_THROWS_AS(simulate_trimmed(init, rt, 1.0, SimSeed{1}, unsorted), Error);
}
