#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "manifest.hpp"

using namespace trimlab::tools;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int s = run_cli(args, out, err);
  return {s, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "trimlab_test_cli" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config text") {
  const auto c = RunConfig::parse(
      "# comment\n"
      "epsilon = 0.1   # trailing\n"
      "[particle]\n"
      "N = 1e4\n"
      "[experiment]\n"
      "epsilons = 0.2, 0.1\n"
      "seeds_unused = 1\n");
  CHECK(c.real("epsilon") == 0.1);
  CHECK(c.integer("particle.N") == 10000);
  CHECK(c.reals("experiment.epsilons") == std::vector<double>{0.2, 0.1});
  CHECK_THROWS_AS(c.reject_unknown(known_keys()), ConfigError);
  CHECK_THROWS_WITH_AS(c.real("T"), "T: required", ConfigError);
  CHECK(c.real("T", 2.0) == 2.0);
  auto d = RunConfig::parse("seeds = 1..3, 7\nflag = yes\nx = abc\n");
  CHECK(d.integers("seeds") == std::vector<std::int64_t>{1, 2, 3, 7});
  CHECK(d.boolean("flag", false));
  CHECK_THROWS_AS(d.real("x"), ConfigError);
  CHECK_THROWS_AS(d.choice("x", {"a", "b"}, "a"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("no equals sign\n"), ConfigError);
  d.apply_override("x = 2");
  CHECK(d.real("x") == 2.0);
}

TEST_CASE("git blob hashes") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("manifest hash changes iff the config does") {
  auto a = RunConfig::parse("epsilon = 0.1\nT = 1\n");
  auto b = RunConfig::parse("T = 1\nepsilon = 0.1\n");
  auto c = RunConfig::parse("epsilon = 0.1\nT = 2\n");
  const Manifest ma("solve", a, {}), mb("solve", b, {}), mc("solve", c, {}), md("simulate", a, {});
  CHECK(ma.config_hash() == mb.config_hash());
  CHECK(ma.config_hash() != mc.config_hash());
  CHECK(ma.config_hash() != md.config_hash());
  const auto j = nlohmann::json::parse(ma.json());
  for (const char* k : {"config", "seeds", "versions", "hashes", "gates"}) CHECK(j.contains(k));
}

TEST_CASE("configuration errors exit with status 2") {
  auto r = run({"verify", "--set", "half_width=2"});
  CHECK(r.status == 2);
  CHECK(r.err.find("epsilon: required") != std::string::npos);
  r = run({"solve", "--set", "epsilon=0.1", "--set", "nonsense=1", "-o", scratch("x").string()});
  CHECK(r.status == 2);
  CHECK(r.err.find("nonsense: unknown key") != std::string::npos);
  r = run({"solve", "--set", "epsilon=0.1", "--set", "solver.dt=0.1", "-o", scratch("x").string()});
  CHECK(r.status == 2);
  CHECK(r.err.find("solver.dt") != std::string::npos);
  r = run({"simulate", "--set", "epsilon=0.1", "--set", "half_width=1.05"});
  CHECK(r.status == 2);
  CHECK(r.err.find("half_width") != std::string::npos);
  r = run({"simulate", "--set", "epsilon=0.1", "--set", "drift=sign_well"});
  CHECK(r.status == 2);
  r = run({"frobnicate"});
  CHECK(r.status == 2);
  r = run({"verify", "--config", "/nonexistent/file.cfg"});
  CHECK(r.status == 2);
}

TEST_CASE("verify passes on a small grid and writes a manifest") {
  const auto out = scratch("verify");
  const auto r = run({"verify", "--set", "epsilon=0.5", "--set", "drift=zero", "--set", "half_width=2", "-o",
                      out.string()});
  CHECK(r.status == 0);
  const auto j = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(j["subcommand"] == "verify");
  CHECK(j["hashes"]["artifacts"].contains("verify.csv"));
  CHECK(j["hashes"]["artifacts"]["verify.csv"] == git_blob_sha1(slurp(out / "verify.csv")));
  for (const auto& g : j["gates"]) CHECK(g["pass"] == true);
}

TEST_CASE("stationary: the printed beta fails the mass gate") {
  auto r = run({"stationary", "--which", "example1", "--check", "weak-form", "-o", scratch("st1").string()});
  CHECK(r.status == 0);
  r = run({"stationary", "--which", "example1", "--check", "weak-form", "--beta", "printed", "-o",
           scratch("st2").string()});
  CHECK(r.status == 1);
  CHECK(r.out.find("0.692") != std::string::npos);
  CHECK(r.out.find("gate failed: beta_mass") != std::string::npos);
  for (const char* w : {"example2_flat", "example2_sharp", "example2_critical"})
    CHECK(run({"stationary", "--which", w, "-o", scratch(w).string()}).status == 0);
}

TEST_CASE("simulate and solve are byte-reproducible") {
  const std::vector<std::string> sim{"simulate", "--set", "epsilon=0.2", "--set", "half_width=3",
                                     "--set",    "particle.N=300", "--set", "seeds=4", "--set", "snapshot_times=0.5,1"};
  const auto da = scratch("sim_a"), db = scratch("sim_b");
  auto a = sim, b = sim;
  a.insert(a.end(), {"-o", da.string()});
  b.insert(b.end(), {"-o", db.string()});
  REQUIRE(run(a).status == 0);
  REQUIRE(run(b).status == 0);
  for (const char* f : {"snapshots.csv", "ledger.csv"}) CHECK(slurp(da / f) == slurp(db / f));

  const auto out = scratch("solve");
  const auto r = run({"solve", "--set", "epsilon=0.2", "--set", "half_width=3", "--set", "solver.dt=1e-3", "-o",
                      out.string()});
  CHECK(r.status == 0);
  CHECK(fs::exists(out / "path.csv"));
  CHECK(fs::exists(out / "path.bin"));
  CHECK(fs::exists(out / "profile.svg"));
}
