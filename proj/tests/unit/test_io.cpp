#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trimlab/errors.hpp"
#include "trimlab/io.hpp"
#include "trimlab/meanfield.hpp"

using namespace trimlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "trimlab_test_io";
  fs::create_directories(p);
  return p / name;
}

}  // namespace

TEST_CASE("doubles survive a text round trip") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_label(0.1) == "0.1");
}

TEST_CASE("csv layout") {
  Table t;
  t.columns = {"a", "b", "c"};
  t.add_row({1.5, std::int64_t{2}, std::string("x")});
  CHECK(to_csv(t) == "a,b,c\n1.5,2,x\n");
  CHECK_THROWS_AS(t.add_row({1.0}), Error);
}

TEST_CASE("grid function csv round trip") {
  GridSpec g(0.25, 2, 0.5);
  GridFunction f(g);
  for (SiteIndex x = 0; x < g.site_count(); ++x) f.set(x, 1.0 / (1.0 + static_cast<double>(x)));
  const auto p = scratch("gf.csv");
  write_csv(p, grid_function_table(f));
  const auto h = read_grid_function_csv(p, g);
  for (SiteIndex x = 0; x < g.site_count(); ++x) CHECK(h[x] == f[x]);
  CHECK_THROWS_AS(read_grid_function_csv(p, GridSpec(0.25, 2, 1.0)), Error);
}

TEST_CASE("binary path round trip") {
  const auto rt = build_q_from_b(DriftModel::tanh_well(2.0), MollifierSpec{}, GridSpec(0.2, 1, 2.0));
  GridFunction u0(rt.grid(), 1.0 / static_cast<double>(rt.grid().site_count()));
  SchemeConfig cfg;
  cfg.dt = 1e-3;
  cfg.record_stride = 10;
  const auto sol = solve(rt, u0, 0.1, cfg);
  const auto p = scratch("path.bin");
  write_binary_path(p, sol.path, sol.removal);
  const auto b = read_binary_path(p);
  CHECK(b.version == 1);
  CHECK(b.dim == 1);
  CHECK(b.epsilon == 0.2);
  CHECK(b.half_width == 2.0);
  REQUIRE(b.times.size() == sol.path.size());
  for (std::size_t k = 0; k < b.times.size(); ++k) {
    CHECK(b.times[k] == sol.path.times[k]);
    for (SiteIndex x = 0; x < u0.size(); ++x) {
      CHECK(b.u[k][x] == sol.path.u[k][x]);
      CHECK(b.lambda[k][x] == sol.removal.rates[k][x]);
    }
  }
  std::ifstream in(p, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 8) == "TRIMPATH");
  const auto bad = scratch("bad.bin");
  write_text(bad, "NOTAPATH");
  CHECK_THROWS_AS(read_binary_path(bad), Error);
}

TEST_CASE("path and snapshot tables") {
  GridSpec g(0.5, 1, 1.0);
  ParticleConfiguration c(g, {0, 2, 0, 1, 0});
  const auto t = snapshot_table({Snapshot{0.5, c}});
  CHECK(to_csv(t) == "t,x_1,count\n0.5,-0.5,2\n0.5,0.5,1\n");
}

TEST_CASE("svg output is a single self-contained document") {
  const auto s = svg_line_plot({Series{"a", {1, 2, 3}, {1, 4, 9}}}, {"title", "x", "y", false, true});
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(s.find("href") == std::string::npos);
}
