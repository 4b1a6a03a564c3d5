#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "trimlab/coupling.hpp"
#include "trimlab/grid_function.hpp"
#include "trimlab/particle.hpp"
#include "trimlab/paths.hpp"

namespace trimlab {

/// "%.17g", so that a double survives a text round trip and identical runs
/// give identical bytes.
std::string format_double(double v);

/// "%g": short form for labels, column names and file names.
std::string format_label(double v);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

std::string to_csv(const Table& t);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_csv(const std::filesystem::path& path, const Table& t);

/// Columns t, x_1..x_d, count (occupied sites only).
Table snapshot_table(const std::vector<Snapshot>& snaps);
/// Columns x_1..x_d, t_start, t_end.
Table ledger_table(const RemovalLedger& ledger, const GridSpec& grid);
/// Columns t, x_1..x_d, u, lambda. Lambda is the rate in force from t on.
Table density_path_table(const DensityPath& path, const RemovalRatePath& removal);
/// Columns t, X_1..X_d, Y_1..Y_d, shared (1 when both walkers moved).
Table coupled_path_table(const CoupledPairPath& path, const GridSpec& grid);
/// Columns x_1..x_d, u (mass units).
Table grid_function_table(const GridFunction& f);

/// Reads a grid_function_table CSV back onto `grid`. Every site must appear once.
GridFunction read_grid_function_csv(const std::filesystem::path& path, const GridSpec& grid);

/// Binary path format, little-endian:
///   char[8] magic "TRIMPATH", uint32 version (1), uint32 d, double eps,
///   double L, uint64 K (records), uint64 S (sites), then K records of
///   double t, S doubles u, S doubles lambda.
void write_binary_path(const std::filesystem::path& path, const DensityPath& u,
                       const RemovalRatePath& removal);

struct BinaryPath {
  std::uint32_t version = 0;
  std::uint32_t dim = 0;
  double epsilon = 0.0;
  double half_width = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> lambda;
};

BinaryPath read_binary_path(const std::filesystem::path& path);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Self-contained SVG line plot.
std::string svg_line_plot(const std::vector<Series>& series, const PlotSpec& spec);

}  // namespace trimlab
