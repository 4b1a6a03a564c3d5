#include "trimlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "trimlab/errors.hpp"

namespace trimlab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw Error(ErrorKind::invalid_parameter, "table row width differs from the header");
  rows.push_back(std::move(row));
}

namespace {

void append_cell(std::string& out, const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    out += format_double(*d);
  } else if (const auto* i = std::get_if<std::int64_t>(&c)) {
    out += std::to_string(*i);
  } else {
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) {
      out += s;
    } else {
      out += '"';
      for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    }
  }
}

std::vector<std::string> coord_columns(const char* prefix, int d) {
  std::vector<std::string> out;
  for (int a = 1; a <= d; ++a) out.push_back(std::string(prefix) + std::to_string(a));
  return out;
}

void append_position(std::vector<Cell>& row, const GridSpec& g, SiteIndex x) {
  for (int a = 0; a < g.dim(); ++a) row.emplace_back(g.position(x, a));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) out += ',';
    out += t.columns[c];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      append_cell(out, row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error(ErrorKind::io, "write failed: " + path.string());
}

void write_csv(const std::filesystem::path& path, const Table& t) { write_text(path, to_csv(t)); }

Table snapshot_table(const std::vector<Snapshot>& snaps) {
  Table t;
  if (snaps.empty()) {
    t.columns = {"t", "count"};
    return t;
  }
  const GridSpec& g = snaps.front().config.grid();
  t.columns.push_back("t");
  for (auto& c : coord_columns("x_", g.dim())) t.columns.push_back(c);
  t.columns.push_back("count");
  for (const auto& s : snaps) {
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      if (s.config.count(x) == 0) continue;
      std::vector<Cell> row{s.time};
      append_position(row, g, x);
      row.emplace_back(static_cast<std::int64_t>(s.config.count(x)));
      t.add_row(std::move(row));
    }
  }
  return t;
}

Table ledger_table(const RemovalLedger& ledger, const GridSpec& grid) {
  Table t;
  t.columns = coord_columns("x_", grid.dim());
  t.columns.push_back("t_start");
  t.columns.push_back("t_end");
  for (const auto& iv : ledger.intervals()) {
    std::vector<Cell> row;
    append_position(row, grid, iv.site);
    row.emplace_back(iv.t_start);
    row.emplace_back(iv.t_end);
    t.add_row(std::move(row));
  }
  return t;
}

Table density_path_table(const DensityPath& path, const RemovalRatePath& removal) {
  Table t;
  if (path.size() == 0) {
    t.columns = {"t", "u", "lambda"};
    return t;
  }
  const GridSpec& g = path.u.front().grid();
  t.columns.push_back("t");
  for (auto& c : coord_columns("x_", g.dim())) t.columns.push_back(c);
  t.columns.push_back("u");
  t.columns.push_back("lambda");
  for (std::size_t k = 0; k < path.size(); ++k) {
    for (SiteIndex x = 0; x < g.site_count(); ++x) {
      std::vector<Cell> row{path.times[k]};
      append_position(row, g, x);
      row.emplace_back(path.u[k][x]);
      row.emplace_back(k < removal.size() ? removal.rates[k][x] : 0.0);
      t.add_row(std::move(row));
    }
  }
  return t;
}

Table coupled_path_table(const CoupledPairPath& path, const GridSpec& grid) {
  Table t;
  t.columns.push_back("t");
  for (auto& c : coord_columns("X_", grid.dim())) t.columns.push_back(c);
  for (auto& c : coord_columns("Y_", grid.dim())) t.columns.push_back(c);
  t.columns.push_back("shared");
  const auto emit = [&](double time, SiteIndex x, SiteIndex y, std::int64_t shared) {
    std::vector<Cell> row{time};
    append_position(row, grid, x);
    append_position(row, grid, y);
    row.emplace_back(shared);
    t.add_row(std::move(row));
  };
  emit(0.0, path.x0, path.y0, 0);
  for (std::size_t k = 0; k < path.times.size(); ++k)
    emit(path.times[k], path.xs[k], path.ys[k], path.flags[k] == MoveFlag::both ? 1 : 0);
  return t;
}

Table grid_function_table(const GridFunction& f) {
  const GridSpec& g = f.grid();
  Table t;
  t.columns = coord_columns("x_", g.dim());
  t.columns.push_back("u");
  for (SiteIndex x = 0; x < g.site_count(); ++x) {
    std::vector<Cell> row;
    append_position(row, g, x);
    row.emplace_back(f[x]);
    t.add_row(std::move(row));
  }
  return t;
}

GridFunction read_grid_function_csv(const std::filesystem::path& path, const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::io, path.string() + ": empty file");
  const auto header = split_csv_line(line);
  const auto d = static_cast<std::size_t>(grid.dim());
  if (header.size() != d + 1) throw Error(ErrorKind::dimension_mismatch, path.string() + ": expected d + 1 columns");
  std::vector<double> values(grid.site_count(), 0.0);
  std::vector<bool> seen(grid.site_count(), false);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != d + 1)
      throw Error(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    std::vector<double> pos(d);
    try {
      for (std::size_t a = 0; a < d; ++a) pos[a] = std::stod(cells[a]);
      const SiteIndex x = grid.nearest(pos);
      for (std::size_t a = 0; a < d; ++a)
        if (std::abs(grid.position(x, static_cast<int>(a)) - pos[a]) > 1e-6 * grid.epsilon())
          throw Error(ErrorKind::grid_mismatch, path.string() + ":" + std::to_string(lineno) + ": point is not a grid site");
      if (seen[x]) throw Error(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": duplicate site");
      seen[x] = true;
      values[x] = std::stod(cells[d]);
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw Error(ErrorKind::grid_mismatch, path.string() + ": not every site is listed");
  return GridFunction(grid, std::move(values));
}

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'M', 'P', 'A', 'T', 'H'};

template <class T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw Error(ErrorKind::io, "truncated binary path");
  return v;
}

}  // namespace

void write_binary_path(const std::filesystem::path& path, const DensityPath& u,
                       const RemovalRatePath& removal) {
  if (u.size() == 0) throw Error(ErrorKind::invalid_parameter, "empty path");
  if (removal.size() != u.size())
    throw Error(ErrorKind::invalid_parameter, "removal path must share the density mesh");
  const GridSpec& g = u.u.front().grid();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  f.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(f, 1);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(g.dim()));
  put<double>(f, g.epsilon());
  put<double>(f, g.half_width());
  put<std::uint64_t>(f, u.size());
  put<std::uint64_t>(f, g.site_count());
  for (std::size_t k = 0; k < u.size(); ++k) {
    put<double>(f, u.times[k]);
    const auto a = u.u[k].values();
    const auto b = removal.rates[k].values();
    f.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(double)));
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size() * sizeof(double)));
  }
  if (!f) throw Error(ErrorKind::io, "write failed: " + path.string());
}

BinaryPath read_binary_path(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path.string());
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(ErrorKind::io, path.string() + ": not a trimlab binary path");
  BinaryPath out;
  out.version = get<std::uint32_t>(f);
  if (out.version != 1) throw Error(ErrorKind::io, path.string() + ": unsupported version");
  out.dim = get<std::uint32_t>(f);
  out.epsilon = get<double>(f);
  out.half_width = get<double>(f);
  const auto K = get<std::uint64_t>(f);
  const auto S = get<std::uint64_t>(f);
  for (std::uint64_t k = 0; k < K; ++k) {
    out.times.push_back(get<double>(f));
    std::vector<double> a(S), b(S);
    f.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(S * sizeof(double)));
    f.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(S * sizeof(double)));
    if (!f) throw Error(ErrorKind::io, "truncated binary path");
    out.u.push_back(std::move(a));
    out.lambda.push_back(std::move(b));
  }
  return out;
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string svg_line_plot(const std::vector<Series>& series, const PlotSpec& spec) {
  const double W = 720, H = 460, left = 80, right = 180, top = 40, bottom = 60;
  const auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  const auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      const double a = tx(s.x[k]), b = ty(s.y[k]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a);
      x1 = std::max(x1, a);
      y0 = std::min(y0, b);
      y1 = std::max(y1, b);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  const auto px = [&](double a) { return left + (a - x0) / (x1 - x0) * pw; };
  const auto py = [&](double b) { return top + (1.0 - (b - y0) / (y1 - y0)) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape_xml(spec.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double a = x0 + (x1 - x0) * k / 4.0, b = y0 + (y1 - y0) * k / 4.0;
    const std::string xl = spec.log_x ? "1e" + fmt("%.2g", a) : fmt("%.3g", a);
    const std::string yl = spec.log_y ? "1e" + fmt("%.2g", b) : fmt("%.3g", b);
    os << "<text x=\"" << px(a) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << xl << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(b) + 4 << "\" text-anchor=\"end\">" << yl << "</text>\n";
    os << "<line x1=\"" << px(a) << "\" y1=\"" << top << "\" x2=\"" << px(a) << "\" y2=\"" << top + ph
       << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << py(b) << "\" x2=\"" << left + pw << "\" y2=\"" << py(b)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">"
     << escape_xml(spec.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << top + ph / 2 << ")\">" << escape_xml(spec.y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = palette[s % 8];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size() && k < series[s].y.size(); ++k) {
      const double a = tx(series[s].x[k]), b = ty(series[s].y[k]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      os << fmt("%.2f", px(a)) << ',' << fmt("%.2f", py(b)) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 16 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\""
       << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape_xml(series[s].label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace trimlab
