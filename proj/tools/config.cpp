#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace trimlab::tools {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  if (v.empty()) throw ConfigError(key, "expected a number, got an empty value");
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return d;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  if (v.empty()) throw ConfigError(key, "expected an integer, got an empty value");
  char* end = nullptr;
  errno = 0;
  const long long n = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() + v.size() && errno == 0) return n;
  // Allow integral values written as reals, e.g. 1e5.
  const double d = parse_real(key, v);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return static_cast<std::int64_t>(d);
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno), "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno), "empty key");
    if (!section.empty()) key = section + "." + key;
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError(assignment, "override has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

std::string RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "required");
  return it->second;
}

std::string RunConfig::str(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::real(const std::string& key) const { return parse_real(key, str(key)); }

double RunConfig::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

std::int64_t RunConfig::integer(const std::string& key) const { return parse_int(key, str(key)); }

std::int64_t RunConfig::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool RunConfig::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = str(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + str(key) + "'");
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split(str(key), ',')) out.push_back(parse_real(key, part));
  if (out.empty()) throw ConfigError(key, "expected at least one number");
  return out;
}

std::vector<double> RunConfig::reals(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? reals(key) : fallback;
}

std::vector<std::int64_t> RunConfig::integers(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& part : split(str(key), ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_int(key, part));
      continue;
    }
    const auto lo = parse_int(key, trim(part.substr(0, dots)));
    const auto hi = parse_int(key, trim(part.substr(dots + 2)));
    if (hi < lo) throw ConfigError(key, "empty range '" + part + "'");
    if (hi - lo > 10'000'000) throw ConfigError(key, "range '" + part + "' is too long");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw ConfigError(key, "expected at least one integer");
  return out;
}

std::vector<std::int64_t> RunConfig::integers(const std::string& key,
                                              std::vector<std::int64_t> fallback) const {
  return has(key) ? integers(key) : fallback;
}

std::string RunConfig::choice(const std::string& key, const std::vector<std::string>& choices,
                              const std::string& fallback) const {
  const std::string v = str(key, fallback);
  if (std::find(choices.begin(), choices.end(), v) != choices.end()) return v;
  std::string list;
  for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
  throw ConfigError(key, "expected one of {" + list + "}, got '" + v + "'");
}

void RunConfig::reject_unknown(const std::set<std::string>& known) const {
  for (const auto& [k, v] : values_)
    if (!known.count(k)) throw ConfigError(k, "unknown key");
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "epsilon",          "half_width",          "dim",
      "T",                "seeds",               "output",
      "snapshot_times",   "drift",               "drift.scale",
      "drift.a",          "drift.file",          "mollifier.radius",
      "mollifier.nodes",  "initial",             "initial.file",
      "particle.N",       "particle.timing",     "particle.keep_intervals",
      "solver.dt",        "solver.scheme",       "solver.tau_flat",
      "solver.record_stride", "solver.binary",   "metric",
      "metric.bandwidth", "experiment.epsilons", "experiment.populations",
      "experiment.both_timings", "experiment.reference", "experiment.etas",
      "dominate.init",    "coupling.x0",         "coupling.y0",
      "coupling.C",       "coupling.delta",      "stationary.which",
      "stationary.beta",  "stationary.a",        "stationary.w",
      "stationary.v0",    "stationary.check",    "stationary.nodes",
      "verify.pairs",     "verify.kernel_t",     "gate.w1_max",
      "gate.eps_error_max", "gate.coupling_margin", "gate.weak_form_max",
      "plots",
  };
  return keys;
}

}  // namespace trimlab::tools
