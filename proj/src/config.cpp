#include "qstab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include <json.hpp>

namespace qstab::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.find_first_of(".eE") != std::string::npos) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

Value parse_scalar(const std::string& raw, int line_no) {
  const std::string s = trim(raw);
  if (s.empty()) throw error("config: empty value at line " + std::to_string(line_no));
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw error("config: unterminated string at line " + std::to_string(line_no));
    return s.substr(1, s.size() - 2);
  }
  std::int64_t i;
  if (parse_int(s, i)) return i;
  double d;
  if (parse_double(s, d)) return d;
  throw error("config: cannot parse value '" + s + "' at line " + std::to_string(line_no));
}

Value parse_array(const std::string& body, int line_no) {
  std::vector<std::string> parts;
  std::string cur;
  bool quoted = false;
  for (char c : body) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) parts.push_back(cur);

  std::vector<double> nums;
  std::vector<std::string> strs;
  for (const std::string& part : parts) {
    Value v = parse_scalar(part, line_no);
    if (std::holds_alternative<double>(v)) {
      nums.push_back(std::get<double>(v));
    } else if (std::holds_alternative<std::int64_t>(v)) {
      nums.push_back(static_cast<double>(std::get<std::int64_t>(v)));
    } else if (std::holds_alternative<std::string>(v)) {
      strs.push_back(std::get<std::string>(v));
    } else {
      throw error("config: unsupported array element at line " + std::to_string(line_no));
    }
  }
  if (!strs.empty() && !nums.empty())
    throw error("config: mixed array types at line " + std::to_string(line_no));
  if (!strs.empty()) return strs;
  return nums;
}

}  // namespace

Table parse_toml(std::istream& in) {
  Table t;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw error("config: malformed section header at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw error("config: empty section name at line " + std::to_string(line_no));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw error("config: expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw error("config: empty key at line " + std::to_string(line_no));
    const std::string full = section.empty() ? key : section + "." + key;
    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']')
        throw error("config: unterminated array at line " + std::to_string(line_no));
      t.set(full, parse_array(val.substr(1, val.size() - 2), line_no));
    } else {
      t.set(full, parse_scalar(val, line_no));
    }
  }
  return t;
}

namespace {

void flatten_json(const nlohmann::json& j, const std::string& prefix, Table& t) {
  for (const auto& [key, val] : j.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (val.is_object()) {
      flatten_json(val, full, t);
    } else if (val.is_boolean()) {
      t.set(full, val.get<bool>());
    } else if (val.is_number_integer()) {
      t.set(full, val.get<std::int64_t>());
    } else if (val.is_number_float()) {
      t.set(full, val.get<double>());
    } else if (val.is_string()) {
      t.set(full, val.get<std::string>());
    } else if (val.is_array()) {
      if (!val.empty() && val.front().is_string()) {
        t.set(full, val.get<std::vector<std::string>>());
      } else {
        t.set(full, val.get<std::vector<double>>());
      }
    } else {
      throw error("config: unsupported JSON value at " + full);
    }
  }
}

}  // namespace

Table parse_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw error("config: top-level JSON value must be an object");
  Table t;
  flatten_json(j, "", t);
  return t;
}

Table load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("config: cannot open " + path);
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  Table t = json ? parse_json(in) : parse_toml(in);
  if (t.get_int("version", 0) != 1)
    throw error("config: missing or unsupported schema version (need version = 1)");
  return t;
}

const Value& Table::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw error("config: missing key '" + key + "'");
  return it->second;
}

bool Table::get_bool(const std::string& key) const {
  const Value& v = at(key);
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  throw error("config: key '" + key + "' is not a boolean");
}

std::int64_t Table::get_int(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw error("config: key '" + key + "' is not an integer");
}

double Table::get_double(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw error("config: key '" + key + "' is not a number");
}

std::string Table::get_string(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw error("config: key '" + key + "' is not a string");
}

std::vector<double> Table::get_doubles(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  if (const auto* d = std::get_if<double>(&v)) return {*d};
  if (const auto* i = std::get_if<std::int64_t>(&v)) return {static_cast<double>(*i)};
  throw error("config: key '" + key + "' is not a numeric array");
}

bool Table::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}
std::int64_t Table::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}
double Table::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
std::string Table::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

ARUncertainty read_plant(const Table& t) {
  ARUncertainty u;
  u.a_star = t.get_doubles("plant.a_star");
  u.eps = t.has("plant.eps") ? t.get_doubles("plant.eps")
                             : std::vector<double>(u.a_star.size(), 0.0);
  u.b_star = t.get_double("plant.b_star", 1.0);
  u.delta = t.get_double("plant.delta", 0.0);
  if (t.has("plant.order") &&
      t.get_int("plant.order") != static_cast<std::int64_t>(u.a_star.size()))
    throw error("config: plant.order disagrees with length of plant.a_star");
  try {
    u.validate();
  } catch (const std::invalid_argument& e) {
    throw error(std::string("config: ") + e.what());
  }
  return u;
}

ScalarUncertainty read_scalar_uncertainty(const Table& t) {
  const ARUncertainty u = read_plant(t);
  if (u.order() != 1) throw error("config: scalar scenario requires plant order 1");
  return u.scalar();
}

Quantizer read_quantizer(const Table& t, const ARUncertainty& u) {
  if (t.has("quantizer.boundaries")) {
    return Quantizer(static_cast<int>(t.get_int("quantizer.n_cells")),
                     t.get_doubles("quantizer.boundaries"));
  }
  const int n_cells = static_cast<int>(t.get_int("quantizer.n_cells", 8));
  const std::string kind =
      t.get_string("quantizer.kind", u.order() == 1 ? "optimal" : "uniform");
  try {
    if (kind == "uniform") return Quantizer::uniform(n_cells);
    if (kind == "optimal") {
      if (u.order() != 1)
        throw error("config: quantizer.kind = \"optimal\" needs a scalar plant");
      return Quantizer::optimal(n_cells, u.scalar());
    }
  } catch (const std::invalid_argument& e) {
    throw error(std::string("config: ") + e.what());
  }
  throw error("config: unknown quantizer.kind '" + kind + "'");
}

ExperimentConfig read_experiment(const Table& t) {
  ExperimentConfig cfg;
  cfg.loop.uncertainty = read_plant(t);
  cfg.loop.quantizer = read_quantizer(t, cfg.loop.uncertainty);
  const int n = cfg.loop.uncertainty.order();

  try {
    cfg.loop.policy =
        perturbation_mode_from_string(t.get_string("plant.policy", "uniform-random"));
  } catch (const std::invalid_argument& e) {
    throw error(std::string("config: ") + e.what());
  }

  std::vector<double> lo(n, -0.5), hi(n, 0.5);
  if (t.has("plant.y0_lo")) lo = t.get_doubles("plant.y0_lo");
  if (t.has("plant.y0_hi")) hi = t.get_doubles("plant.y0_hi");
  if (lo.size() != static_cast<std::size_t>(n) || hi.size() != static_cast<std::size_t>(n))
    throw error("config: plant.y0_lo / y0_hi must have length n");
  for (int i = 0; i < n; ++i) {
    if (!(lo[i] < hi[i])) throw error("config: initial interval must have positive width");
    cfg.loop.initial_intervals.push_back({lo[i], hi[i]});
  }
  if (t.has("plant.y0")) cfg.loop.initial_outputs = t.get_doubles("plant.y0");

  cfg.p_fail = t.get_double("channel.p", 0.05);
  cfg.q_recover = t.get_double("channel.q", 0.9);
  cfg.trials = static_cast<int>(t.get_int("run.trials", 1000));
  cfg.horizon = static_cast<int>(t.get_int("run.horizon", 200));
  cfg.seed = static_cast<std::uint64_t>(t.get_int("run.seed", 0));
  cfg.rate_dead_band = t.get_double("run.rate_dead_band", 0.01);
  cfg.threads = static_cast<int>(t.get_int("run.threads", 0));
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw error(std::string("config: ") + e.what());
  }
  return cfg;
}

namespace {

SweepAxis read_axis(const Table& t, const std::string& prefix) {
  SweepAxis axis;
  axis.name = t.get_string(prefix);
  axis.lo = t.get_double(prefix + "_min");
  axis.hi = t.get_double(prefix + "_max");
  axis.steps = static_cast<int>(t.get_int(prefix + "_steps"));
  if (axis.steps < 1) throw error("config: sweep axis needs at least one step");
  return axis;
}

}  // namespace

SweepConfig read_sweep(const Table& t) {
  SweepConfig cfg;
  cfg.base = read_scalar_uncertainty(t);
  cfg.p_fail = t.get_double("channel.p", 0.05);
  cfg.q_recover = t.get_double("channel.q", 0.9);
  cfg.n_cells = static_cast<int>(t.get_int("quantizer.n_cells", 8));
  cfg.axis1 = read_axis(t, "sweep.axis1");
  if (t.has("sweep.axis2")) cfg.axis2 = read_axis(t, "sweep.axis2");
  cfg.run_mc = t.get_bool("sweep.mc", false);
  cfg.mc_trials = static_cast<int>(t.get_int("sweep.mc_trials", 1000));
  cfg.mc_horizon = static_cast<int>(t.get_int("sweep.mc_horizon", 200));
  cfg.seed = static_cast<std::uint64_t>(t.get_int("run.seed", 0));
  try {
    cfg.policy =
        perturbation_mode_from_string(t.get_string("plant.policy", "uniform-random"));
  } catch (const std::invalid_argument& e) {
    throw error(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace qstab::config
