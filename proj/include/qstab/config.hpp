#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qstab/sim.hpp"

namespace qstab::config {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>,
                           std::vector<std::string>>;

// Flat "section.key" -> value table shared by the TOML and JSON front ends.
class Table {
 public:
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  bool get_bool(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  bool get_bool(const std::string& key, bool fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  const std::map<std::string, Value>& raw() const { return values_; }

 private:
  const Value& at(const std::string& key) const;
  std::map<std::string, Value> values_;
};

// TOML subset: [section] headers, key = value pairs, # comments. Values:
// booleans, integers, floats, "strings", and flat arrays of numbers or
// strings. Enough for scenario files; not a general TOML implementation.
Table parse_toml(std::istream& in);

// JSON alternative: an object of objects with the same scalar/array leaves.
Table parse_json(std::istream& in);

// Dispatch by extension (.toml / .json); checks `version = 1`.
Table load_file(const std::string& path);

// Scenario readers ([plant], [quantizer], [channel], [run] sections).
ScalarUncertainty read_scalar_uncertainty(const Table& t);
ARUncertainty read_plant(const Table& t);
Quantizer read_quantizer(const Table& t, const ARUncertainty& u);
ExperimentConfig read_experiment(const Table& t);
SweepConfig read_sweep(const Table& t);

}  // namespace qstab::config
