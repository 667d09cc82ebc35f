#pragma once

// Experiment configuration: a line-oriented INI document
//
//   # comment
//   [section]
//   key = value
//
// addressed as "section.key". Every key is checked against a fixed schema.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "detform/errors.hpp"

namespace detform {

enum class ValueType { Real, Integer, Boolean, Text, Choice };

struct KeySpec {
  std::string key;
  ValueType type;
  std::optional<std::string> fallback;  // installed when the key is absent
  std::vector<std::string> choices;     // Choice only
  std::string help;
};

const std::vector<KeySpec>& config_schema();
const KeySpec* find_key(const std::string& key);

// Every violation found in one pass, one per entry.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ExperimentConfig {
 public:
  // Assigns a value from outside the document (line 0). Unknown keys and
  // type mismatches throw ConfigError.
  void set(const std::string& key, const std::string& value);

  // Installs defaults and checks mandatory keys and cross-key rules.
  void finalize();

  bool has(const std::string& key) const;
  bool defaulted(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::string& text(const std::string& key) const;

  // Effective (key, value) pairs in key order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::vector<std::string> defaulted_keys() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    bool defaulted = false;
  };
  const Entry& get(const std::string& key) const;

  std::map<std::string, Entry> values_;
  friend ExperimentConfig parse_config(const std::string&, bool);
};

// Parses and, when finalize is set, completes the document. Syntax errors,
// unknown sections and keys, duplicates and type mismatches are collected
// and thrown together.
ExperimentConfig parse_config(const std::string& text, bool finalize = true);
ExperimentConfig load_config(const std::string& path, bool finalize = true);

// Checks a value against its key's type; returns the problem or nullopt.
std::optional<std::string> type_problem(const KeySpec& spec, const std::string& value);

// Force mini-language: kolmogorov:k=(k1,k2):amplitude | file:path | random:seed:decay
struct ForceSpec {
  enum class Kind { Kolmogorov, File, Random } kind = Kind::Kolmogorov;
  int k1 = 0, k2 = 0;
  double amplitude = 0;
  std::string path;
  unsigned long long seed = 0;
  double decay = 0;
};
ForceSpec parse_force_spec(const std::string& text);

// periodic:period:ds | window:s_lo:s_hi:ds:burn_in (burn_in may be "auto")
struct SGridSpec {
  bool periodic = true;
  double period = 0, s_lo = 0, s_hi = 0, ds = 0;
  std::optional<double> burn_in;  // nullopt means the default burn-in
};
SGridSpec parse_sgrid_spec(const std::string& text);

}  // namespace detform
