#include "detform/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace detform {

namespace {

using T = ValueType;

KeySpec key(std::string k, T t, std::optional<std::string> fallback, std::string help,
            std::vector<std::string> choices = {}) {
  return {std::move(k), t, std::move(fallback), std::move(choices), std::move(help)};
}

const std::vector<std::string> kKinds = {"simulate", "bounds", "slave",  "wmap",
                                         "wtilde",   "detform", "nudge", "stationary"};
const std::nullopt_t none = std::nullopt;

std::vector<KeySpec> build_schema() {
  return {
      key("experiment.name", T::Text, "run", "label copied into the manifest"),
      key("experiment.kind", T::Choice, none, "experiment to run", kKinds),
      key("experiment.output_dir", T::Text, ".", "directory for outputs and manifest.json"),
      key("experiment.seed", T::Integer, none, "seed for random initial data"),
      key("experiment.threads", T::Integer, "1", "worker threads for s-node loops"),

      key("flow.nu", T::Real, none, "viscosity"),
      key("flow.L", T::Real, none, "box side"),
      key("flow.resolution", T::Integer, none, "grid points per side (even)"),
      key("flow.force", T::Text, none, "kolmogorov:k=(k1,k2):amp | file:path | random:seed:decay"),
      key("flow.dealias", T::Real, "0.66666666666666663", "kept fraction of the wavenumber range"),
      key("flow.dt", T::Real, "0.01", "time step"),
      key("flow.integrator", T::Choice, "if", "time integrator", {"if", "imex"}),
      key("flow.imex_budget", T::Real, "100", "dt nu (kappa0 kmax)^2 allowed for imex"),
      key("flow.grashof", T::Real, none, "rescale the force to this Grashof number"),
      key("flow.force_cut", T::Integer, "0", "random force support |k| <= value (0: all)"),

      key("constants.c_T", T::Real, "1", "inequality constant"),
      key("constants.c_B", T::Real, "1", "inequality constant"),
      key("constants.c_L", T::Real, "1", "inequality constant"),
      key("constants.c_A", T::Real, "1", "inequality constant"),
      key("constants.c_T_prime", T::Real, "83", "inequality constant"),

      key("cut.N", T::Integer, "4", "low modes 0 < |k| <= N"),
      key("sgrid.spec", T::Text, "periodic:1:0.05", "periodic:P:ds | window:lo:hi:ds:burn"),

      key("init.kind", T::Choice, "attractor", "initial data",
          {"zero", "random", "steady", "attractor", "constant", "file"}),
      key("init.path", T::Text, none, "snapshot or trajectory file for init.kind = file"),
      key("init.decay", T::Real, "1", "spectral decay of random data"),
      key("init.amplitude", T::Real, "1", "L2 norm of random data"),
      key("init.transient", T::Real, none, "extra time past absorption for attractor data"),

      key("solver.tol", T::Real, "1e-10", "lap-to-lap change for periodic solves"),
      key("solver.max_laps", T::Integer, "50", "lap limit for periodic solves"),
      key("solver.hold", T::Choice, "cubic", "interpolation of v between nodes",
          {"zero", "linear", "cubic"}),
      key("solver.require_conditions", T::Boolean, "true", "raise when size conditions fail"),

      key("run.t_final", T::Real, "10", "simulate: final time"),
      key("run.record_every", T::Integer, "10", "simulate: steps between samples"),

      key("outer.t_final", T::Real, "0.1", "detform: outer time span"),
      key("outer.dt_outer", T::Real, none, "detform: outer step (default ds / k within budget)"),
      key("outer.stability_budget", T::Real, "2.78", "detform: dt nu kappa0^2 N^2 limit"),
      key("outer.reuse_w", T::Boolean, "true", "detform: warm start W solves"),
      key("outer.emit", T::Text, "residual,final", "detform: residual, final, states"),

      key("nudge.mu", T::Real, none, "feedback strength"),
      key("nudge.observe_every", T::Integer, "1", "observation spacing in flow steps"),
      key("nudge.span", T::Real, "10", "nudge: observation window length"),
      key("nudge.w0", T::Text, "zero", "nudge: zero or a snapshot path"),
      key("nudge.min_rate", T::Real, "0", "nudge: required decay rate in units nu kappa0^2"),

      key("bounds.g_min", T::Real, "1", "smallest G"),
      key("bounds.g_max", T::Real, "1000", "largest G"),
      key("bounds.g_count", T::Integer, "20", "number of G values"),
      key("bounds.g_spacing", T::Choice, "log", "G spacing", {"linear", "log"}),
      key("bounds.n_min", T::Integer, "1", "smallest N"),
      key("bounds.n_max", T::Integer, "1000", "largest N"),
      key("bounds.n_count", T::Integer, "10", "number of N values"),
      key("bounds.n_spacing", T::Choice, "log", "N spacing", {"linear", "log"}),
      key("bounds.ratio_hf", T::Real, "1", "|h| / |f|"),
      key("bounds.ratio_gf", T::Real, "1", "|g| / |f|"),
      key("bounds.gamma", T::Real, none, "exponent of the large-N condition"),
      key("bounds.mu", T::Real, none, "nudging strength for the mu flags"),
      key("bounds.epsilon", T::Real, "1", "final bound factor"),
      key("bounds.u0_h1", T::Real, "0", "initial H1 norm for the absorption time"),
      key("bounds.h_h1", T::Real, none, "||h|| for the H2 radius"),

      key("check.tolerance", T::Real, "1e-6", "threshold of the main assertion"),
      key("check.balance_tolerance", T::Real, none, "simulate: bound on balance residuals"),
  };
}

bool parse_real(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && std::isfinite(out);
}

bool parse_int(const std::string& s, long long& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::optional<bool> parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  return std::nullopt;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::set<std::string> sections() {
  std::set<std::string> out;
  for (const auto& k : config_schema()) out.insert(k.key.substr(0, k.key.find('.')));
  return out;
}

std::string where(int line) { return line > 0 ? "line " + std::to_string(line) : "command line"; }

const char* real_re = R"(([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))";

}  // namespace

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = build_schema();
  return schema;
}

const KeySpec* find_key(const std::string& k) {
  for (const auto& s : config_schema())
    if (s.key == k) return &s;
  return nullptr;
}

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(ErrorCode::Config,
            [&] {
              std::string m = "invalid configuration:";
              for (const auto& v : violations) m += "\n  " + v;
              return m;
            }()),
      violations_(std::move(violations)) {}

std::optional<std::string> type_problem(const KeySpec& spec, const std::string& value) {
  double d;
  long long i;
  switch (spec.type) {
    case T::Real:
      if (!parse_real(value, d)) return spec.key + " expects a real number, got '" + value + "'";
      break;
    case T::Integer:
      if (!parse_int(value, i)) return spec.key + " expects an integer, got '" + value + "'";
      break;
    case T::Boolean:
      if (!parse_bool(value)) return spec.key + " expects true or false, got '" + value + "'";
      break;
    case T::Choice: {
      bool ok = false;
      std::string list;
      for (const auto& c : spec.choices) {
        ok = ok || c == value;
        list += (list.empty() ? "" : "|") + c;
      }
      if (!ok) return spec.key + " expects one of " + list + ", got '" + value + "'";
      break;
    }
    case T::Text:
      if (value.empty()) return spec.key + " is empty";
      break;
  }
  return std::nullopt;
}

ForceSpec parse_force_spec(const std::string& text) {
  static const std::regex kol(std::string(R"(kolmogorov:k=\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\):)") +
                              real_re);
  static const std::regex rnd(std::string(R"(random:(\d+):)") + real_re);
  std::smatch m;
  ForceSpec f;
  if (std::regex_match(text, m, kol)) {
    f.kind = ForceSpec::Kind::Kolmogorov;
    f.k1 = std::stoi(m[1]);
    f.k2 = std::stoi(m[2]);
    f.amplitude = std::stod(m[3]);
    require(f.k1 != 0 || f.k2 != 0, ErrorCode::Config, "force wavevector must be nonzero");
    return f;
  }
  if (std::regex_match(text, m, rnd)) {
    f.kind = ForceSpec::Kind::Random;
    f.seed = std::stoull(m[1]);
    f.decay = std::stod(m[2]);
    return f;
  }
  if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    f.kind = ForceSpec::Kind::File;
    f.path = text.substr(5);
    return f;
  }
  fail(ErrorCode::Config, "force spec '" + text +
                              "' is not kolmogorov:k=(k1,k2):amp, file:path or random:seed:decay");
}

SGridSpec parse_sgrid_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(trim(p));
  auto num = [&](std::size_t i) {
    double d;
    require(parse_real(parts[i], d), ErrorCode::Config,
            "s-grid spec '" + text + "': '" + parts[i] + "' is not a number");
    return d;
  };
  SGridSpec g;
  if (parts.size() == 3 && parts[0] == "periodic") {
    g.periodic = true;
    g.period = num(1);
    g.ds = num(2);
    require(g.period > 0 && g.ds > 0, ErrorCode::Config, "s-grid period and ds must be positive");
    return g;
  }
  if (parts.size() == 5 && parts[0] == "window") {
    g.periodic = false;
    g.s_lo = num(1);
    g.s_hi = num(2);
    g.ds = num(3);
    if (parts[4] != "auto") g.burn_in = num(4);
    require(g.s_hi > g.s_lo && g.ds > 0, ErrorCode::Config,
            "s-grid window needs s_hi > s_lo and ds > 0");
    require(!g.burn_in || *g.burn_in >= 0, ErrorCode::Config, "burn-in must be >= 0");
    return g;
  }
  fail(ErrorCode::Config,
       "s-grid spec '" + text + "' is not periodic:P:ds or window:lo:hi:ds:burn");
}

void ExperimentConfig::set(const std::string& k, const std::string& value) {
  const KeySpec* spec = find_key(k);
  if (!spec) throw ConfigError({"command line: unknown key '" + k + "'"});
  const std::string v = trim(value);
  if (auto p = type_problem(*spec, v)) throw ConfigError({"command line: " + *p});
  values_[k] = Entry{v, 0, false};
}

void ExperimentConfig::finalize() {
  std::vector<std::string> bad;
  for (const auto& s : config_schema())
    if (!values_.count(s.key) && s.fallback) values_[s.key] = Entry{*s.fallback, 0, true};

  auto missing = [&](const std::string& k, const std::string& why) {
    if (!values_.count(k)) bad.push_back("missing mandatory key " + k + why);
  };
  missing("experiment.kind", " (or give a subcommand)");
  const std::string kind = has("experiment.kind") ? text("experiment.kind") : "";
  const bool flow_needed = kind != "bounds";
  if (flow_needed)
    for (const char* k : {"flow.nu", "flow.L", "flow.resolution", "flow.force"}) missing(k, "");
  if (kind == "nudge" || kind == "wtilde") missing("nudge.mu", " for " + kind);

  auto positive = [&](const char* k) {
    if (has(k) && !(real(k) > 0)) bad.push_back(std::string(k) + " must be positive");
  };
  for (const char* k : {"flow.nu", "flow.L", "flow.dt", "flow.imex_budget", "flow.dealias",
                        "solver.tol", "outer.t_final", "outer.stability_budget", "run.t_final",
                        "nudge.span", "check.tolerance", "bounds.g_min", "bounds.g_max"})
    positive(k);
  if (has("outer.dt_outer")) positive("outer.dt_outer");
  if (has("flow.grashof")) positive("flow.grashof");
  if (has("check.balance_tolerance")) positive("check.balance_tolerance");
  if (has("nudge.mu") && real("nudge.mu") < 0) bad.push_back("nudge.mu must be >= 0");
  if (has("flow.dealias") && real("flow.dealias") > 1) bad.push_back("flow.dealias must be <= 1");
  if (has("flow.resolution")) {
    const long long n = integer("flow.resolution");
    if (n < 4 || n % 2) bad.push_back("flow.resolution must be even and >= 4");
  }
  auto at_least = [&](const char* k, long long lo) {
    if (has(k) && integer(k) < lo)
      bad.push_back(std::string(k) + " must be >= " + std::to_string(lo));
  };
  at_least("experiment.threads", 1);
  at_least("cut.N", 1);
  at_least("solver.max_laps", 1);
  at_least("run.record_every", 1);
  at_least("nudge.observe_every", 1);
  at_least("flow.force_cut", 0);
  at_least("bounds.g_count", 1);
  at_least("bounds.n_count", 1);
  at_least("bounds.n_min", 1);
  if (has("bounds.n_max") && has("bounds.n_min") && integer("bounds.n_max") < integer("bounds.n_min"))
    bad.push_back("bounds.n_max must be >= bounds.n_min");
  if (has("bounds.g_max") && has("bounds.g_min") && real("bounds.g_max") < real("bounds.g_min"))
    bad.push_back("bounds.g_max must be >= bounds.g_min");

  if (flow_needed && has("flow.force")) try {
      parse_force_spec(text("flow.force"));
    } catch (const Error& e) {
      bad.push_back(e.what());
    }
  try {
    parse_sgrid_spec(text("sgrid.spec"));
  } catch (const Error& e) {
    bad.push_back(e.what());
  }
  {
    std::stringstream ss(text("outer.emit"));
    for (std::string p; std::getline(ss, p, ',');)
      if (p = trim(p); p != "residual" && p != "final" && p != "states")
        bad.push_back("outer.emit: unknown item '" + p + "' (residual, final, states)");
  }

  if (flow_needed && !kind.empty()) {
    const std::string init = text("init.kind");
    const bool trajectory_kind =
        kind == "wmap" || kind == "wtilde" || kind == "detform" || kind == "stationary";
    if (trajectory_kind && init == "random")
      bad.push_back("init.kind = random is field data; " + kind + " takes constant instead");
    if (!trajectory_kind && init == "constant")
      bad.push_back("init.kind = constant is trajectory data; " + kind + " takes random instead");
    const bool stochastic = init == "random" || init == "attractor" || init == "constant";
    if (stochastic && !has("experiment.seed"))
      bad.push_back("missing mandatory key experiment.seed (init.kind = " + init +
                    " is random data)");
    if (init == "file") missing("init.path", " for init.kind = file");
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
}

const ExperimentConfig::Entry& ExperimentConfig::get(const std::string& k) const {
  auto it = values_.find(k);
  require(it != values_.end(), ErrorCode::Config, "configuration key " + k + " is not set");
  return it->second;
}

bool ExperimentConfig::has(const std::string& k) const { return values_.count(k) > 0; }
bool ExperimentConfig::defaulted(const std::string& k) const { return get(k).defaulted; }

double ExperimentConfig::real(const std::string& k) const {
  double d = 0;
  require(parse_real(get(k).value, d), ErrorCode::Config, k + " is not a real number");
  return d;
}

long long ExperimentConfig::integer(const std::string& k) const {
  long long i = 0;
  require(parse_int(get(k).value, i), ErrorCode::Config, k + " is not an integer");
  return i;
}

bool ExperimentConfig::flag(const std::string& k) const {
  auto b = parse_bool(get(k).value);
  require(b.has_value(), ErrorCode::Config, k + " is not a boolean");
  return *b;
}

const std::string& ExperimentConfig::text(const std::string& k) const { return get(k).value; }

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, e] : values_) out.emplace_back(k, e.value);
  return out;
}

std::vector<std::string> ExperimentConfig::defaulted_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : values_)
    if (e.defaulted) out.push_back(k);
  return out;
}

ExperimentConfig parse_config(const std::string& text, bool finalize) {
  ExperimentConfig cfg;
  std::vector<std::string> bad;
  const std::set<std::string> known = sections();
  std::string section;
  bool section_ok = false;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string line = raw;
    // Comments start a line or follow whitespace, so values may hold '#'.
    for (std::size_t i = 0; i < line.size(); ++i)
      if ((line[i] == '#' || line[i] == ';') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.resize(i);
        break;
      }
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        bad.push_back(at + "malformed section header '" + line + "'");
        section_ok = false;
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      section_ok = known.count(section) > 0;
      if (!section_ok) bad.push_back(at + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bad.push_back(at + "expected key = value, got '" + line + "'");
      continue;
    }
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      bad.push_back(at + "key '" + name + "' appears before any [section]");
      continue;
    }
    if (!section_ok) continue;  // reported once at the header
    const std::string full = section + "." + name;
    const KeySpec* spec = find_key(full);
    if (!spec) {
      bad.push_back(at + "unknown key '" + name + "' in section [" + section + "]");
      continue;
    }
    if (auto it = cfg.values_.find(full); it != cfg.values_.end()) {
      bad.push_back("duplicate key " + full + " on " + where(it->second.line) + " and line " +
                    std::to_string(line_no));
      continue;
    }
    if (auto p = type_problem(*spec, value)) {
      bad.push_back(at + *p);
      continue;
    }
    cfg.values_[full] = {value, line_no, false};
  }
  if (finalize) try {
      cfg.finalize();
    } catch (const ConfigError& e) {
      bad.insert(bad.end(), e.violations().begin(), e.violations().end());
    }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return cfg;
}

ExperimentConfig load_config(const std::string& path, bool finalize) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), finalize);
}

}  // namespace detform
