// Command-line front end. Talks to the library only through detform.h.
//
// Exit codes: 0 all assertions passed, 1 assertion failure or module error,
// 2 usage or configuration error.

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detform/detform.h"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Globals {
  std::string config;
  std::optional<std::string> out;
  std::optional<long long> seed;
  std::optional<int> threads;
  std::vector<std::string> sets;
  bool warn_only = false;
};

// Flag values of one subcommand, keyed by the configuration key they set.
using Overrides = std::map<std::string, std::optional<std::string>>;

struct Command {
  CLI::App* app = nullptr;
  Overrides values;
};

void add_override(Command& c, const std::string& flag, const std::string& key,
                  const std::string& help) {
  c.values[key];
  c.app->add_option(flag, c.values[key], help);
}

int config_failure(const char* what) {
  std::fprintf(stderr, "detform: %s\n%s\n", what, df_last_error());
  return kUsage;
}

int verify(const std::string& path) {
  int ok = 0;
  if (df_manifest_verify(path.c_str(), &ok) != DF_OK) {
    std::fprintf(stderr, "detform: %s\n", df_last_error());
    return kUsage;
  }
  if (!ok) {
    std::printf("FAIL manifest %s\n%s", path.c_str(), df_last_error());
    return kFail;
  }
  std::printf("PASS manifest %s\n", path.c_str());
  return kPass;
}

int run(const std::string& kind, const Globals& g, const Overrides& flags) {
  df_config* cfg = nullptr;
  if (df_config_load(g.config.c_str(), &cfg) != DF_OK) return config_failure("cannot read configuration");
  struct Guard {
    df_config* c;
    ~Guard() { df_config_free(c); }
  } guard{cfg};

  if (const char* k = df_config_get(cfg, "experiment.kind"); k && kind != k) {
    std::fprintf(stderr, "detform: configuration is for '%s', not '%s'\n", k, kind.c_str());
    return kUsage;
  }
  std::vector<std::pair<std::string, std::string>> assign = {{"experiment.kind", kind}};
  if (g.out) assign.emplace_back("experiment.output_dir", *g.out);
  if (g.seed) assign.emplace_back("experiment.seed", std::to_string(*g.seed));
  if (g.threads) assign.emplace_back("experiment.threads", std::to_string(*g.threads));
  if (g.warn_only) assign.emplace_back("solver.require_conditions", "false");
  for (const auto& [key, value] : flags)
    if (value) assign.emplace_back(key, *value);
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "detform: --set expects key=value, got '%s'\n", s.c_str());
      return kUsage;
    }
    assign.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : assign)
    if (df_config_set(cfg, key.c_str(), value.c_str()) != DF_OK)
      return config_failure("bad override");
  if (df_config_finalize(cfg) != DF_OK) return config_failure("invalid configuration");

  df_run* r = nullptr;
  const df_status st = df_experiment_run(cfg, &r);
  if (st != DF_OK) {
    std::fprintf(stderr, "detform: %s: %s\n", df_status_name(st), df_last_error());
    return st == DF_CONFIG ? kUsage : kFail;
  }
  std::fputs(df_run_summary(r), stdout);
  for (size_t i = 0; i < df_run_note_count(r); ++i) std::fprintf(stderr, "note: %s\n", df_run_note(r, i));
  std::printf("manifest: %s\n", df_run_manifest_path(r));
  const int code = df_run_passed(r) ? kPass : kFail;
  df_run_free(r);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Determining-form experiments for 2D Navier-Stokes"};
  app.set_version_flag("--version", std::string(df_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "experiment configuration file");
  app.add_option("--out", g.out, "output directory (experiment.output_dir)");
  app.add_option("--seed", g.seed, "seed for random data (experiment.seed)");
  app.add_option("--threads", g.threads, "worker threads (experiment.threads)")->check(CLI::PositiveNumber);
  app.add_option("--set", g.sets, "key=value override, repeatable");
  app.add_flag("--warn-only", g.warn_only, "record failed size conditions instead of stopping");

  std::map<std::string, Command> cmds;
  auto command = [&](const std::string& name, const std::string& help) -> Command& {
    Command& c = cmds[name];
    c.app = app.add_subcommand(name, help);
    return c;
  };
  {
    Command& c = command("simulate", "integrate the NSE and record norms and balance residuals");
    add_override(c, "--t-final", "run.t_final", "final time");
    add_override(c, "--init", "init.kind", "zero|random|steady|attractor|file");
  }
  command("bounds", "evaluate the closed-form bounds over a (G, N) sweep");
  for (const char* name : {"slave", "wmap", "wtilde", "stationary"}) {
    Command& c = command(name, std::string(name) == "slave"      ? "slaved high modes from q = 0"
                               : std::string(name) == "wmap"     ? "bounded high-mode solution W(v)"
                               : std::string(name) == "wtilde"   ? "nudged full-field solution W~(v)"
                                                                 : "stationary pair residuals");
    add_override(c, "--sgrid", "sgrid.spec", "periodic:P:ds | window:lo:hi:ds:burn");
    add_override(c, "--N", "cut.N", "mode cut");
    add_override(c, "--init", "init.kind", "initial data");
    if (std::string(name) == "wtilde") add_override(c, "--mu", "nudge.mu", "feedback strength");
  }
  {
    Command& c = command("detform", "evolve the determining form in outer time");
    add_override(c, "--sgrid", "sgrid.spec", "periodic:P:ds | window:lo:hi:ds:burn");
    add_override(c, "--N", "cut.N", "mode cut");
    add_override(c, "--t-final", "outer.t_final", "outer time span");
    add_override(c, "--dt-outer", "outer.dt_outer", "outer step");
    add_override(c, "--init", "init.kind", "steady|attractor|constant|zero|file");
    add_override(c, "--emit", "outer.emit", "comma list of residual, final, states");
  }
  {
    Command& c = command("nudge", "synchronize a nudged solution with observed low modes");
    add_override(c, "--mu", "nudge.mu", "feedback strength");
    add_override(c, "--N", "cut.N", "observed modes");
    add_override(c, "--observe-every", "nudge.observe_every", "flow steps between observations");
    add_override(c, "--w0", "nudge.w0", "zero or a snapshot path");
  }
  std::string manifest;
  CLI::App* ver = app.add_subcommand("verify", "recompute the digests listed in a manifest");
  ver->add_option("manifest", manifest, "manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  if (ver->parsed()) return verify(manifest);
  for (auto& [name, c] : cmds)
    if (c.app->parsed()) {
      if (g.config.empty()) {
        std::fprintf(stderr, "detform: --config is required\n");
        return kUsage;
      }
      return run(name, g, c.values);
    }
  return kUsage;
}
