#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "detform/bounds.hpp"
#include "detform/experiment.hpp"
#include "detform/io.hpp"

using namespace detform;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(
[experiment]
kind = simulate
seed = 7

[flow]
nu = 1.0
L = 6.283185307179586
resolution = 16
force = kolmogorov:k=(0,2):0.1
)";

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("detform_exp_" + name);
  fs::remove_all(p);
  return p.string();
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& what) {
  for (const auto& s : v)
    if (s.find(what) != std::string::npos) return true;
  return false;
}

ExperimentConfig with(std::string text, const std::vector<std::pair<std::string, std::string>>& kv) {
  ExperimentConfig c = parse_config(text, false);
  for (const auto& [k, v] : kv) c.set(k, v);
  c.finalize();
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal configuration parses and installs defaults") {
  const ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.real("flow.nu") == 1.0);
  CHECK(c.integer("flow.resolution") == 16);
  CHECK(c.defaulted("flow.dt"));
  CHECK(c.real("flow.dt") == 0.01);
  CHECK_FALSE(c.defaulted("flow.nu"));
  const auto d = c.defaulted_keys();
  CHECK(std::find(d.begin(), d.end(), "flow.dt") != d.end());
  const FlowConfig f = build_flow(c);
  CHECK(f.grid.resolution == 16);
  CHECK(l2_norm(f.force) > 0);
}

TEST_CASE("every violation is reported together") {
  const auto v = violations_of(R"(
[experiment]
kind = simulate
[flow]
nu = fast
L = 6.28
resolution = 16
bogus = 1
resolution = 32
[nowhere]
x = 1
)");
  CHECK(mentions(v, "flow.nu expects a real number"));
  CHECK(mentions(v, "unknown key 'bogus'"));
  CHECK(mentions(v, "duplicate key flow.resolution on line 7 and line 9"));
  CHECK(mentions(v, "unknown section [nowhere]"));
  CHECK(mentions(v, "missing mandatory key flow.force"));
  CHECK(mentions(v, "experiment.seed"));
}

TEST_CASE("value rules") {
  CHECK(mentions(violations_of(std::string(kMinimal) + "[flow]\nnu = 2\n"),
                 "duplicate key flow.nu on line 7 and line 12"));
  const std::string base = R"(
[experiment]
kind = wmap
seed = 1
[flow]
nu = 1
L = 6.283185307179586
resolution = 16
)";
  CHECK(mentions(violations_of(base + "force = sine\n"), "force spec"));
  CHECK(mentions(violations_of(base + "force = random:3:1\n[init]\nkind = random\n"),
                 "takes constant"));
  CHECK(mentions(violations_of(base + "force = random:3:1\n[sgrid]\nspec = ring:1\n"), "s-grid"));
  CHECK(mentions(violations_of(base + "force = random:3:1\ndt = -1\n"), "flow.dt must be positive"));
  CHECK(mentions(violations_of(base + "force = random:3:1\n[solver]\nhold = spline\n"),
                 "one of zero|linear|cubic"));
  CHECK(violations_of(base + "force = file:/tmp/x.dfl # trailing comment\n").empty());

  ExperimentConfig c = parse_config(kMinimal, false);
  CHECK_THROWS_AS(c.set("flow.nope", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("flow.dt", "x"), ConfigError);

  const ForceSpec k = parse_force_spec("kolmogorov:k=(1,-3):2.5e-1");
  CHECK(k.k1 == 1);
  CHECK(k.k2 == -3);
  CHECK(k.amplitude == 0.25);
  const SGridSpec w = parse_sgrid_spec("window:0:2:0.01:auto");
  CHECK_FALSE(w.periodic);
  CHECK_FALSE(w.burn_in.has_value());
}

TEST_CASE("bounds sweep writes one row per pair and verifies") {
  const std::string dir = scratch("bounds");
  const ExperimentConfig c = parse_config("[experiment]\nkind = bounds\noutput_dir = " + dir +
                                          "\n[bounds]\ng_count = 10\nn_min = 1\nn_max = 1000\n"
                                          "n_count = 20\nn_spacing = linear\n");
  const RunManifest m = run_experiment(c);
  CHECK(m.passed());
  const std::string csv = slurp(dir + "/bounds.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 10 * 20);
  CHECK(csv.rfind(BoundsReport::csv_header(), 0) == 0);
  CHECK(verify_manifest(dir + "/manifest.json").ok);

  std::ofstream(dir + "/bounds.csv", std::ios::app) << "tampered\n";
  const ManifestCheck bad = verify_manifest(dir + "/manifest.json");
  CHECK_FALSE(bad.ok);
  CHECK(mentions(bad.problems, "bounds.csv"));
}

TEST_CASE("simulate is bit reproducible and echoes its defaults") {
  const std::string a = scratch("sim_a"), b = scratch("sim_b");
  auto run = [&](const std::string& dir) {
    return run_experiment(with(kMinimal, {{"experiment.output_dir", dir},
                                          {"init.kind", "random"},
                                          {"run.t_final", "1"}}));
  };
  const RunManifest ma = run(a), mb = run(b);
  CHECK(ma.passed());
  REQUIRE(ma.outputs.size() == mb.outputs.size());
  for (std::size_t i = 0; i < ma.outputs.size(); ++i) {
    CHECK(ma.outputs[i].name == mb.outputs[i].name);
    CHECK(ma.outputs[i].sha256 == mb.outputs[i].sha256);
  }
  CHECK(slurp(a + "/diagnostics.csv").rfind("t,l2,h1,h2,rE,rZ\n", 0) == 0);
  const RunManifest back = RunManifest::from_json(slurp(a + "/manifest.json"));
  CHECK(back.kind == "simulate");
  CHECK(std::find(back.defaulted.begin(), back.defaulted.end(), "flow.dt") != back.defaulted.end());
  bool echoed = false;
  for (const auto& [k, v] : back.config) echoed = echoed || (k == "flow.dt" && std::stod(v) == 0.01);
  CHECK(echoed);
  CHECK(load_snapshot(a + "/final.dfl").grid().resolution == 16);
}

TEST_CASE("detform traveling-wave experiment from the steady state") {
  const std::string dir = scratch("detform");
  const RunManifest m = run_experiment(with(kMinimal, {{"experiment.kind", "detform"},
                                                       {"experiment.output_dir", dir},
                                                       {"init.kind", "steady"},
                                                       {"cut.N", "3"},
                                                       {"sgrid.spec", "periodic:0.5:0.05"},
                                                       {"outer.t_final", "0.1"},
                                                       {"solver.require_conditions", "false"},
                                                       {"check.tolerance", "1e-9"}}));
  CHECK(m.passed());
  REQUIRE(m.assertions.size() == 1);
  CHECK(m.assertions[0].name == "traveling_wave_residual");
  CHECK(m.summary().rfind("PASS traveling_wave_residual", 0) == 0);
  CHECK(slurp(dir + "/detform.csv").rfind("t,residual,norm_X\n", 0) == 0);
  const TrajectoryFile t = load_trajectory(dir + "/final.dtr");
  CHECK(t.N == 3);
}

TEST_CASE("stationary and W experiments on the eigenfunction force") {
  const std::string base = R"(
[experiment]
seed = 3
[flow]
nu = 1.0
L = 6.283185307179586
resolution = 16
force = kolmogorov:k=(0,4):0.05
[cut]
N = 3
[sgrid]
spec = periodic:0.5:0.05
[init]
kind = zero
[solver]
require_conditions = false
[check]
tolerance = 1e-10
)";
  const RunManifest s = run_experiment(with(base, {{"experiment.kind", "stationary"},
                                                   {"experiment.output_dir", scratch("stat")}}));
  CHECK(s.passed());
  CHECK(s.assertions.size() == 4);

  const RunManifest w = run_experiment(with(base, {{"experiment.kind", "wmap"},
                                                   {"experiment.output_dir", scratch("wmap")},
                                                   {"init.kind", "steady"}}));
  CHECK(w.passed());
  bool recon = false;
  for (const auto& a : w.assertions) recon = recon || a.name == "reconstruction";
  CHECK(recon);
}

TEST_CASE("nudge and slave experiments synchronize") {
  const std::string base = R"(
[experiment]
seed = 5
[flow]
nu = 1.0
L = 6.283185307179586
resolution = 16
force = random:11:0
force_cut = 4
grashof = 1
dt = 0.005
[cut]
N = 3
[check]
tolerance = 1e-8
)";
  const RunManifest n = run_experiment(with(base, {{"experiment.kind", "nudge"},
                                                   {"experiment.output_dir", scratch("nudge")},
                                                   {"nudge.mu", "3"},
                                                   {"nudge.span", "6"}}));
  CHECK(n.passed());
  const RunManifest s = run_experiment(with(base, {{"experiment.kind", "slave"},
                                                   {"experiment.output_dir", scratch("slave")},
                                                   {"sgrid.spec", "window:0:6:0.01:0"}}));
  CHECK(s.passed());
}

TEST_CASE("module errors carry the experiment context") {
  try {
    run_experiment(with(kMinimal, {{"experiment.kind", "wmap"},
                                   {"experiment.name", "strict"},
                                   {"experiment.output_dir", scratch("strict")},
                                   {"flow.force", "kolmogorov:k=(0,4):3"},
                                   {"init.kind", "zero"},
                                   {"cut.N", "3"}}));
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
    CHECK(std::string(e.what()).rfind("experiment 'strict' (wmap): ", 0) == 0);
  }
}
