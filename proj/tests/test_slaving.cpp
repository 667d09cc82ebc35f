#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "detform/bounds.hpp"
#include "detform/slaving.hpp"
#include "support.hpp"

using namespace detform;
using namespace testing_support;

namespace {

// v(s) = amp (cos(2 pi s / T) a + sin(2 pi s / T) b) with |a| = |b| = 1 in H^1.
ModalTrajectory circle_trajectory(const SGrid& sg, const GridSpec& g, int N, double amp,
                                  std::uint64_t seed, double T) {
  SpectralField a = random_divfree_field(g, seed, 0.0, ModeCut{N});
  SpectralField b = random_divfree_field(g, seed + 1, 0.0, ModeCut{N});
  a *= amp / h1_norm(a);
  b *= amp / h1_norm(b);
  ModalTrajectory v(sg, ModeCut{N}, g);
  for (std::size_t j = 0; j < sg.nodes(); ++j) {
    const double t = 2 * std::numbers::pi * sg.s(j) / T;
    v.set_node(j, std::cos(t) * a + std::sin(t) * b);
  }
  return v;
}

FlowConfig small_random_flow(double G, std::uint64_t seed) {
  return random_forced(G, seed, 5, 1.0, 16, 0.01);
}

WSolveOptions warn_only() {
  WSolveOptions o;
  o.require_conditions = false;
  return o;
}

}  // namespace

TEST_CASE("cut-off function values") {
  CHECK(cutoff_phi(0.0, 2.0) == 1.0);
  CHECK(cutoff_phi(4.0, 2.0) == 1.0);
  CHECK(cutoff_phi(5.0, 2.0) == doctest::Approx(0.5));
  CHECK(cutoff_phi(5.5, 2.0) == doctest::Approx(0.25));
  CHECK(cutoff_phi(6.0, 2.0) == 0.0);
  CHECK(cutoff_phi(100.0, 2.0) == 0.0);
  CHECK_THROWS_AS(cutoff_phi(1.0, 0.0), Error);
}

TEST_CASE("W of zero follows the Stokes relaxation of a high shear force") {
  // k = (0, 4) lies above N = 3, so P_N f = 0 and B vanishes on the shear.
  const FlowConfig cfg = kolmogorov(4, 0.1);
  const double rate = cfg.nu * 16.0;
  const SpectralField ustar = (1.0 / rate) * cfg.force;
  const SGrid sg = SGrid::windowed(0.0, 1.0, 0.02, 0.4);
  const auto v = ModalTrajectory::constant(sg, ModeCut{3}, SpectralField(cfg.grid));
  const WSolution w = w_map_solve(v, cfg);
  CHECK(w.conditions_pass);
  CHECK(w.first_valid == 20);
  for (std::size_t j = 0; j < sg.nodes(); ++j) {
    const SpectralField exact = (1.0 - std::exp(-rate * sg.s(j))) * ustar;
    CHECK(max_abs_diff(w.at(j), exact) < 1e-12);
  }
  CHECK(w.cutoff_engaged == 0);
  REQUIRE(w.h1_bound_ok.has_value());
  CHECK(*w.h1_bound_ok);
  CHECK(*w.l2_bound_ok);
  CHECK(*w.h2_bound_ok);
}

TEST_CASE("periodic W of zero is the steady high-mode state") {
  for (int N : {1, 3}) {
    const FlowConfig cfg = kolmogorov(4, N == 1 ? 0.03 : 0.1);
    const SpectralField ustar = (1.0 / (cfg.nu * 16.0)) * cfg.force;
    const SGrid sg = SGrid::periodic(1.0, 0.05);
    const auto v = ModalTrajectory::constant(sg, ModeCut{N}, SpectralField(cfg.grid));
    const WSolution w = w_map_solve(v, cfg);
    CHECK(w.converged);
    CHECK(w.conditions_pass);
    for (std::size_t j = 0; j < sg.nodes(); ++j) CHECK(max_abs_diff(w.at(j), ustar) < 1e-10);
  }
}

TEST_CASE("stationary shear below N slaves no high modes") {
  const FlowConfig cfg = kolmogorov(2, 0.5);
  const SpectralField ustar = (1.0 / (cfg.nu * 4.0)) * cfg.force;
  const SGrid sg = SGrid::windowed(0.0, 0.5, 0.05, 0.0);
  const auto v = ModalTrajectory::constant(sg, ModeCut{3}, ustar);
  const WSolution q = slaved_high_modes(v, SpectralField(cfg.grid), cfg);
  CHECK(q.sup_h1 < 1e-13);
  const WSolution w = w_map_solve(v, cfg, warn_only());
  CHECK(w.sup_h1 < 1e-13);
}

TEST_CASE("slaving equation matches W when the cut-off is inactive") {
  const FlowConfig cfg = small_random_flow(0.5, 21);
  const double G = grashof(cfg);
  const SGrid sg = SGrid::windowed(0.0, 1.0, 0.05, 0.2);
  const auto v = circle_trajectory(sg, cfg.grid, 2, G * cfg.nu * cfg.grid.kappa0(), 31, 1.0);
  const WSolution q = slaved_high_modes(v, SpectralField(cfg.grid), cfg);
  const WSolution w = w_map_solve(v, cfg, warn_only());
  CHECK(w.cutoff_engaged == 0);
  for (std::size_t j = 0; j < sg.nodes(); ++j) CHECK(q.at(j) == w.at(j));
  CHECK(q.sup_h1 > 0);
}

TEST_CASE("slaving rejects an initial value with low modes") {
  const FlowConfig cfg = small_random_flow(0.5, 21);
  const SGrid sg = SGrid::windowed(0.0, 0.2, 0.05, 0.0);
  const auto v = ModalTrajectory::constant(sg, ModeCut{2}, SpectralField(cfg.grid));
  const SpectralField q0 = random_divfree_field(cfg.grid, 2, 0.0);
  try {
    slaved_high_modes(v, q0, cfg);
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
}

TEST_CASE("gn condition 4 is enforced unless warn-only") {
  const FlowConfig cfg = kolmogorov(4, 1.0);
  const SGrid sg = SGrid::periodic(0.5, 0.05);
  const auto v = ModalTrajectory::constant(sg, ModeCut{3}, SpectralField(cfg.grid));
  try {
    w_map_solve(v, cfg);
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
  const WSolution w = w_map_solve(v, cfg, warn_only());
  CHECK_FALSE(w.conditions_pass);
  CHECK_FALSE(w.h1_bound.has_value());
  CHECK(w.converged);
}

TEST_CASE("W commutes with shifts node for node") {
  const FlowConfig cfg = small_random_flow(2.0, 41);
  const SGrid sg = SGrid::periodic(1.0, 0.05);
  const double scale = grashof(cfg) * cfg.nu * cfg.grid.kappa0();
  const auto v = circle_trajectory(sg, cfg.grid, 2, 2.5 * scale, 51, 1.0);
  const WSolution w = w_map_solve(v, cfg, warn_only());
  CHECK(w.cutoff_engaged > 0);
  const std::size_t P = sg.nodes();
  for (long m : {1L, 7L, 13L}) {
    const WSolution ws = w_map_solve(v.shifted(m), cfg, warn_only());
    for (std::size_t j = 0; j < P; ++j) CHECK(ws.at(j) == w.at((j + m) % P));
  }
}

TEST_CASE("W inherits a shorter period of the driver") {
  const FlowConfig cfg = small_random_flow(1.0, 43);
  const SGrid sg = SGrid::periodic(1.0, 0.05);
  const auto base = circle_trajectory(sg, cfg.grid, 2, 1.0, 53, 0.25);
  ModalTrajectory v = base;
  for (std::size_t j = 5; j < sg.nodes(); ++j) v.set_node(j, base.node(j % 5));
  REQUIRE(detail::circle_layout(v).period == 5);
  const WSolution w = w_map_solve(v, cfg, warn_only());
  for (std::size_t j = 0; j < sg.nodes(); ++j) CHECK(w.at(j) == w.at((j + 5) % sg.nodes()));
}

TEST_CASE("warm start converges in fewer laps to the same W") {
  const FlowConfig cfg = small_random_flow(1.0, 45);
  const SGrid sg = SGrid::periodic(1.0, 0.05);
  const auto v = circle_trajectory(sg, cfg.grid, 2, 1.0, 55, 1.0);
  const WSolution cold = w_map_solve(v, cfg, warn_only());
  WSolveOptions o = warn_only();
  o.initial = &cold;
  const WSolution warm = w_map_solve(v, cfg, o);
  CHECK(warm.laps < cold.laps);
  CHECK(warm.laps <= 2);
  for (std::size_t j = 0; j < sg.nodes(); ++j) CHECK(l2_norm(warm.at(j) - cold.at(j)) < 1e-9);
}

TEST_CASE("lap budget exhaustion raises non-convergence") {
  const FlowConfig cfg = small_random_flow(1.0, 45);
  const SGrid sg = SGrid::periodic(0.2, 0.05);
  const auto v = circle_trajectory(sg, cfg.grid, 2, 1.0, 55, 0.2);
  WSolveOptions o = warn_only();
  o.max_laps = 2;
  o.tol = 1e-300;
  CHECK_THROWS_AS(w_map_solve(v, cfg, o), NonConvergenceError);
}

TEST_CASE("observer sees every node in order") {
  const FlowConfig cfg = kolmogorov(4, 0.1);
  const SGrid sg = SGrid::periodic(0.5, 0.05);
  const auto v = ModalTrajectory::constant(sg, ModeCut{3}, SpectralField(cfg.grid));
  std::vector<std::size_t> seen;
  WSolveOptions o;
  o.store_trajectory = false;
  o.observer = [&](std::size_t j, const SpectralField&) { seen.push_back(j); };
  const WSolution w = w_map_solve(v, cfg, o);
  CHECK_FALSE(w.stored());
  REQUIRE(seen.size() == sg.nodes());
  for (std::size_t j = 0; j < seen.size(); ++j) CHECK(seen[j] == j);
  CHECK(w.sup_h1 > 0);
}

TEST_CASE("causality: W up to s0 ignores the driver after s0") {
  const FlowConfig cfg = small_random_flow(0.5, 61);
  const SGrid sg = SGrid::windowed(0.0, 2.0, 0.05, 0.3);
  const auto v1 = circle_trajectory(sg, cfg.grid, 2, 1.0, 71, 1.0);
  ModalTrajectory v2 = v1;
  const SpectralField kick = random_divfree_field(cfg.grid, 81, 0.0, ModeCut{2});
  for (std::size_t j = 21; j < sg.nodes(); ++j) v2.set_node(j, v1.node(j) + kick);
  CHECK(w_causality_probe(v1, v2, sg.s(20), cfg, warn_only()) == 0.0);

  const WSolution a = w_map_solve(v1, cfg, warn_only());
  const WSolution b = w_map_solve(v2, cfg, warn_only());
  CHECK(l2_norm(a.at(30) - b.at(30)) > 1e-6);

  try {
    w_causality_probe(v1, v2, sg.s(25), cfg, warn_only());
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
  const SGrid ps = SGrid::periodic(1.0, 0.05);
  const auto p = circle_trajectory(ps, cfg.grid, 2, 1.0, 71, 1.0);
  CHECK_THROWS_AS(w_causality_probe(p, p, 0.5, cfg, warn_only()), Error);
}

TEST_CASE("empirical Lipschitz ratio of W stays below the formula") {
  const FlowConfig cfg = small_random_flow(0.1, 91);
  const SGrid sg = SGrid::periodic(1.0, 0.05);
  std::vector<std::pair<ModalTrajectory, ModalTrajectory>> pairs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto v = circle_trajectory(sg, cfg.grid, 3, 0.1, 100 + 2 * s, 1.0);
    const auto u = circle_trajectory(sg, cfg.grid, 3, 0.1, 200 + 2 * s, 1.0);
    pairs.emplace_back(v, u);
  }
  pairs.emplace_back(pairs[0].first, pairs[0].first);
  const LipschitzProbe p = w_lipschitz_probe(pairs, cfg);
  CHECK(p.pairs_used == 3);
  CHECK(p.empirical_ratio > 0);
  REQUIRE(p.formula_LW.has_value());
  CHECK(p.empirical_ratio <= *p.formula_LW);
}

TEST_CASE("default burn-in scales with the first high mode") {
  const FlowConfig cfg = kolmogorov(1, 1.0);
  CHECK(default_burn_in(cfg, ModeCut{4}) == doctest::Approx(50.0 / 25.0));
}
