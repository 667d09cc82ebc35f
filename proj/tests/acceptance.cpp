// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only
// when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "detform/bounds.hpp"
#include "detform/determining_form.hpp"
#include "detform/nudging.hpp"
#include "support.hpp"

using namespace detform;
using namespace testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

GridSpec grid(int n) {
  GridSpec g;
  g.resolution = n;
  return g;
}

Constants unit() { return Constants{}; }

// Kolmogorov flow forced on k = (0, m) at Grashof number G (L = 2 pi, nu = 1).
FlowConfig kolmogorov_G(int m, double G, int n) {
  FlowConfig cfg = kolmogorov(m, G, 1.0, n);
  return cfg;
}

SpectralField attractor_state(const FlowConfig& cfg, std::uint64_t seed, double coarse_dt) {
  FlowConfig c = cfg;
  c.dt = coarse_dt;
  return attractor_surrogate(random_divfree_field(cfg.grid, seed, 1.0), c, 1.0);
}

// 1 ---------------------------------------------------------------------
Outcome bilinear_identities() {
  const GridSpec g = grid(64);
  double flip = 0, ortho = 0, s175 = 0, moveu = 0, s185 = 0;
  for (int t = 0; t < 100; ++t) {
    const auto u = random_divfree_field(g, 1000 + 3 * t, 1.0);
    const auto v = random_divfree_field(g, 1001 + 3 * t, 1.5);
    const auto w = random_divfree_field(g, 1002 + 3 * t, 1.0);
    const auto Au = apply_A(u, 1.0), Av = apply_A(v, 1.0);
    const double nu = h1_norm(u), nv = h1_norm(v), hu = l2_norm(Au), hv = l2_norm(Av);
    const auto Buv = bilinear(u, v), Bvv = bilinear(v, v), BAvv = bilinear(Av, v);
    flip = std::max(flip, std::abs(inner(Buv, w) + inner(bilinear(u, w), v)) / (nu * nv * l2_norm(w)));
    ortho = std::max(ortho, std::abs(inner(bilinear(u, u), Au)) / (nu * nu * hu));
    s175 = std::max(s175, std::abs(inner(BAvv, u) - inner(Buv, Av)) / (hv * nv * nu));
    moveu = std::max(moveu, std::abs(inner(Bvv, Au) + inner(bilinear(v, u), Av) + inner(Buv, Av)) /
                                (nv * nv * hu + hv * nv * hu));
    s185 = std::max(s185, std::abs(inner(BAvv, u) - inner(bilinear(v, Av), u) + inner(Bvv, Au)) /
                              (hv * nv * nu));
  }
  const double worst = std::max({flip, ortho, s175, moveu, s185});
  return {worst <= 1e-10, fmt("100 triples, flip %.1e ortho %.1e strengthened %.1e moveu %.1e "
                              "three-term %.1e (limit 1e-10)",
                              flip, ortho, s175, moveu, s185)};
}

// 2 ---------------------------------------------------------------------
Outcome linear_decay() {
  double worst = 0;
  for (auto [k1, k2] : {std::pair{1, 0}, std::pair{3, 4}, std::pair{0, 7}}) {
    FlowConfig cfg = kolmogorov(1, 1.0, 0.5, 64);
    cfg.force.set_zero();
    const SpectralField u0 = shear_mode(cfg.grid, k1, k2, 0.8);
    const double lambda = k1 * k1 + k2 * k2;
    const double horizon = 5.0 / (cfg.nu * lambda);
    cfg.dt = horizon / 200;
    integrate(u0, cfg, horizon, 1, [&](double t, const SpectralField& u) {
      const double a = std::exp(-cfg.nu * lambda * t);
      worst = std::max(worst, l2_norm(u - a * u0) / (a * l2_norm(u0)));
    });
  }
  return {worst <= 1e-8, fmt("max relative error %.2e over three modes (limit 1e-8)", worst)};
}

// 3 ---------------------------------------------------------------------
Outcome kolmogorov_steady() {
  const FlowConfig cfg = kolmogorov_G(2, 1.0, 64);
  const SpectralField us = (1.0 / 4.0) * cfg.force;
  const double residual = l2_norm(stationary_defect(us, cfg));
  SpectralField u = us + 0.1 * l2_norm(us) * random_divfree_field(cfg.grid, 77, 1.0);
  double t = 0, rel = h1_norm(u - us) / h1_norm(us);
  while (rel > 1e-6 && t < 100) {
    u = integrate(u, cfg, 1.0, 100).final_state;
    t += 1.0;
    rel = h1_norm(u - us) / h1_norm(us);
  }
  return {residual <= 1e-12 && rel <= 1e-6,
          fmt("G = %.2f: residual %.1e (limit 1e-12); ||u - u*||/||u*|| = %.1e at t = %.0f "
              "(limit 1e-6)",
              grashof(cfg), residual, rel, t)};
}

// 4 ---------------------------------------------------------------------
Outcome balance_convergence() {
  FlowConfig cfg = random_forced(2.0, 31, 4, 1.0, 64, 0.01);
  const SpectralField u0 = random_divfree_field(cfg.grid, 33, 0.0, ModeCut{4});
  std::vector<double> e, z;
  for (double dt : {0.005, 0.0025, 0.00125, 0.000625}) {
    cfg.dt = dt;
    std::vector<SpectralField> states;
    integrate(u0, cfg, 1.0, 1, [&](double, const SpectralField& u) { states.push_back(u); });
    const TimeSeriesReport r = balance_residuals(states, dt, 0.0, cfg);
    double me = 0, mz = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      me = std::max(me, std::abs(r.rE[i]));
      mz = std::max(mz, std::abs(r.rZ[i]));
    }
    e.push_back(me);
    z.push_back(mz);
  }
  bool ok = true;
  std::string d = "ratios energy";
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    const double r = e[i] / e[i + 1];
    ok = ok && r >= 3.5 && r <= 4.5;
    d += fmt(" %.3f", r);
  }
  d += ", enstrophy";
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double r = z[i] / z[i + 1];
    ok = ok && r >= 3.5 && r <= 4.5;
    d += fmt(" %.3f", r);
  }
  return {ok, d + " (window [3.5, 4.5])"};
}

// 5 ---------------------------------------------------------------------
Outcome slaving_decay() {
  bool ok = true;
  std::string d;
  for (double G : {2.0, 5.0, 10.0}) {
    const int N = static_cast<int>(2 * min_determining_N(G, unit()));
    FlowConfig cfg = random_forced(G, 41, 4, 1.0, 64, 0.001);
    // A rough start puts O(1) energy into Q_N H, so the slaved error has
    // something to lose; attractor states are already below 1e-6 there.
    const SpectralField u0 = random_divfree_field(cfg.grid, 43, 1.0);
    const SGrid g = SGrid::windowed(0.0, 1.0, 0.001, 0.0);
    const ModeCut cut{N};
    std::vector<SpectralField> full;
    const ModalTrajectory v = sample_solution(u0, cfg, g, cut, &full);
    const WSolution q = slaved_high_modes(v, SpectralField(cfg.grid), cfg);
    std::vector<double> s, err;
    double reached = -1;
    for (std::size_t j = 0; j < g.nodes(); ++j) {
      s.push_back(g.s(j));
      err.push_back(l2_norm(q.at(j) - project_high(full[j], cut)));
      if (reached < 0 && err.back() <= 1e-6) reached = g.s(j);
    }
    const DecayFit fit = fit_decay(s, err);
    const bool here = reached >= 0 && err.back() <= 1e-6 && fit.ok && fit.slope < 0;
    ok = ok && here;
    d += fmt("%sG=%g N=%d: 1e-6 at s=%.3f, slope %.1f", d.empty() ? "" : "; ", G, N, reached,
             fit.slope);
  }
  return {ok, d + " (span limit 30)"};
}

// 6 ---------------------------------------------------------------------
Outcome w_fixed_point() {
  const FlowConfig cfg = kolmogorov_G(2, 1.0, 64);
  const SpectralField us = (1.0 / 4.0) * cfg.force;
  WSolveOptions o;
  o.require_conditions = false;
  double worst = 0;
  std::string d;
  for (int N : {1, 3}) {
    const ModeCut cut{N};
    const auto v = ModalTrajectory::constant(SGrid::periodic(0.5, 0.05), cut, project_low(us, cut));
    const WSolution w = w_map_solve(v, cfg, o);
    double e = 0;
    for (std::size_t j = 0; j < v.nodes(); ++j) e = std::max(e, h1_norm(v.node(j) + w.at(j) - us));
    worst = std::max(worst, e);
    d += fmt("%sN=%d (%s the forcing) %.1e", d.empty() ? "" : ", ", N, N < 2 ? "below" : "above", e);
  }
  return {worst <= 1e-6, d + " (limit 1e-6)"};
}

// 7 ---------------------------------------------------------------------
ModalTrajectory random_trajectory(const SGrid& g, const ModeCut& cut, const GridSpec& grid,
                                  std::uint64_t seed, std::size_t period, double amp) {
  ModalTrajectory v(g, cut, grid);
  for (std::size_t j = 0; j < g.nodes(); ++j)
    v.set_node(j, amp * random_divfree_field(grid, seed + j % period, 0.5, cut));
  return v;
}

Outcome determining_form_structure() {
  // (a)
  const FlowConfig kc = kolmogorov_G(2, 1.0, 64);
  const SpectralField us = (1.0 / 4.0) * kc.force;
  WSolveOptions o;
  o.require_conditions = false;
  double fa = 0;
  for (int N : {1, 3}) {
    const auto v = ModalTrajectory::constant(SGrid::periodic(0.5, 0.05), ModeCut{N},
                                             project_low(us, ModeCut{N}));
    fa = std::max(fa, F_eval(v, kc, o).norm_X());
  }

  // (b)
  const FlowConfig cfg = random_forced(1.0, 51, 4, 1.0, 16, 0.025);
  const ModeCut cut{3};
  DetFormOptions opt;
  opt.w.require_conditions = false;
  const SGrid gc = SGrid::periodic(1.0, 0.05);
  DetFormState c;
  c.v = ModalTrajectory::constant(gc, cut, 0.5 * random_divfree_field(cfg.grid, 53, 0.5, cut));
  long const_bad = 0;
  detform_evolve(c, 5.0, 0.05, cfg, opt, 1, [&](const DetFormState& s) {
    for (std::size_t j = 1; j < s.v.nodes(); ++j) const_bad += !(s.v.node(j) == s.v.node(0));
  });
  const SGrid gp = SGrid::periodic(1.2, 0.05);
  DetFormState p;
  p.v = random_trajectory(gp, cut, cfg.grid, 55, 6, 0.5);
  long per_bad = 0;
  int steps = -1;
  detform_evolve(p, 5.0, 0.05, cfg, opt, 1, [&](const DetFormState& s) {
    ++steps;
    for (std::size_t j = 6; j < s.v.nodes(); ++j) per_bad += !(s.v.node(j) == s.v.node(j % 6));
  });

  // (c)
  const SGrid gs = SGrid::periodic(1.0, 0.05);
  DetFormState r;
  r.v = random_trajectory(gs, cut, cfg.grid, 61, gs.nodes(), 0.5);
  const DetFormState base = detform_step(r, 0.05, cfg, opt);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> pick(1, static_cast<long>(gs.nodes()) - 1);
  int shift_bad = 0;
  std::string shifts;
  for (int i = 0; i < 10; ++i) {
    const long m = pick(rng);
    DetFormState sh;
    sh.v = r.v.shifted(m);
    shift_bad += !(detform_step(sh, 0.05, cfg, opt).v == base.v.shifted(m));
    shifts += fmt("%s%ld", i ? "," : "", m);
  }
  const bool ok = fa <= 1e-6 && const_bad == 0 && per_bad == 0 && shift_bad == 0 && steps >= 100;
  return {ok, fmt("(a) |F|_X = %.1e (limit 1e-6); (b) %d steps, %ld constant and %ld periodic "
                  "node mismatches; (c) shifts {%s}, %d mismatches",
                  fa, steps, const_bad, per_bad, shifts.c_str(), shift_bad)};
}

// 8 ---------------------------------------------------------------------
Outcome traveling_wave() {
  const ModeCut cut{6};
  FlowConfig cfg = random_forced(5.0, 71, 4, 1.0, 64, 0.01);
  const SpectralField u0 = attractor_state(cfg, 73, 0.005);
  DetFormOptions opt;
  opt.w.require_conditions = false;
  std::vector<double> res;
  std::string d;
  for (double ds : {0.025, 0.0125, 0.00625}) {
    cfg.dt = ds;
    // burn-in 0.6 damps the start-up error of W by exp(-49 * 0.6); the
    // window holds the unit outer shift plus 0.25 of compared nodes.
    const SGrid g = SGrid::windowed(0.0, 1.85, ds, 0.6);
    DetFormState st;
    st.v = sample_solution(u0, cfg, g, cut);
    std::vector<DetFormState> states;
    detform_evolve(st, 1.0, 2 * ds, cfg, opt, 1, [&](const DetFormState& s) { states.push_back(s); });
    res.push_back(traveling_wave_residual(states));
    d += fmt("%sds=%g (%zu nodes) %.2e", d.empty() ? "" : ", ", ds, g.nodes(), res.back());
  }
  const double r1 = res[0] / res[1], r2 = res[1] / res[2];
  return {r1 >= 2 && r2 >= 2, fmt("G=5 N=6: %s; reductions %.1f, %.1f (limit 2)", d.c_str(), r1, r2)};
}

// 9 ---------------------------------------------------------------------
Outcome nudging_sync() {
  const double G = 10.0, mu = 102.0;
  const int N = 20;
  FlowConfig cfg = random_forced(G, 81, 4, 1.0, 64, 0.00025);
  NudgeConfig n;
  n.flow = cfg;
  n.mu = mu;
  n.cut = ModeCut{N};
  const NudgeFlags f = nudge_flags(n);
  const SpectralField u0 = attractor_state(cfg, 83, 0.0025);
  const SGrid g = SGrid::windowed(0.0, 0.5, cfg.dt, 0.0);
  std::vector<SpectralField> full;
  const ModalTrajectory v = sample_solution(u0, cfg, g, n.cut, &full);
  NudgeOptions o;
  o.reference = &full;
  const NudgeResult r = nudge_integrate(v, SpectralField(cfg.grid), n, o);
  double crossed = -1;
  for (std::size_t i = 0; i < r.delta.s.size(); ++i)
    if (crossed < 0 && r.delta.l2[i] < 1e-8) crossed = r.delta.s[i];
  const DecayFit fit = fit_decay(r.delta.s, r.delta.l2);
  const double k0 = cfg.grid.kappa0();
  const bool ok = f.pass() && crossed >= 0 && r.delta.l2.back() < 1e-8 && fit.ok &&
                  fit.slope <= -0.25 * cfg.nu * k0 * k0;
  return {ok, fmt("G=%g mu=%g alpha=%.2f N=%d: |delta| < 1e-8 from s=%.4f, final %.1e; slope %.1f "
                  "(limit -0.25)",
                  G, mu, f.alpha, N, crossed, r.delta.l2.back(), fit.slope)};
}

// 10 --------------------------------------------------------------------
Outcome bounds_calculator() {
  const double b = beta(1, 10, 1, unit());
  const long double ref = (9.0L * std::sqrt(1.0L + std::log(10.0L)) + 1.0L) / 7.0L;
  const double berr = std::abs(b - static_cast<double>(ref));
  long violations = 0, points = 0, gn4_true = 0;
  for (int i = 0; i < 20; ++i)
    for (int k = 0; k < 10; ++k) {
      BoundsInput in;
      in.G = 0.05 * std::pow(1.5, i);
      in.N = static_cast<std::int64_t>(std::llround(2 * std::pow(2.2, k)));
      const BoundsFlags fl = check_conditions(in).flags;
      gn4_true += fl.gn4;
      violations += fl.gn4 && !(fl.gn1 && fl.gn2 && fl.gn3 && fl.bound_A_N);
      violations += fl.bound_A_N && !fl.gn2;
      ++points;
    }
  // At the gamma = 2 threshold beta stays below 1/6 + o(1), which caps r0/G
  // by 1 + 55/6 for every G >= 1.
  double worst = 0, first = 0, last = 0;
  for (double G = 1; G <= 1000 * (1 + 1e-12); G *= std::pow(10.0, 0.1)) {
    BoundsInput in;
    in.G = G;
    in.N = big_N_threshold(G, 2.0, unit());
    in.gamma = 2.0;
    const double ratio = *check_conditions(in).r0 / G;
    if (first == 0) first = ratio;
    last = ratio;
    worst = std::max(worst, ratio);
  }
  const double cap = 1 + 55.0 / 6.0;
  return {berr <= 1e-12 && violations == 0 && gn4_true > 10 && worst <= cap,
          fmt("beta(1,10) error %.1e; %ld-point lattice (%ld with gn4), %ld violations; r0/G at the large-N "
              "threshold %.3f..%.3f, max %.3f (cap %.3f)",
              berr, points, gn4_true, violations, first, last, worst, cap)};
}

// 11 --------------------------------------------------------------------
Outcome stationary_eigenfunction() {
  const FlowConfig cfg = kolmogorov_G(4, 0.2, 64);
  const ModeCut cut{3};
  const double lambda = 16;
  const auto v0 = ModalTrajectory::constant(SGrid::periodic(1.0, 0.05), cut, SpectralField(cfg.grid));
  WSolveOptions o;
  o.require_conditions = false;
  const StationaryReport r = stationary_residuals(v0, cfg, o);
  const SpectralField w0 = (1.0 / (cfg.nu * lambda)) * cfg.force;
  double werr = 0, chi = 0;
  for (std::size_t j = 0; j < v0.nodes(); ++j) werr = std::max(werr, h1_norm(r.w->at(j) - w0));
  for (double c : r.chi_u) chi = std::max(chi, std::abs(c - r.reference) / r.reference);
  const double res = std::max({r.algebraic_residual, r.ode_residual, r.energy_residual,
                               r.enstrophy_residual});
  return {res <= 1e-10 && werr <= 1e-10 && chi <= 1e-13,
          fmt("residuals <= %.1e (limit 1e-10); ||w0 - f/(nu lambda)|| = %.1e; chi_u / (|f|/nu) - 1 "
              "= %.1e",
              res, werr, chi)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"bilinear identities", bilinear_identities},
      {"linear decay oracle", linear_decay},
      {"Kolmogorov steady state", kolmogorov_steady},
      {"balance residual convergence", balance_convergence},
      {"determining-mode slaving", slaving_decay},
      {"W fixed point at the steady state", w_fixed_point},
      {"determining-form structure", determining_form_structure},
      {"traveling-wave residual", traveling_wave},
      {"nudging synchronization", nudging_sync},
      {"bounds calculator", bounds_calculator},
      {"stationary eigenfunction pair", stationary_eigenfunction},
  };
  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu of %zu criteria passed [%.1f s]\n", criteria.size() - failed, criteria.size(), total);
  return failed ? 1 : 0;
}
