#include "detform/slaving.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "detform/bounds.hpp"
#include "driven.hpp"

namespace detform {

double cutoff_phi(double xi, double G) {
  require(G > 0, ErrorCode::InvalidArgument, "cut-off needs G > 0");
  if (xi <= 2 * G) return 1.0;
  if (xi >= 3 * G) return 0.0;
  return (3 * G - xi) / G;
}

double default_burn_in(const FlowConfig& cfg, const ModeCut& cut) {
  const double k0 = cfg.grid.kappa0();
  const double n1 = cut.N + 1.0;
  return 5.0 * 10.0 / (cfg.nu * k0 * k0 * n1 * n1);
}

namespace detail {

namespace {
std::uint64_t fnv1a(std::span<const cplx> p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p.data());
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < p.size() * sizeof(cplx); ++i) {
    h ^= b[i];
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

CircleLayout circle_layout(const ModalTrajectory& v) {
  require(v.sgrid().kind == SGridKind::Periodic, ErrorCode::Precondition,
          "circle layout needs a periodic s-grid");
  const std::size_t P = v.nodes();
  std::vector<std::uint64_t> h(P);
  for (std::size_t j = 0; j < P; ++j) h[j] = fnv1a(v.packed(j));
  const std::size_t bytes = v.stride() * sizeof(cplx);
  // Three-way comparison of two nodes: by hash, then by bytes.
  auto cmp = [&](std::size_t a, std::size_t b) {
    if (h[a] != h[b]) return h[a] < h[b] ? -1 : 1;
    return std::memcmp(v.packed(a).data(), v.packed(b).data(), bytes);
  };
  CircleLayout out;
  out.period = P;
  for (std::size_t p = 1; p < P; ++p) {
    if (P % p) continue;
    bool ok = true;
    for (std::size_t j = 0; j < P && ok; ++j) ok = cmp(j, (j + p) % P) == 0;
    if (ok) {
      out.period = p;
      break;
    }
  }
  const std::size_t p = out.period;
  std::size_t best = 0;
  for (std::size_t r = 1; r < p; ++r) {
    for (std::size_t t = 0; t < p; ++t) {
      const int c = cmp((r + t) % P, (best + t) % P);
      if (c < 0) best = r;
      if (c != 0) break;
    }
  }
  out.start = best;
  return out;
}

}  // namespace detail

namespace {

// Shared setup for the slaving equation and the W map.
struct SlaveSetup {
  double G = 0;
  SpectralField h;
  BoundsReport bounds;
};

SlaveSetup setup(const ModalTrajectory& v, const FlowConfig& cfg) {
  cfg.validate();
  require(v.grid() == cfg.grid, ErrorCode::GridMismatch, "trajectory grid differs from flow grid");
  SlaveSetup s;
  s.G = grashof(cfg);
  s.h = project_high(cfg.force, v.cut());
  BoundsInput in;
  in.G = s.G;
  in.N = v.cut().N;
  in.ratio_hf = l2_norm(s.h) / l2_norm(cfg.force);
  in.ratio_gf = l2_norm(project_low(cfg.force, v.cut())) / l2_norm(cfg.force);
  in.constants = cfg.constants;
  in.nu = cfg.nu;
  in.kappa0 = cfg.grid.kappa0();
  in.h_h1 = h1_norm(s.h);
  s.bounds = check_conditions(in);
  return s;
}

void finish_bounds(WSolution& sol, const SlaveSetup& s, const FlowConfig& cfg) {
  if (!sol.conditions_pass || !s.bounds.beta) return;
  const double k0 = cfg.grid.kappa0();
  const double b = *s.bounds.beta;
  sol.h1_bound = cfg.nu * k0 * s.G * b;
  sol.l2_bound = cfg.nu * s.G * b / sol.cut.N;
  sol.h1_bound_ok = sol.sup_h1 <= *sol.h1_bound;
  sol.l2_bound_ok = sol.sup_l2 <= *sol.l2_bound;
  if (s.bounds.Gamma) {
    sol.h2_bound = *s.bounds.Gamma;
    sol.h2_bound_ok = sol.sup_h2 <= *sol.h2_bound;
  }
}

}  // namespace

WSolution slaved_high_modes(const ModalTrajectory& v, const SpectralField& q0,
                            const FlowConfig& cfg, const WSolveOptions& opt) {
  const SlaveSetup s = setup(v, cfg);
  require_same_grid(q0, cfg.force, "slaved_high_modes");
  require(l2_norm(project_low(q0, v.cut())) == 0.0, ErrorCode::Precondition,
          "q0 must be supported on |k| > N");
  const SGrid& g = v.sgrid();
  const int m = detail::substeps_for(g.ds, cfg.dt);
  const detail::Stepper st(cfg.grid, detail::stokes_rate(cfg.grid, cfg.nu), s.h, g.ds / m,
                           cfg.integrator);
  const ModeCut cut = v.cut();
  const Hold hold = opt.hold;
  detail::DrivenProblem p{&st, m,
                          [&](const SpectralField& q, std::size_t j, double frac) {
                            SpectralField arg = v.sample(j, frac, hold);
                            arg += q;
                            return -1.0 * project_high(bilinear_self(arg), cut);
                          },
                          &g};
  WSolution sol;
  sol.sgrid = g;
  sol.cut = cut;
  sol.conditions_pass = s.bounds.flags.determining;
  detail::forward_solve(p, g, q0, opt, sol);
  sol.converged = true;
  return sol;
}

WSolution w_map_solve(const ModalTrajectory& v, const FlowConfig& cfg, const WSolveOptions& opt) {
  const SlaveSetup s = setup(v, cfg);
  const bool pass = s.bounds.flags.gn4;
  if (!pass && opt.require_conditions)
    fail(ErrorCode::Precondition,
         "gn_condition4 fails for G=" + std::to_string(s.G) + ", N=" + std::to_string(v.cut().N) +
             "; use warn-only mode to proceed");
  const SGrid& g = v.sgrid();
  const int m = detail::substeps_for(g.ds, cfg.dt);
  const detail::Stepper st(cfg.grid, detail::stokes_rate(cfg.grid, cfg.nu), s.h, g.ds / m,
                           cfg.integrator);
  const ModeCut cut = v.cut();
  const double scale = cfg.nu * cfg.grid.kappa0();
  const double G = s.G;
  const Hold hold = opt.hold;
  long engaged = 0;
  detail::DrivenProblem p{&st, m,
                          [&](const SpectralField& w, std::size_t j, double frac) {
                            SpectralField vs = v.sample(j, frac, hold);
                            const double phi = cutoff_phi(h1_norm(vs) / scale, G);
                            if (phi < 1.0) {
                              ++engaged;
                              vs *= phi;
                            }
                            vs += w;
                            return -1.0 * project_high(bilinear_self(vs), cut);
                          },
                          &g};
  WSolution sol;
  sol.conditions_pass = pass;
  detail::bounded_solve(p, v, SpectralField(cfg.grid), opt, sol);
  sol.cutoff_engaged = engaged;
  finish_bounds(sol, s, cfg);
  return sol;
}

double w_causality_probe(const ModalTrajectory& v1, const ModalTrajectory& v2, double s0,
                         const FlowConfig& cfg, const WSolveOptions& opt) {
  require(v1.sgrid() == v2.sgrid() && v1.cut().N == v2.cut().N && v1.grid() == v2.grid(),
          ErrorCode::GridMismatch, "causality probe needs a common grid");
  const SGrid& g = v1.sgrid();
  require(g.kind == SGridKind::Windowed, ErrorCode::Precondition,
          "causality probe runs on windowed grids");
  const double eps = 1e-9 * g.ds;
  const std::size_t bytes = v1.stride() * sizeof(cplx);
  for (std::size_t j = 0; j < g.nodes() && g.s(j) <= s0 + eps; ++j)
    require(std::memcmp(v1.packed(j).data(), v2.packed(j).data(), bytes) == 0,
            ErrorCode::Precondition,
            "trajectories differ at s=" + std::to_string(g.s(j)) + " <= s0");
  WSolveOptions o = opt;
  o.store_trajectory = true;
  const WSolution a = w_map_solve(v1, cfg, o);
  const WSolution b = w_map_solve(v2, cfg, o);
  double worst = 0;
  for (std::size_t j = a.first_valid; j < g.nodes() && g.s(j) <= s0 + eps; ++j)
    worst = std::max(worst, h1_norm(a.at(j) - b.at(j)));
  return worst;
}

LipschitzProbe w_lipschitz_probe(
    const std::vector<std::pair<ModalTrajectory, ModalTrajectory>>& pairs, const FlowConfig& cfg,
    const WSolveOptions& opt) {
  LipschitzProbe out;
  WSolveOptions o = opt;
  o.store_trajectory = true;
  for (const auto& [v1, v2] : pairs) {
    const double dx = distance_X(v1, v2);
    if (dx == 0.0) continue;
    const WSolution a = w_map_solve(v1, cfg, o);
    const WSolution b = w_map_solve(v2, cfg, o);
    double dy = 0;
    for (std::size_t j = a.first_valid; j < v1.nodes(); ++j)
      dy = std::max(dy, l2_norm(a.at(j) - b.at(j)));
    out.empirical_ratio = std::max(out.empirical_ratio, dy / dx);
    ++out.pairs_used;
    if (!out.formula_LW) out.formula_LW = setup(v1, cfg).bounds.L_W;
  }
  return out;
}

}  // namespace detform
