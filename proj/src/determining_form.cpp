#include "detform/determining_form.hpp"

#include <cmath>
#include <string>

#include "detform/parallel.hpp"
#include "driven.hpp"
#include "stepper.hpp"

namespace detform {

namespace {

// Nodewise B argument phi(||v||/(nu kappa0)) v + w.
SpectralField cut_off_sum(const SpectralField& v, const SpectralField& w, double scale,
                          double G) {
  const double phi = cutoff_phi(h1_norm(v) / scale, G);
  SpectralField arg = v;
  if (phi < 1.0) arg *= phi;
  arg += w;
  return arg;
}

ModalTrajectory like(const ModalTrajectory& v) {
  return ModalTrajectory(v.sgrid(), v.cut(), v.grid());
}

void check_trajectory_finite(const ModalTrajectory& v, double t) {
  for (const cplx& z : v.raw())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw BlowUpError(t, "determining form outer step produced non-finite values");
}

}  // namespace

FEvaluation F_evaluate(const ModalTrajectory& v, const FlowConfig& cfg,
                       const WSolveOptions& opt) {
  WSolveOptions o = opt;
  o.store_trajectory = true;
  auto w = std::make_shared<const WSolution>(w_map_solve(v, cfg, o));
  const ModeCut cut = v.cut();
  const SpectralField g = project_low(cfg.force, cut);
  const double scale = cfg.nu * cfg.grid.kappa0();
  const double G = grashof(cfg);
  ModalTrajectory F = like(v);
  parallel_for(v.nodes(), [&](std::size_t j) {
    const SpectralField vj = v.node(j);
    SpectralField r = g;
    r -= cfg.nu * apply_A(vj, 1.0);
    r -= project_low(bilinear_self(cut_off_sum(vj, w->at(j), scale, G)), cut);
    F.set_node(j, r);
  });
  return {std::move(F), std::move(w)};
}

ModalTrajectory F_eval(const ModalTrajectory& v, const FlowConfig& cfg,
                       const WSolveOptions& opt) {
  return F_evaluate(v, cfg, opt).F;
}

DetFormState detform_step(const DetFormState& state, double dt_outer, const FlowConfig& cfg,
                          const DetFormOptions& opt) {
  require(std::isfinite(dt_outer) && dt_outer > 0, ErrorCode::InvalidArgument,
          "dt_outer must be positive");
  const ModalTrajectory& v = state.v;
  const double k0 = cfg.grid.kappa0();
  const double N = v.cut().N;
  const double stiff = dt_outer * cfg.nu * k0 * k0 * N * N;
  require(stiff <= opt.stability_budget, ErrorCode::InvalidArgument,
          "dt_outer * nu kappa0^2 N^2 = " + std::to_string(stiff) + " exceeds the RK4 budget " +
              std::to_string(opt.stability_budget));

  std::shared_ptr<const WSolution> cache = opt.reuse_w ? state.cached_w : nullptr;
  auto eval = [&](const ModalTrajectory& x) {
    WSolveOptions o = opt.w;
    o.initial = cache.get();
    FEvaluation e = F_evaluate(x, cfg, o);
    if (opt.reuse_w) cache = e.w;
    return std::move(e.F);
  };
  // y = v + a k, elementwise.
  auto shifted = [&](const ModalTrajectory& k, double a) {
    ModalTrajectory y = v;
    for (std::size_t j = 0; j < v.nodes(); ++j) {
      auto dst = y.packed(j);
      auto src = k.packed(j);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
    }
    return y;
  };

  const ModalTrajectory k1 = eval(v);
  const ModalTrajectory k2 = eval(shifted(k1, 0.5 * dt_outer));
  const ModalTrajectory k3 = eval(shifted(k2, 0.5 * dt_outer));
  const ModalTrajectory k4 = eval(shifted(k3, dt_outer));

  DetFormState out;
  out.t = state.t + dt_outer;
  out.v = v;
  const double c = dt_outer / 6.0;
  for (std::size_t j = 0; j < v.nodes(); ++j) {
    auto dst = out.v.packed(j);
    auto a = k1.packed(j), b = k2.packed(j), d = k3.packed(j), e = k4.packed(j);
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] += c * (a[i] + 2.0 * b[i] + 2.0 * d[i] + e[i]);
  }
  check_trajectory_finite(out.v, out.t);
  out.cached_w = cache;
  return out;
}

DetFormState detform_evolve(DetFormState state, double t_final, double dt_outer,
                            const FlowConfig& cfg, const DetFormOptions& opt, int record_every,
                            const DetFormObserver& observer) {
  require(t_final >= 0 && dt_outer > 0, ErrorCode::InvalidArgument,
          "t_final must be >= 0 and dt_outer > 0");
  require(record_every >= 1, ErrorCode::InvalidArgument, "record_every must be >= 1");
  const double q = t_final / dt_outer;
  const long steps = std::lround(q);
  require(std::abs(q - static_cast<double>(steps)) <= 1e-9 * std::max(1.0, q),
          ErrorCode::InvalidArgument, "t_final must be a multiple of dt_outer");
  const double t0 = state.t;
  if (observer) observer(state);
  for (long n = 1; n <= steps; ++n) {
    state = detform_step(state, dt_outer, cfg, opt);
    state.t = t0 + static_cast<double>(n) * dt_outer;
    if (observer && (n % record_every == 0 || n == steps)) observer(state);
  }
  return state;
}

double traveling_wave_residual(const std::vector<DetFormState>& states) {
  if (states.size() <= 1) return 0.0;
  const ModalTrajectory& v0 = states.front().v;
  const SGrid& g = v0.sgrid();
  const long P = static_cast<long>(v0.nodes());
  double worst = 0;
  for (std::size_t k = 1; k < states.size(); ++k) {
    const ModalTrajectory& vk = states[k].v;
    require(vk.sgrid() == g && vk.cut().N == v0.cut().N && vk.grid() == v0.grid(),
            ErrorCode::GridMismatch, "traveling-wave states live on different grids");
    const double q = (states[k].t - states.front().t) / g.ds;
    const long n = std::lround(q);
    require(n >= 0 && std::abs(q - static_cast<double>(n)) <= 1e-9 * std::max(1.0, q),
            ErrorCode::InvalidArgument,
            "outer time " + std::to_string(states[k].t) +
                " is not a multiple of ds; s-shifts would need interpolation");
    long lo = 0, hi = P - 1;
    if (g.kind == SGridKind::Windowed) {
      lo = static_cast<long>(g.first_valid());
      hi = P - 1 - n;
    }
    for (long j = lo; j <= hi; ++j) {
      const long partner = g.kind == SGridKind::Periodic ? (j + n) % P : j + n;
      worst = std::max(worst, h1_norm(vk.node(static_cast<std::size_t>(j)) -
                                      v0.node(static_cast<std::size_t>(partner))));
    }
  }
  return worst;
}

StationaryReport stationary_residuals(const ModalTrajectory& v0, const FlowConfig& cfg,
                                      const WSolveOptions& opt) {
  const SGrid& g = v0.sgrid();
  const std::size_t P = v0.nodes();
  require(P >= 3, ErrorCode::InvalidArgument, "stationary residuals need at least 3 s-nodes");
  WSolveOptions o = opt;
  o.store_trajectory = true;
  StationaryReport rep;
  rep.w = std::make_shared<const WSolution>(w_map_solve(v0, cfg, o));
  const WSolution& w = *rep.w;
  const ModeCut cut = v0.cut();
  const SpectralField gf = project_low(cfg.force, cut);
  const SpectralField hf = project_high(cfg.force, cut);
  const double scale = cfg.nu * cfg.grid.kappa0();
  const double G = grashof(cfg);
  const double nu = cfg.nu;
  rep.reference = l2_norm(cfg.force) / nu;

  // Nodewise pieces; the s-derivatives are assembled afterwards.
  std::vector<SpectralField> lin(P);
  std::vector<double> E(P), Z(P), estat(P), zstat(P), alg(P);
  rep.s.resize(P);
  rep.chi_u.resize(P);
  rep.chi_w.resize(P);
  parallel_for(P, [&](std::size_t j) {
    const SpectralField v = v0.node(j);
    const SpectralField& wj = w.at(j);
    const SpectralField b = bilinear_self(cut_off_sum(v, wj, scale, G));
    alg[j] = l2_norm(nu * apply_A(v, 1.0) - gf + project_low(b, cut));
    lin[j] = nu * apply_A(wj, 1.0) - hf + project_high(b, cut);
    const SpectralField u = v + wj;
    const SpectralField Au = apply_A(u, 1.0);
    const Norms nu0 = norms(u), nw = norms(wj);
    rep.s[j] = g.s(j);
    rep.chi_u[j] = nu0.l2 > 0 ? nu0.h1 * nu0.h1 / nu0.l2 : 0.0;
    rep.chi_w[j] = nw.l2 > 0 ? nw.h1 * nw.h1 / nw.l2 : 0.0;
    E[j] = nw.l2 * nw.l2;
    Z[j] = nw.h1 * nw.h1;
    estat[j] = nu * nu0.h1 * nu0.h1 - inner(cfg.force, u);
    zstat[j] = nu * nu0.h2 * nu0.h2 - inner(cfg.force, Au);
  });

  const bool periodic = g.kind == SGridKind::Periodic;
  const std::size_t lo = periodic ? 0 : w.first_valid + 1;
  const std::size_t hi = periodic ? P : P - 1;
  for (std::size_t j = lo; j < hi; ++j) {
    rep.algebraic_residual = std::max(rep.algebraic_residual, alg[j]);
    const std::size_t jp = periodic ? (j + 1) % P : j + 1;
    const std::size_t jm = periodic ? (j + P - 1) % P : j - 1;
    const double inv = 1.0 / (2.0 * g.ds);
    SpectralField r = inv * (w.at(jp) - w.at(jm));
    r += lin[j];
    rep.ode_residual = std::max(rep.ode_residual, l2_norm(r));
    rep.energy_residual =
        std::max(rep.energy_residual, std::abs(0.5 * inv * (E[jp] - E[jm]) + estat[j]));
    rep.enstrophy_residual =
        std::max(rep.enstrophy_residual, std::abs(0.5 * inv * (Z[jp] - Z[jm]) + zstat[j]));
  }
  return rep;
}

IntegralResidual integral_representation_residual(const ModalTrajectory& v, const FlowConfig& cfg,
                                                  double horizon, const WSolveOptions& opt) {
  const SGrid& g = v.sgrid();
  require(g.kind == SGridKind::Periodic, ErrorCode::Precondition,
          "the integral representation is evaluated on periodic grids");
  const double k0sq = cfg.grid.kappa0() * cfg.grid.kappa0();
  const double slow = cfg.nu * k0sq;
  IntegralResidual out;
  out.horizon = horizon > 0 ? horizon : std::log(1e12) / slow;
  out.tail_bound = std::exp(-slow * out.horizon);
  out.horizon_short = out.tail_bound > 1e-12 * (1 + 1e-9);

  WSolveOptions o = opt;
  o.store_trajectory = true;
  const WSolution w = w_map_solve(v, cfg, o);
  const ModeCut cut = v.cut();
  const SpectralField gf = project_low(cfg.force, cut);
  const double scale = cfg.nu * cfg.grid.kappa0();
  const double G = grashof(cfg);
  const std::size_t P = v.nodes();

  // Integrand at the nodes, in packed low-mode layout.
  ModalTrajectory src = like(v);
  parallel_for(P, [&](std::size_t j) {
    const SpectralField vj = v.node(j);
    src.set_node(j, gf - project_low(bilinear_self(cut_off_sum(vj, w.at(j), scale, G)), cut));
  });

  // Per-mode exponential quadrature for a linear integrand on each interval.
  const auto idx = low_mode_index(v.grid(), cut);
  const ModeTable& t = mode_table(v.grid());
  const std::size_t n = idx->flat.size();
  std::vector<double> E(2 * n), c0(2 * n), c1(2 * n);
  for (std::size_t q = 0; q < n; ++q) {
    const double a = cfg.nu * k0sq * t.ksq[idx->flat[q]];
    const double x = a * g.ds;
    const double e = std::exp(-x);
    const double one_minus = -std::expm1(-x);
    E[q] = E[n + q] = e;
    c0[q] = c0[n + q] = one_minus / a;
    c1[q] = c1[n + q] = one_minus / a - (one_minus - x * e) / (a * x);
  }
  const long M = static_cast<long>(std::ceil(out.horizon / g.ds - 1e-9));
  auto wrap = [&](long j) {
    const long p = static_cast<long>(P);
    return static_cast<std::size_t>(((j % p) + p) % p);
  };
  std::vector<cplx> y(2 * n, cplx{});
  ModalTrajectory rep = like(v);
  for (long p = -M; p < static_cast<long>(P) - 1; ++p) {
    auto g0 = src.packed(wrap(p)), g1 = src.packed(wrap(p + 1));
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = E[i] * y[i] + c0[i] * g0[i] + c1[i] * (g1[i] - g0[i]);
    if (p + 1 >= 0) {
      auto dst = rep.packed(static_cast<std::size_t>(p + 1));
      std::copy(y.begin(), y.end(), dst.begin());
    }
  }
  out.residual = distance_X(v, rep);
  return out;
}

ModalTrajectory sample_solution(const SpectralField& u_start, const FlowConfig& cfg,
                                const SGrid& g, const ModeCut& cut,
                                std::vector<SpectralField>* full) {
  require(u_start.grid() == cfg.grid, ErrorCode::GridMismatch, "start state on a different grid");
  FlowConfig c = cfg;
  const int m = detail::substeps_for(g.ds, cfg.dt);
  c.dt = g.ds / m;
  ModalTrajectory v(g, cut, cfg.grid);
  SpectralField u = u_start;
  if (full) full->assign(1, u);
  v.set_node(0, project_low(u, cut));
  for (std::size_t j = 0; j + 1 < g.nodes(); ++j) {
    for (int r = 0; r < m; ++r)
      u = step_nse(u, c, g.s(j) + g.ds * static_cast<double>(r) / m);
    v.set_node(j + 1, project_low(u, cut));
    if (full) full->push_back(u);
  }
  return v;
}

}  // namespace detform
