#include "detform/nudging.hpp"

#include <cmath>
#include <cstdio>

#include "detform/parallel.hpp"
#include "driven.hpp"
#include "stepper.hpp"

namespace detform {

bool near_lattice_norm(double mu, double tol) {
  if (!(mu > tol)) return false;
  const long top = static_cast<long>(std::sqrt(mu + tol)) + 1;
  for (long a = 0; a <= top; ++a)
    for (long b = a; b <= top; ++b) {
      if (a == 0 && b == 0) continue;
      if (std::abs(static_cast<double>(a * a + b * b) - mu) <= tol) return true;
    }
  return false;
}

void NudgeConfig::validate() const {
  flow.validate();
  require(std::isfinite(mu) && mu >= 0, ErrorCode::InvalidArgument, "mu must be >= 0");
  cut.validate(flow.grid);
  require(!near_lattice_norm(mu), ErrorCode::InvalidArgument,
          "kappa0^2 mu is an eigenvalue of A (mu = " + std::to_string(mu) +
              " is a sum of two squares)");
}

NudgeFlags nudge_flags(const NudgeConfig& ncfg) {
  const double G = grashof(ncfg.flow);
  const double cL = ncfg.flow.constants.c_L;
  const double n1 = ncfg.cut.N + 1.0;
  NudgeFlags f;
  f.alpha = 1.0 - 2.0 * cL * cL * G * G + 2.0 * ncfg.mu;
  f.mucond2 = f.alpha > 0;
  f.mucond = ncfg.mu / (n1 * n1) <= 0.25;
  return f;
}

std::string DeltaSeries::to_csv() const {
  std::string out = "s,delta_l2,delta_h1\n";
  char buf[128];
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s[i], l2[i], h1[i]);
    out += buf;
  }
  return out;
}

namespace {

std::vector<double> nudge_rate(const NudgeConfig& ncfg) {
  const GridSpec& g = ncfg.flow.grid;
  std::vector<double> r = detail::stokes_rate(g, ncfg.flow.nu);
  if (ncfg.mu == 0.0) return r;
  const ModeTable& t = mode_table(g);
  const double extra = ncfg.flow.nu * g.kappa0() * g.kappa0() * ncfg.mu;
  const double nsq = static_cast<double>(ncfg.cut.N) * ncfg.cut.N;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (t.ksq[i] > 0 && t.ksq[i] <= nsq) r[i] += extra;
  return r;
}

// Nonlinearity -B(w) + nu kappa0^2 mu P_N v(theta) of the nudged equation.
detail::DrivenNonlinear nudge_nonlinear(const ModalTrajectory& v, const NudgeConfig& ncfg,
                                        Hold hold) {
  const GridSpec& g = ncfg.flow.grid;
  const double gain = ncfg.flow.nu * g.kappa0() * g.kappa0() * ncfg.mu;
  if (ncfg.mu == 0.0)
    return [](const SpectralField& w, std::size_t, double) { return -1.0 * bilinear_self(w); };
  return [&v, gain, hold](const SpectralField& w, std::size_t j, double frac) {
    SpectralField r = -1.0 * bilinear_self(w);
    r += gain * v.sample(j, frac, hold);
    return r;
  };
}

void check_grids(const ModalTrajectory& v, const NudgeConfig& ncfg) {
  require(v.grid() == ncfg.flow.grid, ErrorCode::GridMismatch,
          "observed trajectory grid differs from flow grid");
  require(v.cut().N == ncfg.cut.N, ErrorCode::InvalidArgument,
          "observed trajectory cut differs from the nudging cut");
}

}  // namespace

NudgeResult nudge_integrate(const ModalTrajectory& observed, const SpectralField& w0,
                            const NudgeConfig& ncfg, const NudgeOptions& opt) {
  ncfg.validate();
  check_grids(observed, ncfg);
  require_same_grid(w0, ncfg.flow.force, "nudge_integrate");
  const SGrid& g = observed.sgrid();
  if (opt.reference)
    require(opt.reference->size() == g.nodes(), ErrorCode::InvalidArgument,
            "reference needs one field per s-node");
  const FlowConfig& cfg = ncfg.flow;
  const int m = detail::substeps_for(g.ds, cfg.dt);
  const detail::Stepper st(cfg.grid, nudge_rate(ncfg), cfg.force, g.ds / m, cfg.integrator);
  const detail::DrivenProblem p{&st, m, nudge_nonlinear(observed, ncfg, opt.hold), &g};

  NudgeResult res;
  res.delta.against_reference = opt.reference != nullptr;
  auto record = [&](std::size_t j, const SpectralField& w) {
    const SpectralField d = opt.reference ? w - (*opt.reference)[j]
                                          : project_low(w, ncfg.cut) - observed.node(j);
    const Norms n = norms(d);
    res.delta.s.push_back(g.s(j));
    res.delta.l2.push_back(n.l2);
    res.delta.h1.push_back(n.h1);
  };
  SpectralField w = w0;
  record(0, w);
  for (std::size_t j = 0; j + 1 < g.nodes(); ++j) {
    w = p.across(std::move(w), j);
    record(j + 1, w);
  }
  res.final_state = std::move(w);
  return res;
}

DecayFit fit_decay(const std::vector<double>& s, const std::vector<double>& delta, double floor) {
  require(s.size() == delta.size(), ErrorCode::InvalidArgument, "fit series sizes differ");
  DecayFit fit;
  if (delta.empty() || !(delta.front() > 0)) return fit;
  if (!(floor > 0)) {
    floor = delta.front();
    for (double d : delta)
      if (d > 0) floor = std::min(floor, d);
  }
  fit.floor = floor;
  const double lo = 100.0 * floor, hi = 0.1 * delta.front();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(delta[i] >= lo && delta[i] <= hi)) continue;
    const double y = std::log(delta[i]);
    sx += s[i];
    sy += y;
    sxx += s[i] * s[i];
    sxy += s[i] * y;
    ++n;
  }
  fit.points = n;
  if (n < 3) return fit;
  const double den = n * sxx - sx * sx;
  if (!(den > 0)) return fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.ok = true;
  return fit;
}

WSolution w_tilde_solve(const ModalTrajectory& v, const NudgeConfig& ncfg,
                        const WSolveOptions& opt) {
  ncfg.validate();
  check_grids(v, ncfg);
  const NudgeFlags flags = nudge_flags(ncfg);
  if (!flags.pass() && opt.require_conditions)
    fail(ErrorCode::Precondition,
         "nudging conditions fail (alpha = " + std::to_string(flags.alpha) +
             ", mu/(N+1)^2 = " +
             std::to_string(ncfg.mu / ((ncfg.cut.N + 1.0) * (ncfg.cut.N + 1.0))) +
             "); use warn-only mode to proceed");
  const FlowConfig& cfg = ncfg.flow;
  const SGrid& g = v.sgrid();
  const int m = detail::substeps_for(g.ds, cfg.dt);
  const detail::Stepper st(cfg.grid, nudge_rate(ncfg), cfg.force, g.ds / m, cfg.integrator);
  const detail::DrivenProblem p{&st, m, nudge_nonlinear(v, ncfg, opt.hold), &g};
  WSolution sol;
  sol.conditions_pass = flags.pass();
  detail::bounded_solve(p, v, SpectralField(cfg.grid), opt, sol);
  sol.h1_bound = l2_norm(cfg.force) / (cfg.nu * cfg.grid.kappa0()) + ncfg.mu * v.norm_X();
  sol.h1_bound_ok = sol.sup_h1 <= *sol.h1_bound;
  return sol;
}

FEvaluation detform2_rhs(const ModalTrajectory& v, const NudgeConfig& ncfg,
                         const WSolveOptions& opt) {
  WSolveOptions o = opt;
  o.store_trajectory = true;
  auto w = std::make_shared<const WSolution>(w_tilde_solve(v, ncfg, o));
  const FlowConfig& cfg = ncfg.flow;
  const ModeCut cut = v.cut();
  const SpectralField g = project_low(cfg.force, cut);
  ModalTrajectory F(v.sgrid(), cut, v.grid());
  parallel_for(v.nodes(), [&](std::size_t j) {
    SpectralField r = g;
    r -= cfg.nu * apply_A(v.node(j), 1.0);
    r -= project_low(bilinear_self(w->at(j)), cut);
    F.set_node(j, r);
  });
  return {std::move(F), std::move(w)};
}

double xi_decay_check(const ModalTrajectory& v, const WSolution& w) {
  require(w.stored() && w.trajectory.size() == v.nodes(), ErrorCode::InvalidArgument,
          "xi check needs a stored solution on the trajectory's grid");
  double worst = 0;
  for (std::size_t j = w.first_valid; j < v.nodes(); ++j)
    worst = std::max(worst, l2_norm(v.node(j) - project_low(w.at(j), v.cut())));
  return worst;
}

EdrissResidual stat_edriss_residual(const SGrid& g, const std::vector<SpectralField>& w,
                                    const NudgeConfig& ncfg) {
  ncfg.validate();
  require(w.size() == g.nodes(), ErrorCode::InvalidArgument,
          "stat_edriss_residual needs one field per s-node");
  const FlowConfig& cfg = ncfg.flow;
  const ModeCut cut = ncfg.cut;
  const double gain = cfg.grid.kappa0() * cfg.grid.kappa0() * ncfg.mu;
  const double nu = cfg.nu;
  // [I + kappa0^2 mu P_N A^-1 P_N] x
  auto lift = [&](const SpectralField& x) {
    return x + gain * apply_A(project_low(x, cut), -1.0);
  };
  const SpectralField rhs = lift(cfg.force);
  const SpectralField g_low = project_low(cfg.force, cut);
  const std::size_t P = w.size();
  std::vector<SpectralField> stat(P);
  EdrissResidual out;
  std::vector<double> elim(P), xi(P);
  parallel_for(P, [&](std::size_t j) {
    const SpectralField b = bilinear_self(w[j]);
    SpectralField r = nu * apply_A(w[j], 1.0);
    r += (nu * gain) * project_low(w[j], cut);
    r += lift(b);
    r -= rhs;
    stat[j] = std::move(r);
    const SpectralField pb = project_low(b, cut);
    const SpectralField v = (1.0 / nu) * apply_A(g_low - pb, -1.0);
    elim[j] = l2_norm(g_low - nu * apply_A(v, 1.0) - pb);
    xi[j] = l2_norm(v - project_low(w[j], cut));
  });
  const bool periodic = g.kind == SGridKind::Periodic;
  const bool diff = P >= 3;
  const std::size_t lo = periodic || !diff ? 0 : 1;
  const std::size_t hi = periodic || !diff ? P : P - 1;
  for (std::size_t j = lo; j < hi; ++j) {
    SpectralField r = stat[j];
    if (diff) {
      const std::size_t jp = periodic ? (j + 1) % P : j + 1;
      const std::size_t jm = periodic ? (j + P - 1) % P : j - 1;
      r += (0.5 / g.ds) * (w[jp] - w[jm]);
    }
    out.residual = std::max(out.residual, l2_norm(r));
    out.elimination = std::max(out.elimination, elim[j]);
    out.xi = std::max(out.xi, xi[j]);
  }
  return out;
}

}  // namespace detform
