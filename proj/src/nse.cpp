#include "detform/nse.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>

#include "stepper.hpp"

namespace detform {

void FlowConfig::validate() const {
  require(std::isfinite(nu) && nu > 0, ErrorCode::InvalidArgument, "viscosity must be positive");
  grid.validate();
  require(std::isfinite(dt) && dt > 0, ErrorCode::InvalidArgument, "dt must be positive");
  require(!force.empty() && force.grid() == grid, ErrorCode::GridMismatch,
          "force is missing or lives on a different grid");
  require(force.all_finite(), ErrorCode::InvalidArgument, "force has nonfinite coefficients");
  require(l2_norm(force) > 0, ErrorCode::Precondition, "force must be nonzero (|f| > 0)");
  require(divergence_residual(force) <= 1e-12, ErrorCode::Precondition,
          "force is not divergence free");
  require(reality_residual(force) <= 1e-12 * (1 + l2_norm(force)), ErrorCode::Precondition,
          "force violates the reality condition or has a mean");
  const double c[] = {constants.c_T, constants.c_B, constants.c_L, constants.c_A,
                      constants.c_T_prime};
  for (double x : c)
    require(std::isfinite(x) && x > 0, ErrorCode::InvalidArgument, "constants must be positive");
  if (integrator == Integrator::Imex) {
    const double kk = grid.kappa0() * grid.dealias_radius();
    const double load = dt * nu * kk * kk;
    require(load <= imex_budget, ErrorCode::Precondition,
            "dt*nu*(kappa0*kmax)^2 = " + std::to_string(load) + " exceeds the IMEX budget " +
                std::to_string(imex_budget));
  }
}

double grashof(const FlowConfig& cfg) {
  const double k0 = cfg.grid.kappa0();
  return l2_norm(cfg.force) / (cfg.nu * cfg.nu * k0 * k0);
}

SpectralField step_nse(const SpectralField& u, const FlowConfig& cfg, double t) {
  require_same_grid(u, cfg.force, "step_nse");
  const detail::Stepper st = detail::nse_stepper(cfg, cfg.dt);
  SpectralField out = st.step(u, [](const SpectralField& x, double) {
    return -1.0 * bilinear_self(x);
  });
  detail::check_finite(out, t + cfg.dt, "step_nse");
  return out;
}

std::string TimeSeriesReport::to_csv() const {
  std::string s = "t,l2,h1,h2,rE,rZ\n";
  char buf[256];
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", times[i], l2[i], h1[i],
                  h2[i], rE[i], rZ[i]);
    s += buf;
  }
  return s;
}

namespace {
void record(TimeSeriesReport& r, double t, const SpectralField& u) {
  const Norms n = norms(u);
  r.times.push_back(t);
  r.l2.push_back(n.l2);
  r.h1.push_back(n.h1);
  r.h2.push_back(n.h2);
  r.rE.push_back(std::numeric_limits<double>::quiet_NaN());
  r.rZ.push_back(std::numeric_limits<double>::quiet_NaN());
}
}  // namespace

IntegrateResult integrate(const SpectralField& u0, const FlowConfig& cfg, double t_final,
                          int record_every, const StateObserver& observer) {
  require(std::isfinite(t_final) && t_final >= 0, ErrorCode::InvalidArgument,
          "t_final must be nonnegative");
  require(record_every >= 1, ErrorCode::InvalidArgument, "record_every must be >= 1");
  require_same_grid(u0, cfg.force, "integrate");
  IntegrateResult res{u0, {}};
  if (t_final == 0) return res;
  const long steps = std::max(1L, std::lround(t_final / cfg.dt));
  const double h = t_final / static_cast<double>(steps);
  const detail::Stepper st = detail::nse_stepper(cfg, h);
  auto nonlinear = [](const SpectralField& x, double) { return -1.0 * bilinear_self(x); };
  SpectralField u = u0;
  record(res.report, 0.0, u);
  if (observer) observer(0.0, u);
  for (long n = 1; n <= steps; ++n) {
    u = st.step(u, nonlinear);
    const double t = h * static_cast<double>(n);
    detail::check_finite(u, t, "integrate");
    if (n % record_every == 0 || n == steps) {
      record(res.report, t, u);
      if (observer) observer(t, u);
    }
  }
  res.final_state = std::move(u);
  return res;
}

TimeSeriesReport balance_residuals(const std::vector<SpectralField>& states, double spacing,
                                   double t0, const FlowConfig& cfg) {
  require(states.size() >= 3, ErrorCode::InvalidArgument,
          "balance residuals need at least 3 samples");
  require(spacing > 0, ErrorCode::InvalidArgument, "sample spacing must be positive");
  std::vector<double> e(states.size()), z(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Norms n = norms(states[i]);
    e[i] = n.l2 * n.l2;
    z[i] = n.h1 * n.h1;
  }
  TimeSeriesReport r;
  for (std::size_t i = 1; i + 1 < states.size(); ++i) {
    const SpectralField& u = states[i];
    const Norms n = norms(u);
    const double dE = (e[i + 1] - e[i - 1]) / (2 * spacing);
    const double dZ = (z[i + 1] - z[i - 1]) / (2 * spacing);
    r.times.push_back(t0 + spacing * static_cast<double>(i));
    r.l2.push_back(n.l2);
    r.h1.push_back(n.h1);
    r.h2.push_back(n.h2);
    r.rE.push_back(dE - 2 * inner(cfg.force, u) + 2 * cfg.nu * n.h1 * n.h1);
    r.rZ.push_back(dZ - 2 * inner(cfg.force, apply_A(u, 1.0)) + 2 * cfg.nu * n.h2 * n.h2);
  }
  return r;
}

double absorption_time(double u0_h1, const FlowConfig& cfg) {
  require(u0_h1 >= 0, ErrorCode::InvalidArgument, "norm must be nonnegative");
  const double G = grashof(cfg);
  require(G > 0, ErrorCode::InvalidArgument, "absorption time undefined for G = 0");
  const double k0 = cfg.grid.kappa0();
  const double scale = 3 * cfg.nu * cfg.nu * k0 * k0 * G * G;
  const double lg = u0_h1 > 0 ? std::log(u0_h1 * u0_h1 / scale) : -1.0;
  return std::max(1.0, lg) / (cfg.nu * k0 * k0);
}

double gronwall_envelope(double t, double u0_h1, const FlowConfig& cfg) {
  const double k0 = cfg.grid.kappa0();
  const double decay = std::exp(-cfg.nu * k0 * k0 * t);
  const double f = l2_norm(cfg.force);
  return decay * u0_h1 * u0_h1 + f * f / (cfg.nu * cfg.nu * k0 * k0) * (1 - decay);
}

SpectralField stationary_defect(const SpectralField& u, const FlowConfig& cfg) {
  SpectralField r = cfg.nu * apply_A(u, 1.0);
  r += bilinear_self(u);
  r -= cfg.force;
  return r;
}

SteadyState steady_state_solve(const FlowConfig& cfg, const SteadyStateOptions& opt) {
  cfg.validate();
  if (auto lambda = eigenvalue_of(cfg.force)) {
    SteadyState s;
    s.u = (1.0 / (cfg.nu * *lambda)) * cfg.force;
    s.residual = l2_norm(stationary_defect(s.u, cfg));
    s.closed_form = true;
    return s;
  }
  return steady_state_solve(cfg, SpectralField(cfg.grid), opt);
}

namespace {
// The marched state is a fixed point of the discrete map, which differs from
// the true steady state by the scheme's truncation error. Picard iteration
// u <- (nu A)^{-1}(f - B(u, u)) removes that gap when it contracts.
std::optional<SteadyState> polish(const SpectralField& start, const FlowConfig& cfg,
                                  double target) {
  SpectralField u = start;
  double res = l2_norm(stationary_defect(u, cfg));
  for (int it = 0; it < 50; ++it) {
    SpectralField rhs = cfg.force - bilinear_self(u);
    SpectralField next = (1.0 / cfg.nu) * apply_A(std::move(rhs), -1.0);
    const double r = l2_norm(stationary_defect(next, cfg));
    if (!(r < res)) return std::nullopt;
    u = std::move(next);
    res = r;
    if (res <= target) return SteadyState{u, res, false};
  }
  return std::nullopt;
}
}  // namespace

SteadyState steady_state_solve(const FlowConfig& cfg, const SpectralField& start,
                               const SteadyStateOptions& opt) {
  cfg.validate();
  require_same_grid(start, cfg.force, "steady_state_solve");
  const double k0 = cfg.grid.kappa0();
  const double horizon = opt.horizon > 0 ? opt.horizon : 200.0 / (cfg.nu * k0 * k0);
  const double fnorm = l2_norm(cfg.force);
  const detail::Stepper st = detail::nse_stepper(cfg, cfg.dt);
  auto nonlinear = [](const SpectralField& x, double) { return -1.0 * bilinear_self(x); };
  SpectralField u = start;
  const long max_steps = std::lround(horizon / cfg.dt);
  double res = l2_norm(stationary_defect(u, cfg));
  for (long n = 1; n <= max_steps; ++n) {
    u = st.step(u, nonlinear);
    detail::check_finite(u, cfg.dt * n, "steady_state_solve");
    if (n % opt.check_every == 0 || n == max_steps) {
      res = l2_norm(stationary_defect(u, cfg));
      if (res <= opt.tolerance * fnorm) return SteadyState{u, res, false};
      if (auto polished = polish(u, cfg, opt.tolerance * fnorm)) return *polished;
    }
  }
  throw NonConvergenceError(res, "steady state not reached within horizon " +
                                     std::to_string(horizon) + ", residual " + std::to_string(res));
}

SpectralField attractor_surrogate(const SpectralField& u0, const FlowConfig& cfg, double extra) {
  const double k0 = cfg.grid.kappa0();
  if (extra < 0) extra = 5.0 / (cfg.nu * k0 * k0);
  const double T = absorption_time(h1_norm(u0), cfg) + extra;
  return integrate(u0, cfg, T, 1 << 30).final_state;
}

}  // namespace detform
