#pragma once

// Time integration of du/dt + nu A u + B(u, u) = f with diagnostics.

#include <functional>
#include <string>
#include <vector>

#include "detform/spectral.hpp"

namespace detform {

enum class Integrator {
  IntegratingFactor,  // Lawson RK4, Stokes term exact
  Imex,               // ARS(2,2,2): Stokes term implicit, B explicit
};

// Absolute constants of the functional inequalities; their values are not fixed by the theory.
struct Constants {
  double c_T = 1.0;
  double c_B = 1.0;
  double c_L = 1.0;
  double c_A = 1.0;
  double c_T_prime = 83.0;
};

struct FlowConfig {
  double nu = 1.0;
  GridSpec grid;
  SpectralField force;
  double dt = 0.01;
  Integrator integrator = Integrator::IntegratingFactor;
  Constants constants;
  // dt * nu * (kappa0 * kmax)^2 allowed for the implicit-explicit scheme.
  double imex_budget = 100.0;

  // Throws Error(Precondition/InvalidArgument) when an invariant fails.
  void validate() const;
};

double grashof(const FlowConfig& cfg);

// One step of length cfg.dt starting at time t (t only labels blow-up errors).
SpectralField step_nse(const SpectralField& u, const FlowConfig& cfg, double t = 0.0);

struct TimeSeriesReport {
  std::vector<double> times;
  std::vector<double> l2, h1, h2, rE, rZ;

  std::size_t size() const { return times.size(); }
  // CSV with header t,l2,h1,h2,rE,rZ and 17 significant digits.
  std::string to_csv() const;
};

struct IntegrateResult {
  SpectralField final_state;
  TimeSeriesReport report;
};

// Called at every recorded sample with (time, state).
using StateObserver = std::function<void(double, const SpectralField&)>;

// Advances round(t_final / dt) steps (dt is shrunk so the steps tile t_final
// exactly) and records norms every record_every steps, including t = 0 and
// the final time. Balance residual columns are NaN; see balance_residuals.
IntegrateResult integrate(const SpectralField& u0, const FlowConfig& cfg, double t_final,
                          int record_every, const StateObserver& observer = {});

// Centered-difference energy and enstrophy balance residuals at the interior
// samples of a uniformly spaced state series.
TimeSeriesReport balance_residuals(const std::vector<SpectralField>& states, double spacing,
                                   double t0, const FlowConfig& cfg);

double absorption_time(double u0_h1, const FlowConfig& cfg);

// Right side of the enstrophy envelope: bound on ||u(t)||^2.
double gronwall_envelope(double t, double u0_h1, const FlowConfig& cfg);

struct SteadyStateOptions {
  double tolerance = 1e-10;   // on |nu A u + B(u,u) - f| / |f|
  double horizon = 0.0;       // 0 means 200 / (nu kappa0^2)
  int check_every = 50;       // steps between residual checks
};

struct SteadyState {
  SpectralField u;
  double residual = 0;      // |nu A u + B(u,u) - f|
  bool closed_form = false;
};

// nu A u + B(u, u) - f
SpectralField stationary_defect(const SpectralField& u, const FlowConfig& cfg);

SteadyState steady_state_solve(const FlowConfig& cfg, const SteadyStateOptions& opt = {});
SteadyState steady_state_solve(const FlowConfig& cfg, const SpectralField& start,
                               const SteadyStateOptions& opt = {});

// Integrates past absorption_time(||u0||) plus extra (default 5/(nu kappa0^2)).
SpectralField attractor_surrogate(const SpectralField& u0, const FlowConfig& cfg,
                                  double extra = -1.0);

}  // namespace detform
