#pragma once

// The determining form dv/dt = F(v) on low-mode trajectories, its outer time
// stepping, and stationary and traveling-wave diagnostics.

#include <memory>
#include <optional>
#include <vector>

#include "detform/nse.hpp"
#include "detform/slaving.hpp"
#include "detform/trajectory.hpp"

namespace detform {

struct DetFormState {
  double t = 0;
  ModalTrajectory v;
  // W of the last stage evaluation; seeds the next periodic W solve.
  std::shared_ptr<const WSolution> cached_w;
};

struct DetFormOptions {
  WSolveOptions w;
  bool reuse_w = true;
  // Upper limit on dt_outer * nu kappa0^2 N^2 (RK4 stability on the real axis).
  double stability_budget = 2.78;
};

struct FEvaluation {
  ModalTrajectory F;
  std::shared_ptr<const WSolution> w;
};

// s -> P_N f - nu A v(s) - P_N B(phi v(s) + W(v)(s)).
FEvaluation F_evaluate(const ModalTrajectory& v, const FlowConfig& cfg,
                       const WSolveOptions& opt = {});
ModalTrajectory F_eval(const ModalTrajectory& v, const FlowConfig& cfg,
                       const WSolveOptions& opt = {});

// One classical RK4 step in outer time, nodewise in s.
DetFormState detform_step(const DetFormState& state, double dt_outer, const FlowConfig& cfg,
                          const DetFormOptions& opt = {});

using DetFormObserver = std::function<void(const DetFormState&)>;

// round(t_final / dt_outer) steps; t_final must be a multiple of dt_outer.
// The observer sees the initial state and every record_every-th state.
DetFormState detform_evolve(DetFormState state, double t_final, double dt_outer,
                            const FlowConfig& cfg, const DetFormOptions& opt = {},
                            int record_every = 1, const DetFormObserver& observer = {});

// max over states of sup_s ||v(t,s) - v(t0, s + t - t0)||. Outer times must be
// multiples of ds. Windowed grids compare the nodes past the burn-in whose
// shifted partner lies inside the window.
double traveling_wave_residual(const std::vector<DetFormState>& states);

struct StationaryReport {
  double algebraic_residual = 0;  // sup_s |nu A v0 - g + P_N B(phi v0 + w0)|
  double ode_residual = 0;        // sup_s |dw0/ds + nu A w0 - h + Q_N B(phi v0 + w0)|
  double energy_residual = 0;
  double enstrophy_residual = 0;
  std::vector<double> s;
  std::vector<double> chi_u;  // ||u0||^2 / |u0|
  std::vector<double> chi_w;  // ||w0||^2 / |w0| (0 where w0 = 0)
  double reference = 0;       // |f| / nu
  std::shared_ptr<const WSolution> w;
};

// Residuals of the stationary pair (v0, W(v0)). s-derivatives are centered
// differences (interior nodes past the burn-in on windowed grids).
StationaryReport stationary_residuals(const ModalTrajectory& v0, const FlowConfig& cfg,
                                      const WSolveOptions& opt = {});

struct IntegralResidual {
  double residual = 0;  // sup_s ||v(s) - integral representation(s)||
  double horizon = 0;
  double tail_bound = 0;  // e^{-nu kappa0^2 horizon}
  bool horizon_short = false;
};

// Residual of v(s) = int_{-inf}^s e^{-nu (s - sigma) A} [g - P_N B(phi v + W(v))] dsigma
// on a periodic grid. The integrand is linear between nodes and integrated
// exactly against the kernel; horizon 0 picks the point where the slowest
// kernel falls below 1e-12.
IntegralResidual integral_representation_residual(const ModalTrajectory& v, const FlowConfig& cfg,
                                                  double horizon = 0.0,
                                                  const WSolveOptions& opt = {});

// Integrates the NSE from u_start at s_lo through every node of g and
// returns P_N u(s_j). Steps are ds / m with m = ceil(ds / cfg.dt). When full
// is given it receives u(s_j).
ModalTrajectory sample_solution(const SpectralField& u_start, const FlowConfig& cfg,
                                const SGrid& g, const ModeCut& cut,
                                std::vector<SpectralField>* full = nullptr);

}  // namespace detform
