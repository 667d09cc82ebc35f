#pragma once

// Nudged NSE for low-mode data assimilation, the W-tilde map, the alternate
// determining form and the eliminated stationary equation.

#include <optional>
#include <string>
#include <vector>

#include "detform/determining_form.hpp"
#include "detform/nse.hpp"
#include "detform/slaving.hpp"
#include "detform/trajectory.hpp"

namespace detform {

struct NudgeConfig {
  double mu = 0;  // dimensionless damping; 0 switches the feedback off
  ModeCut cut;
  FlowConfig flow;

  // Flow invariants, mu >= 0, and kappa0^2 mu away from the spectrum of A.
  void validate() const;
};

struct NudgeFlags {
  double alpha = 0;  // 1 - 2 c_L^2 G^2 + 2 mu
  bool mucond2 = false;  // alpha > 0
  bool mucond = false;   // mu / (N+1)^2 <= 1/4
  bool pass() const { return mucond2 && mucond; }
};

NudgeFlags nudge_flags(const NudgeConfig& ncfg);

// True when mu is within tol of some a^2 + b^2 > 0.
bool near_lattice_norm(double mu, double tol = 1e-9);

struct DeltaSeries {
  std::vector<double> s;
  std::vector<double> l2;  // |delta|
  std::vector<double> h1;  // ||delta||
  bool against_reference = false;

  // Header s,delta_l2,delta_h1.
  std::string to_csv() const;
};

struct NudgeOptions {
  Hold hold = Hold::Cubic;
  // Full reference fields u(s_j); if absent delta is P_N(w - v).
  const std::vector<SpectralField>* reference = nullptr;
};

struct NudgeResult {
  SpectralField final_state;
  DeltaSeries delta;
};

// dw/ds + nu A w + B(w) = f - nu kappa0^2 mu P_N (w - v) across the observed
// grid, with the feedback implicit alongside nu A.
NudgeResult nudge_integrate(const ModalTrajectory& observed, const SpectralField& w0,
                            const NudgeConfig& ncfg, const NudgeOptions& opt = {});

struct DecayFit {
  double slope = 0;
  double intercept = 0;
  int points = 0;
  double floor = 0;
  bool ok = false;  // at least 3 points in the fit window
};

// Least squares of log|delta| on the samples with |delta| in
// [100 floor, 0.1 |delta_0|]; floor <= 0 uses the smallest positive sample.
DecayFit fit_decay(const std::vector<double>& s, const std::vector<double>& delta,
                   double floor = 0.0);

// Bounded solution of dw/ds + nu A w + B(w) = f - nu kappa0^2 mu P_N (w - v)
// with the same march / lap strategy as the W map. The result holds full
// fields. h1_bound is |f|/(nu kappa0) + mu ||v||_X. Failing nudge flags raise
// a precondition error unless opt.require_conditions is false.
WSolution w_tilde_solve(const ModalTrajectory& v, const NudgeConfig& ncfg,
                        const WSolveOptions& opt = {});

// s -> P_N f - nu A v(s) - P_N B(W~(v)(s)); no cut-off.
FEvaluation detform2_rhs(const ModalTrajectory& v, const NudgeConfig& ncfg,
                         const WSolveOptions& opt = {});

// sup over post-burn-in nodes of |P_N (v(s) - w(s))|.
double xi_decay_check(const ModalTrajectory& v, const WSolution& w);

struct EdrissResidual {
  double residual = 0;     // sup_s of the eliminated equation residual
  double elimination = 0;  // sup_s |P_N f - nu A v - P_N B(w)| with v eliminated
  double xi = 0;           // sup_s |v - P_N w| with v eliminated
};

// Residual of dw/ds + nu [A + kappa0^2 mu P_N] w + [I + kappa0^2 mu P_N A^-1 P_N] B(w)
// = [I + kappa0^2 mu P_N A^-1 P_N] f for full fields sampled on g.
// Centered differences in s; a single node or a constant series has no
// s-derivative content.
EdrissResidual stat_edriss_residual(const SGrid& g, const std::vector<SpectralField>& w,
                                    const NudgeConfig& ncfg);

}  // namespace detform
