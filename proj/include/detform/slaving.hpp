#pragma once

// High modes slaved to a prescribed low-mode trajectory: the raw slaving
// equation and the cut-off W map.

#include <functional>
#include <optional>
#include <vector>

#include "detform/nse.hpp"
#include "detform/trajectory.hpp"

namespace detform {

// 1 on [0, 2G], 0 on [3G, inf), linear in between.
double cutoff_phi(double xi, double G);

struct WSolution {
  SGrid sgrid;
  ModeCut cut;
  // One field per s-node when stored; nodes before first_valid are burn-in.
  std::vector<SpectralField> trajectory;
  std::size_t first_valid = 0;
  double sup_h1 = 0;  // sup ||w(s)|| past burn-in
  double sup_l2 = 0;  // |w|_Y
  double sup_h2 = 0;  // sup |A w(s)|
  bool converged = false;
  double burn_in_used = 0;
  int laps = 0;
  double last_change = 0;       // sup-|.| difference of the last two laps
  long cutoff_engaged = 0;      // stage evaluations with phi < 1
  bool conditions_pass = false; // gn_condition4 with the configured constants
  // Bound diagnostics, present when conditions_pass.
  std::optional<double> h1_bound, l2_bound, h2_bound;
  std::optional<bool> h1_bound_ok, l2_bound_ok, h2_bound_ok;

  bool stored() const { return !trajectory.empty(); }
  const SpectralField& at(std::size_t j) const { return trajectory.at(j); }
};

using NodeObserver = std::function<void(std::size_t, const SpectralField&)>;

struct WSolveOptions {
  double tol = 1e-10;
  int max_laps = 50;
  bool store_trajectory = true;
  // When false a failed gn_condition4 is only recorded, not raised.
  bool require_conditions = true;
  Hold hold = Hold::Cubic;
  // Called with every node value of the final pass, in s order.
  NodeObserver observer;
  // Warm start for periodic grids: used as the first lap.
  const WSolution* initial = nullptr;
};

// Integrates dq/ds + nu A q = Q_N f - Q_N B(v(s) + q) from q(s_0) = q0 across
// the grid once (periodic grids: one lap). No cut-off.
WSolution slaved_high_modes(const ModalTrajectory& v, const SpectralField& q0,
                            const FlowConfig& cfg, const WSolveOptions& opt = {});

// Bounded solution of dw/ds + nu A w + Q_N B(phi v + w) = Q_N f.
WSolution w_map_solve(const ModalTrajectory& v, const FlowConfig& cfg,
                      const WSolveOptions& opt = {});

// Default windowed burn-in 5 * 10 / (nu kappa0^2 (N+1)^2).
double default_burn_in(const FlowConfig& cfg, const ModeCut& cut);

// max over post-burn-in nodes with s <= s0 of ||W(v1)(s) - W(v2)(s)||.
double w_causality_probe(const ModalTrajectory& v1, const ModalTrajectory& v2, double s0,
                         const FlowConfig& cfg, const WSolveOptions& opt = {});

struct LipschitzProbe {
  double empirical_ratio = 0;
  std::optional<double> formula_LW;
  int pairs_used = 0;
};

LipschitzProbe w_lipschitz_probe(
    const std::vector<std::pair<ModalTrajectory, ModalTrajectory>>& pairs, const FlowConfig& cfg,
    const WSolveOptions& opt = {});

namespace detail {
// Minimal period (in nodes) of a periodic trajectory and the canonical
// starting node: the least rotation of the node sequence.
struct CircleLayout {
  std::size_t period = 0;
  std::size_t start = 0;
};
CircleLayout circle_layout(const ModalTrajectory& v);
}  // namespace detail

}  // namespace detform
