#pragma once

// Time stepping of equations driven by a low-mode trajectory on an s-grid:
// forward marches on windows and lap iteration on periodic circles.

#include <functional>
#include <optional>
#include <vector>

#include "detform/slaving.hpp"
#include "detform/trajectory.hpp"
#include "stepper.hpp"

namespace detform::detail {

// Right-hand side nonlinearity at state x inside interval j, at fraction
// frac in [0, 1] of that interval.
using DrivenNonlinear =
    std::function<SpectralField(const SpectralField& x, std::size_t j, double frac)>;

struct DrivenProblem {
  const Stepper* stepper = nullptr;
  int substeps = 1;
  DrivenNonlinear nonlinear;
  const SGrid* sgrid = nullptr;

  // Advances w across interval j.
  SpectralField across(SpectralField w, std::size_t j) const;
};

// Substeps per interval so that ds / m <= dt.
int substeps_for(double ds, double dt);

struct LapResult {
  std::vector<SpectralField> values;  // nodes start .. start + period - 1
  std::size_t period = 0;
  std::size_t start = 0;
  bool converged = false;
  int laps = 0;
  double change = 0;

  // Value at full-grid node j (tiles the reduced circle).
  const SpectralField& at(std::size_t j, std::size_t nodes) const;
};

// Lap iteration on a periodic grid. The layout (period, start) comes from the
// driving trajectory. initial, when given, holds one value per full-grid node
// and serves as the first lap; otherwise the iteration starts from cold_start.
LapResult lap_solve(const DrivenProblem& p, std::size_t period, std::size_t start,
                    std::size_t nodes, const std::vector<SpectralField>* initial,
                    const SpectralField& cold_start, double tol, int max_laps);

// Per-node bookkeeping of a solve: sup norms past first_valid, storage and
// the observer.
void collect_node(WSolution& sol, const WSolveOptions& opt, std::size_t j,
                  const SpectralField& w);

// One pass from start across every interval of g.
void forward_solve(const DrivenProblem& p, const SGrid& g, SpectralField start,
                   const WSolveOptions& opt, WSolution& sol);

// Bounded solution on the driver's s-grid: a march from zero past the
// burn-in on windows, lap iteration on periodic grids.
void bounded_solve(const DrivenProblem& p, const ModalTrajectory& v, const SpectralField& zero,
                   const WSolveOptions& opt, WSolution& sol);

}  // namespace detform::detail
