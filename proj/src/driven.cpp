#include "driven.hpp"

#include <cmath>
#include <string>

namespace detform::detail {

int substeps_for(double ds, double dt) {
  require(ds > 0 && dt > 0, ErrorCode::InvalidArgument, "ds and dt must be positive");
  return std::max(1, static_cast<int>(std::ceil(ds / dt - 1e-9)));
}

SpectralField DrivenProblem::across(SpectralField w, std::size_t j) const {
  const int m = substeps;
  for (int r = 0; r < m; ++r) {
    w = stepper->step(w, [&](const SpectralField& x, double theta) {
      return nonlinear(x, j, (static_cast<double>(r) + theta) / static_cast<double>(m));
    });
  }
  check_finite(w, sgrid->s(j + 1), "driven solve");
  return w;
}

const SpectralField& LapResult::at(std::size_t j, std::size_t nodes) const {
  const std::size_t rel = (j + nodes - start % nodes) % nodes;
  return values[rel % period];
}

LapResult lap_solve(const DrivenProblem& p, std::size_t period, std::size_t start,
                    std::size_t nodes, const std::vector<SpectralField>* initial,
                    const SpectralField& cold_start, double tol, int max_laps) {
  LapResult res;
  res.period = period;
  res.start = start;
  std::vector<SpectralField> prev;
  SpectralField w = cold_start;
  if (initial && initial->size() == nodes) {
    for (std::size_t r = 0; r < period; ++r) prev.push_back((*initial)[(start + r) % nodes]);
    w = prev[0];
  }
  // A lap covers the full grid: nodes / period passes around the reduced
  // circle. Successive laps are compared on the final pass.
  const std::size_t passes = nodes / period;
  std::vector<SpectralField> cur(period);
  for (int lap = 1; lap <= max_laps; ++lap) {
    for (std::size_t k = 0; k < passes; ++k) {
      cur[0] = w;
      for (std::size_t r = 0; r < period; ++r) {
        w = p.across(std::move(w), (start + r) % nodes);
        if (r + 1 < period) cur[r + 1] = w;
      }
    }
    res.laps = lap;
    if (!prev.empty()) {
      double change = 0;
      for (std::size_t r = 0; r < period; ++r) change = std::max(change, l2_norm(cur[r] - prev[r]));
      res.change = change;
      if (change < tol) {
        res.converged = true;
        res.values = std::move(cur);
        return res;
      }
    }
    prev = cur;
  }
  throw NonConvergenceError(res.change, "periodic lap iteration did not converge after " +
                                            std::to_string(res.laps) + " laps, last change " +
                                            std::to_string(res.change));
}

void collect_node(WSolution& sol, const WSolveOptions& opt, std::size_t j,
                  const SpectralField& w) {
  if (j >= sol.first_valid) {
    const Norms n = norms(w);
    sol.sup_l2 = std::max(sol.sup_l2, n.l2);
    sol.sup_h1 = std::max(sol.sup_h1, n.h1);
    sol.sup_h2 = std::max(sol.sup_h2, n.h2);
  }
  if (opt.store_trajectory) sol.trajectory[j] = w;
  if (opt.observer) opt.observer(j, w);
}

void forward_solve(const DrivenProblem& p, const SGrid& g, SpectralField start,
                   const WSolveOptions& opt, WSolution& sol) {
  if (opt.store_trajectory) sol.trajectory.resize(g.nodes());
  collect_node(sol, opt, 0, start);
  for (std::size_t j = 0; j + 1 < g.nodes(); ++j) {
    start = p.across(std::move(start), j);
    collect_node(sol, opt, j + 1, start);
  }
}

void bounded_solve(const DrivenProblem& p, const ModalTrajectory& v, const SpectralField& zero,
                   const WSolveOptions& opt, WSolution& sol) {
  const SGrid& g = v.sgrid();
  sol.sgrid = g;
  sol.cut = v.cut();
  if (g.kind == SGridKind::Windowed) {
    sol.first_valid = g.first_valid();
    sol.burn_in_used = g.burn_in;
    forward_solve(p, g, zero, opt, sol);
    sol.converged = true;
    return;
  }
  const auto layout = circle_layout(v);
  const std::vector<SpectralField>* init = nullptr;
  if (opt.initial && opt.initial->stored() && opt.initial->sgrid == g &&
      opt.initial->cut.N == v.cut().N && opt.initial->at(0).grid() == zero.grid())
    init = &opt.initial->trajectory;
  const LapResult lap =
      lap_solve(p, layout.period, layout.start, g.nodes(), init, zero, opt.tol, opt.max_laps);
  sol.converged = lap.converged;
  sol.laps = lap.laps;
  sol.last_change = lap.change;
  if (opt.store_trajectory) sol.trajectory.resize(g.nodes());
  for (std::size_t j = 0; j < g.nodes(); ++j) collect_node(sol, opt, j, lap.at(j, g.nodes()));
}

}  // namespace detform::detail
