#pragma once

// Shared one-step scheme for du/ds = -L u + c + N(u, theta), L diagonal and
// nonnegative, c constant, theta in [0, 1] the stage position inside the step.

#include <functional>
#include <vector>

#include "detform/nse.hpp"
#include "detform/spectral.hpp"

namespace detform::detail {

using Nonlinear = std::function<SpectralField(const SpectralField&, double)>;

class Stepper {
 public:
  Stepper(const GridSpec& grid, std::vector<double> rate, const SpectralField& forcing, double dt,
          Integrator scheme);

  SpectralField step(const SpectralField& u, const Nonlinear& n) const;
  double dt() const { return dt_; }

 private:
  SpectralField step_if(const SpectralField& u, const Nonlinear& n) const;
  SpectralField step_imex(const SpectralField& u, const Nonlinear& n) const;
  void scale(SpectralField& u, const std::vector<double>& f) const;

  GridSpec grid_;
  double dt_;
  Integrator scheme_;
  std::vector<double> rate_;
  std::vector<double> e1_, e2_;        // exp(-L dt), exp(-L dt/2)
  std::vector<double> imp_;            // 1 / (1 + gamma dt L)
  SpectralField forcing_;
  SpectralField shift_;                // c / L where L > 0
  SpectralField residual_forcing_;     // part of c on L = 0
  bool has_residual_forcing_ = false;
};

// nu kappa0^2 |k|^2 on every stored mode.
std::vector<double> stokes_rate(const GridSpec& grid, double nu);

Stepper nse_stepper(const FlowConfig& cfg, double dt);

// Checks finiteness after a step.
void check_finite(const SpectralField& u, double t, const char* what);

}  // namespace detform::detail
