#include "stepper.hpp"

#include <cmath>
#include <string>

namespace detform::detail {

namespace {
const double kGamma = 1.0 - 1.0 / std::sqrt(2.0);
const double kDelta = 1.0 - 1.0 / (2.0 * kGamma);
}  // namespace

std::vector<double> stokes_rate(const GridSpec& grid, double nu) {
  const ModeTable& t = mode_table(grid);
  const double k0sq = grid.kappa0() * grid.kappa0();
  std::vector<double> r(t.ksq.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = nu * k0sq * t.ksq[i];
  return r;
}

Stepper::Stepper(const GridSpec& grid, std::vector<double> rate, const SpectralField& forcing,
                 double dt, Integrator scheme)
    : grid_(grid), dt_(dt), scheme_(scheme), rate_(std::move(rate)) {
  require(dt > 0 && std::isfinite(dt), ErrorCode::InvalidArgument, "time step must be positive");
  require(rate_.size() == grid.modes(), ErrorCode::InvalidArgument, "rate table size mismatch");
  forcing_ = forcing.empty() ? SpectralField(grid) : forcing;
  require(forcing_.grid() == grid, ErrorCode::GridMismatch, "forcing grid mismatch");
  const std::size_t m = rate_.size();
  e1_.resize(m);
  e2_.resize(m);
  imp_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    e1_[i] = std::exp(-rate_[i] * dt);
    e2_[i] = std::exp(-rate_[i] * dt * 0.5);
    imp_[i] = 1.0 / (1.0 + kGamma * dt * rate_[i]);
  }
  shift_ = SpectralField(grid);
  residual_forcing_ = SpectralField(grid);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      const cplx f = forcing_.at(c, i);
      if (f == cplx{}) continue;
      if (rate_[i] > 0) {
        shift_.at(c, i) = f / rate_[i];
      } else {
        residual_forcing_.at(c, i) = f;
        has_residual_forcing_ = true;
      }
    }
  }
}

void Stepper::scale(SpectralField& u, const std::vector<double>& f) const {
  for (int c = 0; c < 2; ++c) {
    auto comp = u.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= f[i];
  }
}

SpectralField Stepper::step(const SpectralField& u, const Nonlinear& n) const {
  require(u.grid() == grid_, ErrorCode::GridMismatch, "state grid differs from stepper grid");
  return scheme_ == Integrator::IntegratingFactor ? step_if(u, n) : step_imex(u, n);
}

// Lawson RK4 on the deviation from the Stokes solution c / L, which makes
// steady Stokes states and free linear decay exact.
SpectralField Stepper::step_if(const SpectralField& u, const Nonlinear& n) const {
  const double h = dt_;
  auto eval = [&](const SpectralField& dev, double theta) {
    SpectralField k = n(dev + shift_, theta);
    if (has_residual_forcing_) k += residual_forcing_;
    return k;
  };
  const SpectralField d = u - shift_;
  const SpectralField k1 = eval(d, 0.0);

  SpectralField a = d;
  a.axpy(0.5 * h, k1);
  scale(a, e2_);
  const SpectralField k2 = eval(a, 0.5);

  SpectralField ed2 = d;
  scale(ed2, e2_);
  SpectralField b = ed2;
  b.axpy(0.5 * h, k2);
  const SpectralField k3 = eval(b, 0.5);

  SpectralField ed = d;
  scale(ed, e1_);
  SpectralField ek3 = k3;
  scale(ek3, e2_);
  SpectralField c = ed;
  c.axpy(h, ek3);
  const SpectralField k4 = eval(c, 1.0);

  SpectralField ek1 = k1;
  scale(ek1, e1_);
  SpectralField mid = k2 + k3;
  scale(mid, e2_);
  SpectralField incr = ek1;
  incr.axpy(2.0, mid);
  incr += k4;
  SpectralField out = ed;
  out.axpy(h / 6.0, incr);
  out += shift_;
  return out;
}

SpectralField Stepper::step_imex(const SpectralField& u, const Nonlinear& n) const {
  const double h = dt_;
  auto eval = [&](const SpectralField& s, double theta) {
    SpectralField k = n(s, theta);
    k += forcing_;
    return k;
  };
  const SpectralField k0 = eval(u, 0.0);
  SpectralField u1 = u;
  u1.axpy(kGamma * h, k0);
  scale(u1, imp_);
  const SpectralField k1 = eval(u1, kGamma);
  SpectralField lu1 = u1;
  scale(lu1, rate_);
  SpectralField u2 = u;
  u2.axpy(h * kDelta, k0);
  u2.axpy(h * (1.0 - kDelta), k1);
  u2.axpy(-h * (1.0 - kGamma), lu1);
  scale(u2, imp_);
  return u2;
}

Stepper nse_stepper(const FlowConfig& cfg, double dt) {
  return Stepper(cfg.grid, stokes_rate(cfg.grid, cfg.nu), cfg.force, dt, cfg.integrator);
}

void check_finite(const SpectralField& u, double t, const char* what) {
  if (!u.all_finite())
    throw BlowUpError(t, std::string(what) + ": nonfinite coefficient at t=" + std::to_string(t));
}

}  // namespace detform::detail
