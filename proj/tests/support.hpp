#pragma once

#include <cmath>

#include "detform/nse.hpp"

namespace testing_support {

using namespace detform;

// Flow forced on the single shear mode k = (0, m) with |f| = fnorm.
inline FlowConfig kolmogorov(int m, double fnorm, double nu = 1.0, int n = 32, double dt = 0.01) {
  FlowConfig cfg;
  cfg.nu = nu;
  cfg.grid.resolution = n;
  cfg.dt = dt;
  const double amp = fnorm * std::sqrt(2.0) / cfg.grid.box_length;
  cfg.force = shear_mode(cfg.grid, 0, m, amp);
  return cfg;
}

// Random low-mode force (|k| <= kf) rescaled to Grashof number G.
inline FlowConfig random_forced(double G, std::uint64_t seed, int kf = 4, double nu = 1.0,
                                int n = 64, double dt = 0.01) {
  FlowConfig cfg;
  cfg.nu = nu;
  cfg.grid.resolution = n;
  cfg.dt = dt;
  const double k0 = cfg.grid.kappa0();
  cfg.force = random_divfree_field(cfg.grid, seed, 0.0, ModeCut{kf});
  cfg.force *= G * nu * nu * k0 * k0;
  return cfg;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace testing_support
