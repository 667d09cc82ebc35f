#pragma once

// Closed-form thresholds and radii for the determining-form construction.
// Everything here is plain arithmetic on (G, N) and the constant table.

#include <cstdint>
#include <optional>
#include <string>

#include "detform/nse.hpp"

namespace detform {

// ln(eN) = 1 + ln N.
double ln_eN(std::int64_t N);

// (9 c_T G ln(eN)^{1/2} + ratio_hf) / (N - 3 c_L G); UndefinedBound when N <= 3 c_L G.
double beta(double G, std::int64_t N, double ratio_hf, const Constants& c);

// Smallest N with N > c_L G.
std::int64_t min_determining_N(double G, const Constants& c);

// nu kappa0 G [ratio_gf + c_T ln(eN)^{1/2} G (6 + beta) beta]; UndefinedBound when beta is.
double absorbing_radius(double G, std::int64_t N, double ratio_gf, double ratio_hf,
                        const Constants& c, double nu = 1.0, double kappa0 = 1.0);

// Smallest N satisfying N >= (6 c_T G ln(eN)^{1/2})^gamma.
std::int64_t big_N_threshold(double G, double gamma, const Constants& c);

struct BoundsInput {
  double G = 1.0;
  std::int64_t N = 1;
  double ratio_hf = 1.0;  // |h| / |f|
  double ratio_gf = 1.0;  // |g| / |f|
  std::optional<double> mu;
  std::optional<double> gamma;
  double epsilon = 1.0;   // finalbound
  Constants constants;
  double nu = 1.0;
  double kappa0 = 1.0;
  std::optional<double> h_h1;   // ||h||, needed for Gamma
  double u0_h1 = 0.0;           // for the absorption time
};

struct BoundsFlags {
  bool determining = false;   // N > c_L G
  bool gn1 = false;           // N > 3 c_L G
  bool gn2 = false;           // N > c_L G (3 + beta)
  bool gn3 = false;           // N > G (3 + beta)(c_A + c_L)
  bool gn4 = false;           // N > G (9 + beta)(c_A + c_L)
  bool bound_A_N = false;     // N > c_L G (9 + beta)
  bool agmon_ball = false;    // N > c_B G beta ln(eN)^{1/2}
  std::optional<bool> big_N;  // N >= (6 c_T G ln(eN)^{1/2})^gamma
  bool constcond = false;     // N >= c'_T G beta ln(eN)
  bool lastbound1 = false;    // N > 2 c_T G beta ln(eN)^{1/2}
  bool lastbound2 = false;
  bool finalbound = false;    // N > eps G^2 ln(eN)^{1/2}
  std::optional<bool> mucond;   // mu / (N+1)^2 <= 1/4
  std::optional<bool> mucond2;  // alpha > 0
};

struct BoundsReport {
  double G = 0;
  std::int64_t N = 0;
  std::optional<double> beta, r0, v_radius, L_W, Gamma, alpha, T_abs;
  BoundsFlags flags;

  // One key=value per line; undefined values print as "undefined".
  std::string to_text() const;
  static std::string csv_header();
  std::string csv_row() const;
};

BoundsReport check_conditions(const BoundsInput& in);

}  // namespace detform
