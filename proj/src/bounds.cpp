#include "detform/bounds.hpp"

#include <cmath>
#include <cstdio>

namespace detform {

double ln_eN(std::int64_t N) {
  require(N >= 1, ErrorCode::InvalidArgument, "N must be >= 1");
  return 1.0 + std::log(static_cast<double>(N));
}

double beta(double G, std::int64_t N, double ratio_hf, const Constants& c) {
  const double denom = static_cast<double>(N) - 3.0 * c.c_L * G;
  if (!(denom > 0))
    fail(ErrorCode::UndefinedBound, "beta(G,N) undefined: N <= 3 c_L G");
  return (9.0 * c.c_T * G * std::sqrt(ln_eN(N)) + ratio_hf) / denom;
}

std::int64_t min_determining_N(double G, const Constants& c) {
  require(G > 0 && std::isfinite(G), ErrorCode::InvalidArgument, "G must be positive");
  return static_cast<std::int64_t>(std::floor(c.c_L * G)) + 1;
}

double absorbing_radius(double G, std::int64_t N, double ratio_gf, double ratio_hf,
                        const Constants& c, double nu, double kappa0) {
  const double b = beta(G, N, ratio_hf, c);
  return nu * kappa0 * G * (ratio_gf + c.c_T * std::sqrt(ln_eN(N)) * G * (6.0 + b) * b);
}

std::int64_t big_N_threshold(double G, double gamma, const Constants& c) {
  require(G > 0 && gamma > 0, ErrorCode::InvalidArgument, "G and gamma must be positive");
  // The right side grows only like a power of log N, so the iteration is
  // monotone and settles in a handful of rounds.
  std::int64_t N = 1;
  for (int it = 0; it < 200; ++it) {
    const double rhs = std::pow(6.0 * c.c_T * G * std::sqrt(ln_eN(N)), gamma);
    const auto next = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(rhs)));
    if (next == N) return N;
    N = next;
  }
  fail(ErrorCode::NonConvergence, "big-N threshold iteration did not settle");
}

BoundsReport check_conditions(const BoundsInput& in) {
  require(in.G > 0 && std::isfinite(in.G), ErrorCode::InvalidArgument, "G must be positive");
  require(in.N >= 1, ErrorCode::InvalidArgument, "N must be >= 1");
  const Constants& c = in.constants;
  const double G = in.G;
  const double N = static_cast<double>(in.N);
  const double le = ln_eN(in.N);
  const double sle = std::sqrt(le);

  BoundsReport r;
  r.G = G;
  r.N = in.N;
  BoundsFlags& f = r.flags;
  f.determining = N > c.c_L * G;
  f.gn1 = N > 3.0 * c.c_L * G;
  f.finalbound = N > in.epsilon * G * G * sle;
  if (in.gamma) f.big_N = N >= std::pow(6.0 * c.c_T * G * sle, *in.gamma);
  if (in.mu) {
    r.alpha = 1.0 - 2.0 * c.c_L * c.c_L * G * G + 2.0 * *in.mu;
    f.mucond2 = *r.alpha > 0;
    f.mucond = *in.mu / ((N + 1) * (N + 1)) <= 0.25;
  }
  const double k0 = in.kappa0, nu = in.nu;
  r.T_abs = std::max(1.0, in.u0_h1 > 0
                              ? std::log(in.u0_h1 * in.u0_h1 / (3 * nu * nu * k0 * k0 * G * G))
                              : -1.0) /
            (nu * k0 * k0);

  if (!f.gn1) return r;
  const double b = beta(G, in.N, in.ratio_hf, c);
  r.beta = b;
  f.gn2 = N > c.c_L * G * (3.0 + b);
  f.gn3 = N > G * (3.0 + b) * (c.c_A + c.c_L);
  f.gn4 = N > G * (9.0 + b) * (c.c_A + c.c_L);
  f.bound_A_N = N > c.c_L * G * (9.0 + b);
  f.agmon_ball = N > c.c_B * G * b * sle;
  f.constcond = N >= c.c_T_prime * G * b * le;
  f.lastbound1 = N > 2.0 * c.c_T * G * b * sle;
  const double c1 = 2.0 * sle * (G / N) * (c.c_T * b + c.c_B / N);
  const bool lb2a = N * N > 2.0 * G * (c.c_T * c1 * sle + c.c_L);
  const bool lb2b =
      N > 2.0 * c.c_T * c1 * (G + c.c_T * sle * G * G * (6.0 + b) * b + G * b);
  f.lastbound2 = lb2a && lb2b;

  r.r0 = nu * k0 * G * (in.ratio_gf + c.c_T * sle * G * (6.0 + b) * b);
  const double vden = 1.0 - c.c_B * (G * b / N) * sle;
  if (vden > 0) r.v_radius = nu * G * (in.ratio_gf + c.c_L * G * b * b / N) / vden;
  const double lden = N - G * (3.0 + b) * (c.c_A + c.c_L);
  if (lden > 0) r.L_W = 4.0 * G * (3.0 + b) * sle * (c.c_T + c.c_B) / lden;
  const double gden = N - c.c_L * G * (9.0 + b);
  if (gden > 0 && in.h_h1)
    r.Gamma = (*in.h_h1 + 9.0 * nu * nu * k0 * k0 * k0 * G * G * N * (c.c_T * sle + c.c_L)) /
              (nu * k0 * gden);
  return r;
}

namespace {
std::string num(const std::optional<double>& x) {
  if (!x) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *x);
  return buf;
}
std::string flag(bool b) { return b ? "true" : "false"; }
std::string flag(const std::optional<bool>& b) { return b ? flag(*b) : "undefined"; }
}  // namespace

std::string BoundsReport::to_text() const {
  const BoundsFlags& f = flags;
  std::string s;
  auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
  kv("G", num(G));
  kv("N", std::to_string(N));
  kv("beta", num(beta));
  kv("r0", num(r0));
  kv("v_radius", num(v_radius));
  kv("L_W", num(L_W));
  kv("Gamma", num(Gamma));
  kv("alpha", num(alpha));
  kv("T_abs", num(T_abs));
  kv("determining", flag(f.determining));
  kv("gn_condition1", flag(f.gn1));
  kv("gn_condition2", flag(f.gn2));
  kv("gn_condition3", flag(f.gn3));
  kv("gn_condition4", flag(f.gn4));
  kv("bound_A_N", flag(f.bound_A_N));
  kv("agmon_ball", flag(f.agmon_ball));
  kv("big_N", flag(f.big_N));
  kv("constcond", flag(f.constcond));
  kv("lastbound1", flag(f.lastbound1));
  kv("lastbound2", flag(f.lastbound2));
  kv("finalbound", flag(f.finalbound));
  kv("mucond", flag(f.mucond));
  kv("mucond2", flag(f.mucond2));
  return s;
}

std::string BoundsReport::csv_header() {
  return "G,N,beta,r0,v_radius,L_W,Gamma,alpha,T_abs,determining,gn_condition1,gn_condition2,"
         "gn_condition3,gn_condition4,bound_A_N,agmon_ball,big_N,constcond,lastbound1,"
         "lastbound2,finalbound,mucond,mucond2";
}

std::string BoundsReport::csv_row() const {
  const BoundsFlags& f = flags;
  std::string s = num(G) + "," + std::to_string(N);
  for (const auto& x : {beta, r0, v_radius, L_W, Gamma, alpha, T_abs}) s += "," + num(x);
  for (bool b : {f.determining, f.gn1, f.gn2, f.gn3, f.gn4, f.bound_A_N, f.agmon_ball})
    s += "," + flag(b);
  s += "," + flag(f.big_N);
  for (bool b : {f.constcond, f.lastbound1, f.lastbound2, f.finalbound}) s += "," + flag(b);
  s += "," + flag(f.mucond) + "," + flag(f.mucond2);
  return s;
}

}  // namespace detform
