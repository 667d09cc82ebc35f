#include "detform/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "fft.hpp"

namespace detform {

int GridSpec::dealias_kmax() const {
  const int k = static_cast<int>(std::floor(dealias_fraction * resolution / 2.0 + 1e-9));
  return std::min(k, resolution / 2 - 1);
}

double GridSpec::dealias_radius() const { return std::sqrt(2.0) * dealias_kmax(); }

void GridSpec::validate() const {
  require(resolution >= 8 && resolution % 2 == 0, ErrorCode::InvalidArgument,
          "grid resolution must be even and >= 8, got " + std::to_string(resolution));
  require(std::isfinite(box_length) && box_length > 0, ErrorCode::InvalidArgument,
          "box length must be positive");
  require(dealias_fraction > 0 && dealias_fraction <= 1, ErrorCode::InvalidArgument,
          "dealias fraction must lie in (0, 1]");
}

void ModeCut::validate(const GridSpec& grid) const {
  require(N >= 1, ErrorCode::InvalidArgument, "mode cut N must be >= 1");
  require(N < grid.dealias_radius(), ErrorCode::InvalidArgument,
          "mode cut N=" + std::to_string(N) + " leaves no retained high modes on a " +
              std::to_string(grid.resolution) + "^2 grid");
}

const ModeTable& mode_table(const GridSpec& grid) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::unique_ptr<ModeTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(grid.resolution, grid.dealias_fraction);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  auto t = std::make_unique<ModeTable>();
  const int n = grid.resolution;
  const int cols = grid.columns();
  const int kmax = grid.dealias_kmax();
  const std::size_t m = grid.modes();
  t->k1.resize(m);
  t->k2.resize(m);
  t->ksq.resize(m);
  t->weight.resize(m);
  t->kept.resize(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cols; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * cols + j;
      const int k1 = wavenumber(i, n);
      const int k2 = j;
      t->k1[idx] = k1;
      t->k2[idx] = k2;
      t->ksq[idx] = static_cast<double>(k1 * k1 + k2 * k2);
      t->weight[idx] = (j == 0 || j == n / 2) ? 1.0 : 2.0;
      t->kept[idx] = (std::abs(k1) <= kmax && k2 <= kmax && (k1 != 0 || k2 != 0)) ? 1 : 0;
    }
  }
  return *cache.emplace(key, std::move(t)).first->second;
}

SpectralField::SpectralField(const GridSpec& grid) : grid_(grid) {
  grid_.validate();
  c_.assign(2 * grid_.modes(), cplx{});
}

std::array<cplx, 2> SpectralField::coefficient(int k1, int k2) const {
  const int n = grid_.resolution;
  if (k2 < 0) {
    auto c = coefficient(-k1, -k2);
    return {std::conj(c[0]), std::conj(c[1])};
  }
  if (k2 > n / 2 || k1 < -n / 2 || k1 >= n / 2) return {cplx{}, cplx{}};
  const int i = k1 >= 0 ? k1 : k1 + n;
  const std::size_t idx = index(i, k2);
  return {at(0, idx), at(1, idx)};
}

void SpectralField::set_coefficient(int k1, int k2, cplx c1, cplx c2) {
  const int n = grid_.resolution;
  if (k2 < 0) {
    set_coefficient(-k1, -k2, std::conj(c1), std::conj(c2));
    return;
  }
  require(k2 <= n / 2 && k1 >= -n / 2 && k1 < n / 2, ErrorCode::InvalidArgument,
          "wavevector outside the stored lattice");
  const int i = k1 >= 0 ? k1 : k1 + n;
  at(0, i, k2) = c1;
  at(1, i, k2) = c2;
  if (k2 == 0 && k1 != 0 && k1 != -n / 2) {
    const int ic = -k1 >= 0 ? -k1 : -k1 + n;
    at(0, ic, 0) = std::conj(c1);
    at(1, ic, 0) = std::conj(c2);
  }
}

bool SpectralField::all_finite() const {
  return std::all_of(c_.begin(), c_.end(), [](const cplx& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

void SpectralField::set_zero() { std::fill(c_.begin(), c_.end(), cplx{}); }

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_grid(*this, o, "field addition");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_grid(*this, o, "field subtraction");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& z : c_) z *= s;
  return *this;
}

SpectralField& SpectralField::axpy(double s, const SpectralField& o) {
  require_same_grid(*this, o, "field axpy");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
  return *this;
}

void require_same_grid(const SpectralField& a, const SpectralField& b, const char* op) {
  if (!a.same_grid(b)) fail(ErrorCode::GridMismatch, std::string("grid mismatch in ") + op);
}

SpectralField dealias(SpectralField u) {
  const ModeTable& t = mode_table(u.grid());
  for (int c = 0; c < 2; ++c) {
    auto comp = u.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i)
      if (!t.kept[i]) comp[i] = cplx{};
  }
  return u;
}

void enforce_reality(SpectralField& u) {
  const int n = u.grid().resolution;
  for (int c = 0; c < 2; ++c) {
    u.at(c, 0, 0) = cplx{};
    for (int k1 = 1; k1 < n / 2; ++k1) u.at(c, n - k1, 0) = std::conj(u.at(c, k1, 0));
    u.at(c, n / 2, 0) = cplx{u.at(c, n / 2, 0).real(), 0.0};
  }
}

SpectralField leray_project(SpectralField u) {
  const ModeTable& t = mode_table(u.grid());
  auto a = u.component(0);
  auto b = u.component(1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (t.ksq[i] == 0.0) {
      a[i] = b[i] = cplx{};
      continue;
    }
    const double k1 = t.k1[i], k2 = t.k2[i];
    const cplx dot = (k1 * a[i] + k2 * b[i]) / t.ksq[i];
    a[i] -= k1 * dot;
    b[i] -= k2 * dot;
  }
  return u;
}

namespace {

struct Workspace {
  std::vector<cplx> spec;
  std::vector<double> p[6];
};
thread_local Workspace ws;

void prepare(int n) {
  const std::size_t m = static_cast<std::size_t>(n) * (n / 2 + 1);
  ws.spec.resize(m);
  for (auto& v : ws.p) v.resize(static_cast<std::size_t>(n) * n);
}

// Writes factor(idx) * src[idx] into the scratch spectrum and transforms it.
template <class Factor>
void physical_of(std::span<const cplx> src, Factor factor, std::vector<double>& out, int n) {
  for (std::size_t i = 0; i < src.size(); ++i) ws.spec[i] = factor(i) * src[i];
  fft::to_physical(ws.spec.data(), out.data(), n);
}

SpectralField spectral_of(const std::vector<double>& a, const std::vector<double>& b,
                          const GridSpec& grid) {
  SpectralField out(grid);
  const int n = grid.resolution;
  const double scale = 1.0 / (static_cast<double>(n) * n);
  fft::to_spectral(a.data(), out.component(0).data(), n);
  fft::to_spectral(b.data(), out.component(1).data(), n);
  out *= scale;
  out = leray_project(dealias(std::move(out)));
  enforce_reality(out);
  return out;
}

}  // namespace

SpectralField bilinear(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u, v, "bilinear");
  const GridSpec& g = u.grid();
  const int n = g.resolution;
  const ModeTable& t = mode_table(g);
  const double k0 = g.kappa0();
  const SpectralField ut = dealias(u);
  const SpectralField vt = dealias(v);
  prepare(n);
  auto one = [](std::size_t) { return cplx{1.0, 0.0}; };
  auto d1 = [&](std::size_t i) { return cplx{0.0, k0 * t.k1[i]}; };
  auto d2 = [&](std::size_t i) { return cplx{0.0, k0 * t.k2[i]}; };
  physical_of(ut.component(0), one, ws.p[0], n);
  physical_of(ut.component(1), one, ws.p[1], n);
  physical_of(vt.component(0), d1, ws.p[2], n);
  physical_of(vt.component(0), d2, ws.p[3], n);
  physical_of(vt.component(1), d1, ws.p[4], n);
  physical_of(vt.component(1), d2, ws.p[5], n);
  const std::size_t np = static_cast<std::size_t>(n) * n;
  for (std::size_t x = 0; x < np; ++x) {
    const double a1 = ws.p[0][x], a2 = ws.p[1][x];
    const double n1 = a1 * ws.p[2][x] + a2 * ws.p[3][x];
    const double n2 = a1 * ws.p[4][x] + a2 * ws.p[5][x];
    ws.p[2][x] = n1;
    ws.p[4][x] = n2;
  }
  return spectral_of(ws.p[2], ws.p[4], g);
}

SpectralField bilinear_self(const SpectralField& u) {
  const GridSpec& g = u.grid();
  const int n = g.resolution;
  const ModeTable& t = mode_table(g);
  const double k0 = g.kappa0();
  const SpectralField ut = dealias(u);
  prepare(n);
  auto one = [](std::size_t) { return cplx{1.0, 0.0}; };
  physical_of(ut.component(0), one, ws.p[0], n);
  physical_of(ut.component(1), one, ws.p[1], n);
  // omega_k = i kappa0 (k1 u2_k - k2 u1_k)
  auto a = ut.component(0);
  auto b = ut.component(1);
  for (std::size_t i = 0; i < a.size(); ++i)
    ws.spec[i] = cplx{0.0, k0} * (static_cast<double>(t.k1[i]) * b[i] -
                                  static_cast<double>(t.k2[i]) * a[i]);
  fft::to_physical(ws.spec.data(), ws.p[2].data(), n);
  const std::size_t np = static_cast<std::size_t>(n) * n;
  for (std::size_t x = 0; x < np; ++x) {
    const double w = ws.p[2][x];
    ws.p[3][x] = -w * ws.p[1][x];
    ws.p[4][x] = w * ws.p[0][x];
  }
  return spectral_of(ws.p[3], ws.p[4], g);
}

SpectralField apply_A(SpectralField u, double power) {
  const ModeTable& t = mode_table(u.grid());
  const double k0sq = u.grid().kappa0() * u.grid().kappa0();
  std::vector<double> factor(t.ksq.size());
  for (std::size_t i = 0; i < factor.size(); ++i) {
    if (t.ksq[i] == 0.0) {
      factor[i] = 0.0;
    } else if (power == 1.0) {
      factor[i] = k0sq * t.ksq[i];
    } else {
      factor[i] = std::pow(k0sq * t.ksq[i], power);
    }
  }
  for (int c = 0; c < 2; ++c) {
    auto comp = u.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= factor[i];
  }
  return u;
}

namespace {
SpectralField keep_where(SpectralField u, const ModeCut& cut, bool low) {
  const ModeTable& t = mode_table(u.grid());
  const double nsq = static_cast<double>(cut.N) * cut.N;
  for (int c = 0; c < 2; ++c) {
    auto comp = u.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) {
      const bool is_low = t.ksq[i] <= nsq;
      if (is_low != low) comp[i] = cplx{};
    }
  }
  return u;
}
}  // namespace

SpectralField project_low(SpectralField u, const ModeCut& cut) {
  return keep_where(std::move(u), cut, true);
}

SpectralField project_high(SpectralField u, const ModeCut& cut) {
  return keep_where(std::move(u), cut, false);
}

double inner(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u, v, "inner product");
  const ModeTable& t = mode_table(u.grid());
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    auto a = u.component(c);
    auto b = v.component(c);
    for (std::size_t i = 0; i < a.size(); ++i)
      s += t.weight[i] * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
  }
  const double L = u.grid().box_length;
  return L * L * s;
}

Norms norms(const SpectralField& u) {
  const ModeTable& t = mode_table(u.grid());
  const double k0sq = u.grid().kappa0() * u.grid().kappa0();
  double s0 = 0, s1 = 0, s2 = 0;
  for (int c = 0; c < 2; ++c) {
    auto a = u.component(c);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double e = t.weight[i] * std::norm(a[i]);
      const double lam = k0sq * t.ksq[i];
      s0 += e;
      s1 += lam * e;
      s2 += lam * lam * e;
    }
  }
  const double L = u.grid().box_length;
  return {L * std::sqrt(s0), L * std::sqrt(s1), L * std::sqrt(s2)};
}

double l2_norm(const SpectralField& u) { return norms(u).l2; }
double h1_norm(const SpectralField& u) { return norms(u).h1; }

SpectralField random_divfree_field(const GridSpec& grid, std::uint64_t seed, double decay,
                                   std::optional<ModeCut> cut) {
  SpectralField u(grid);
  const ModeTable& t = mode_table(grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double nsq = cut ? static_cast<double>(cut->N) * cut->N : 1e300;
  const int n = grid.resolution;
  for (std::size_t i = 0; i < grid.modes(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    if (!t.kept[i] || t.ksq[i] > nsq) continue;
    // Only k1 > 0 is independent on the k2 = 0 column.
    if (t.k2[i] == 0 && t.k1[i] < 0) continue;
    const double kk = std::sqrt(t.ksq[i]);
    const double amp = std::pow(kk, -decay);
    const cplx a = amp * cplx{re, im};
    u.at(0, i) = a * (-t.k2[i] / kk);
    u.at(1, i) = a * (t.k1[i] / kk);
  }
  (void)n;
  enforce_reality(u);
  const double l2 = l2_norm(u);
  if (l2 > 0) u *= 1.0 / l2;
  return u;
}

SpectralField shear_mode(const GridSpec& grid, int k1, int k2, double amplitude) {
  require(k1 != 0 || k2 != 0, ErrorCode::InvalidArgument, "shear mode needs k != 0");
  SpectralField f(grid);
  const double kk = std::sqrt(static_cast<double>(k1 * k1 + k2 * k2));
  const double e1 = k2 / kk, e2 = -k1 / kk;
  const cplx c{0.0, -0.5 * amplitude};
  f.set_coefficient(k1, k2, c * e1, c * e2);
  return f;
}

double divergence_residual(const SpectralField& u) {
  const ModeTable& t = mode_table(u.grid());
  double worst = 0.0;
  for (std::size_t i = 0; i < u.modes(); ++i) {
    const cplx a = u.at(0, i), b = u.at(1, i);
    const double mag = std::sqrt(std::norm(a) + std::norm(b));
    if (mag == 0.0 || t.ksq[i] == 0.0) continue;
    const double d = std::abs(static_cast<double>(t.k1[i]) * a + static_cast<double>(t.k2[i]) * b);
    worst = std::max(worst, d / (std::sqrt(t.ksq[i]) * mag));
  }
  return worst;
}

double reality_residual(const SpectralField& u) {
  const int n = u.grid().resolution;
  double worst = 0.0;
  for (int c = 0; c < 2; ++c) {
    worst = std::max(worst, std::abs(u.at(c, 0, 0)));
    for (int k1 = 1; k1 < n / 2; ++k1)
      worst = std::max(worst, std::abs(u.at(c, n - k1, 0) - std::conj(u.at(c, k1, 0))));
  }
  return worst;
}

std::optional<double> eigenvalue_of(const SpectralField& u, double rel_tol) {
  const ModeTable& t = mode_table(u.grid());
  double peak = 0.0;
  for (std::size_t i = 0; i < u.modes(); ++i)
    peak = std::max(peak, std::norm(u.at(0, i)) + std::norm(u.at(1, i)));
  if (peak == 0.0) return std::nullopt;
  std::optional<double> ksq;
  for (std::size_t i = 0; i < u.modes(); ++i) {
    const double e = std::norm(u.at(0, i)) + std::norm(u.at(1, i));
    if (e <= rel_tol * rel_tol * peak) continue;
    if (!ksq) {
      ksq = t.ksq[i];
    } else if (*ksq != t.ksq[i]) {
      return std::nullopt;
    }
  }
  const double k0 = u.grid().kappa0();
  return k0 * k0 * *ksq;
}

PhysicalField to_physical(const SpectralField& u) {
  const int n = u.grid().resolution;
  PhysicalField p;
  p.n = n;
  p.u1.resize(static_cast<std::size_t>(n) * n);
  p.u2.resize(static_cast<std::size_t>(n) * n);
  fft::to_physical(u.component(0).data(), p.u1.data(), n);
  fft::to_physical(u.component(1).data(), p.u2.data(), n);
  return p;
}

SpectralField from_physical(const PhysicalField& p, const GridSpec& grid) {
  require(p.n == grid.resolution, ErrorCode::GridMismatch, "physical field resolution mismatch");
  SpectralField u(grid);
  fft::to_spectral(p.u1.data(), u.component(0).data(), p.n);
  fft::to_spectral(p.u2.data(), u.component(1).data(), p.n);
  u *= 1.0 / (static_cast<double>(p.n) * p.n);
  return u;
}

}  // namespace detform
