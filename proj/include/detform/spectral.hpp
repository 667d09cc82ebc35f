#pragma once

// Fourier representation of divergence-free, zero-mean velocity fields on the
// periodic box [0,L]^2 together with the Stokes operator A, the Leray
// projector, the bilinear term B and the modal projectors P_N / Q_N.
//
// Storage follows the real-to-complex FFT layout: coefficient (i, j) holds
// the wavevector k = (wavenumber(i), j) for i in [0, n) and j in [0, n/2].
// Modes with k2 < 0 are implied by the reality condition u_{-k} = conj(u_k).
// Coefficients use the normalisation u(x) = sum_k u_k exp(i kappa0 k.x).

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "detform/errors.hpp"

namespace detform {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

struct GridSpec {
  int resolution = 64;             // physical grid is resolution^2
  double box_length = 2.0 * kPi;   // L
  double dealias_fraction = 2.0 / 3.0;

  double kappa0() const { return 2.0 * kPi / box_length; }
  int columns() const { return resolution / 2 + 1; }
  std::size_t modes() const {
    return static_cast<std::size_t>(resolution) * static_cast<std::size_t>(columns());
  }
  // Largest |k_i| kept by the dealiasing mask.
  int dealias_kmax() const;
  // Largest |k| of any retained mode (the corner of the retained square).
  double dealias_radius() const;
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

// Signed wavenumber for FFT row index i on an n-point axis.
inline int wavenumber(int i, int n) { return i <= n / 2 - 1 ? i : i - n; }

struct ModeCut {
  int N = 1;  // low modes are |k| <= N
  void validate(const GridSpec& grid) const;
};

// Per-grid tables shared by all fields on that grid.
struct ModeTable {
  std::vector<int> k1, k2;
  std::vector<double> ksq;         // |k|^2 (integer valued)
  std::vector<double> weight;      // multiplicity in Parseval sums (1 or 2)
  std::vector<unsigned char> kept; // inside the dealiasing square, k != 0
};

const ModeTable& mode_table(const GridSpec& grid);

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  bool empty() const { return c_.empty(); }
  std::size_t modes() const { return grid_.modes(); }

  cplx& at(int comp, std::size_t idx) { return c_[comp * modes() + idx]; }
  const cplx& at(int comp, std::size_t idx) const { return c_[comp * modes() + idx]; }
  cplx& at(int comp, int i, int j) { return at(comp, index(i, j)); }
  const cplx& at(int comp, int i, int j) const { return at(comp, index(i, j)); }
  // Coefficient for an arbitrary wavevector, using conjugate symmetry for k2 < 0.
  std::array<cplx, 2> coefficient(int k1, int k2) const;
  void set_coefficient(int k1, int k2, cplx c1, cplx c2);

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_.columns()) +
           static_cast<std::size_t>(j);
  }

  std::span<cplx> component(int comp) { return {c_.data() + comp * modes(), modes()}; }
  std::span<const cplx> component(int comp) const {
    return {c_.data() + comp * modes(), modes()};
  }
  std::span<cplx> data() { return c_; }
  std::span<const cplx> data() const { return c_; }

  bool same_grid(const SpectralField& other) const { return grid_ == other.grid_; }
  bool all_finite() const;
  void set_zero();

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
  // this += s * o
  SpectralField& axpy(double s, const SpectralField& o);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  bool operator==(const SpectralField& o) const { return grid_ == o.grid_ && c_ == o.c_; }

 private:
  GridSpec grid_;
  std::vector<cplx> c_;
};

void require_same_grid(const SpectralField& a, const SpectralField& b, const char* op);

// Zero every mode outside the dealiasing square, the Nyquist lines and k = 0.
SpectralField dealias(SpectralField u);
// Restore exact conjugate symmetry on the k2 = 0 column (k1 > 0 is the master).
void enforce_reality(SpectralField& u);

SpectralField leray_project(SpectralField raw);
// B(u, v) = P((u . grad) v), pseudospectral with dealiasing before and after the product.
SpectralField bilinear(const SpectralField& u, const SpectralField& v);
// B(u, u) via the rotational form  P(omega z x u); agrees with bilinear(u, u) to rounding.
SpectralField bilinear_self(const SpectralField& u);
SpectralField apply_A(SpectralField u, double power);
SpectralField project_low(SpectralField u, const ModeCut& cut);
SpectralField project_high(SpectralField u, const ModeCut& cut);

// (u, v) = L^2 sum_k u_k . conj(v_k), over all of Z^2.
double inner(const SpectralField& u, const SpectralField& v);

struct Norms {
  double l2 = 0;  // |u|
  double h1 = 0;  // ||u|| = |A^{1/2} u|
  double h2 = 0;  // |A u|
};
Norms norms(const SpectralField& u);
double l2_norm(const SpectralField& u);
double h1_norm(const SpectralField& u);

// Deterministic divergence-free test field with |u_k| ~ |k|^{-decay};
// optionally supported on |k| <= cut.N only. Normalised to |u| = 1.
SpectralField random_divfree_field(const GridSpec& grid, std::uint64_t seed, double decay,
                                   std::optional<ModeCut> cut = std::nullopt);

// f = amplitude * e * sin(kappa0 k.x) with e the unit vector perpendicular to k.
SpectralField shear_mode(const GridSpec& grid, int k1, int k2, double amplitude);

// Largest |k . u_k| / |k||u_k| over nonzero stored coefficients.
double divergence_residual(const SpectralField& u);
// Largest |u_{-k} - conj(u_k)| on the k2 = 0 column, and |u_0|.
double reality_residual(const SpectralField& u);

// If every nonzero mode of u shares one |k|^2, returns kappa0^2 |k|^2.
std::optional<double> eigenvalue_of(const SpectralField& u, double rel_tol = 1e-13);

// Physical-space samples: comp-major, row-major n x n arrays.
struct PhysicalField {
  int n = 0;
  std::vector<double> u1, u2;
};
PhysicalField to_physical(const SpectralField& u);
SpectralField from_physical(const PhysicalField& p, const GridSpec& grid);

}  // namespace detform
