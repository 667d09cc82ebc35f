#pragma once

// Auxiliary-time grids and low-mode trajectories s -> v(s) in P_N H.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "detform/spectral.hpp"

namespace detform {

enum class SGridKind { Periodic, Windowed };

struct SGrid {
  SGridKind kind = SGridKind::Periodic;
  double s_lo = 0.0;
  double s_hi = 0.0;     // windowed only
  double period = 0.0;   // periodic only
  double ds = 0.0;
  double burn_in = 0.0;  // windowed only

  static SGrid periodic(double period, double ds);
  static SGrid windowed(double s_lo, double s_hi, double ds, double burn_in);

  // Periodic: P nodes s_0..s_{P-1}; windowed: M+1 nodes s_lo..s_hi.
  std::size_t nodes() const;
  std::size_t intervals() const;
  double s(std::size_t j) const { return s_lo + ds * static_cast<double>(j); }
  // First node past the burn-in (0 on periodic grids).
  std::size_t first_valid() const;
  void validate() const;

  bool operator==(const SGrid&) const = default;
};

// Flat indices of the retained modes with 0 < |k| <= N.
struct LowModeIndex {
  GridSpec grid;
  ModeCut cut;
  std::vector<std::size_t> flat;
};

std::shared_ptr<const LowModeIndex> low_mode_index(const GridSpec& grid, const ModeCut& cut);

// How a trajectory is evaluated between its nodes.
enum class Hold { Zero, Linear, Cubic };

class ModalTrajectory {
 public:
  ModalTrajectory() = default;
  ModalTrajectory(const SGrid& sgrid, const ModeCut& cut, const GridSpec& grid);

  static ModalTrajectory constant(const SGrid& sgrid, const ModeCut& cut, const SpectralField& v);

  const SGrid& sgrid() const { return sgrid_; }
  const ModeCut& cut() const { return cut_; }
  const GridSpec& grid() const { return index_->grid; }
  std::size_t nodes() const { return nodes_; }
  // Complex values stored per node (two components per low mode).
  std::size_t stride() const { return 2 * index_->flat.size(); }

  SpectralField node(std::size_t j) const;
  // Precondition error unless v is supported on retained modes with |k| <= N.
  void set_node(std::size_t j, const SpectralField& v);

  std::span<const cplx> packed(std::size_t j) const { return {data_.data() + j * stride(), stride()}; }
  std::span<cplx> packed(std::size_t j) { return {data_.data() + j * stride(), stride()}; }

  double node_h1(std::size_t j) const;
  // sup over nodes of ||v(s)||.
  double norm_X() const;

  // Value at s_j + theta ds, theta in [0, 1]. The cubic rule uses nodes
  // j-2..j+1, so it never looks past s_{j+1}; near a window start it drops
  // to the nodes that exist. Periodic grids wrap.
  SpectralField sample(std::size_t j, double theta, Hold hold = Hold::Cubic) const;

  // out(s_j) = v(s_{j+m}); periodic grids only.
  ModalTrajectory shifted(long m) const;

  // Same grid, cut and values bit for bit.
  bool operator==(const ModalTrajectory& o) const;

  const std::vector<cplx>& raw() const { return data_; }

 private:
  SpectralField expand(const std::vector<cplx>& packed) const;
  std::size_t wrap(long j) const;

  SGrid sgrid_;
  ModeCut cut_;
  std::shared_ptr<const LowModeIndex> index_;
  std::size_t nodes_ = 0;
  std::vector<cplx> data_;
};

// sup over node pairs of ||a(s) - b(s)|| (the X distance).
double distance_X(const ModalTrajectory& a, const ModalTrajectory& b);

}  // namespace detform
