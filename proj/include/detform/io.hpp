#pragma once

// Binary field snapshots, trajectory files and coefficient dumps.
//
// Snapshot (little-endian):
//   char[4] "DFL1" | u32 resolution | f64 L | u64 mode count
//   then per stored mode, row-major in (i, j): f64 re1, im1, re2, im2
// Trajectory:
//   char[4] "DTR1" | u8 kind (0 periodic, 1 windowed) | f64 s_lo, s_hi,
//   period, ds, burn_in | u32 N | u64 node count | one snapshot per node

#include <iosfwd>
#include <string>
#include <vector>

#include "detform/spectral.hpp"
#include "detform/trajectory.hpp"

namespace detform {

void write_snapshot(std::ostream& os, const SpectralField& u);
// The dealiasing fraction is not stored; the default 2/3 applies.
SpectralField read_snapshot(std::istream& is, double dealias_fraction = 2.0 / 3.0);

void save_snapshot(const std::string& path, const SpectralField& u);
SpectralField load_snapshot(const std::string& path, double dealias_fraction = 2.0 / 3.0);

// Header k1,k2,re1,im1,re2,im2; one row per stored mode, 17 significant digits.
std::string coefficient_csv(const SpectralField& u);

struct TrajectoryFile {
  SGrid sgrid;
  int N = 0;
  std::vector<SpectralField> nodes;
};

void save_trajectory(const std::string& path, const TrajectoryFile& t);
TrajectoryFile load_trajectory(const std::string& path, double dealias_fraction = 2.0 / 3.0);

TrajectoryFile trajectory_file(const ModalTrajectory& v);
ModalTrajectory to_modal(const TrajectoryFile& t);

}  // namespace detform
