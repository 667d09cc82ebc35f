#include "detform/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <string>

namespace detform {

namespace {
long checked_steps(double span, double ds, const char* what) {
  require(std::isfinite(span) && span > 0, ErrorCode::InvalidArgument,
          std::string(what) + " must be positive");
  require(std::isfinite(ds) && ds > 0, ErrorCode::InvalidArgument, "ds must be positive");
  const double q = span / ds;
  const long m = std::lround(q);
  require(m >= 1 && std::abs(q - static_cast<double>(m)) <= 1e-9 * std::max(1.0, q),
          ErrorCode::InvalidArgument,
          std::string(what) + "/ds must be a positive integer, got " + std::to_string(q));
  return m;
}
}  // namespace

SGrid SGrid::periodic(double period, double ds) {
  SGrid g;
  g.kind = SGridKind::Periodic;
  g.period = period;
  g.ds = ds;
  g.validate();
  return g;
}

SGrid SGrid::windowed(double s_lo, double s_hi, double ds, double burn_in) {
  SGrid g;
  g.kind = SGridKind::Windowed;
  g.s_lo = s_lo;
  g.s_hi = s_hi;
  g.ds = ds;
  g.burn_in = burn_in;
  g.validate();
  return g;
}

void SGrid::validate() const {
  if (kind == SGridKind::Periodic) {
    checked_steps(period, ds, "period");
  } else {
    checked_steps(s_hi - s_lo, ds, "window length");
    require(burn_in >= 0 && burn_in < s_hi - s_lo, ErrorCode::InvalidArgument,
            "burn-in must lie in [0, s_hi - s_lo)");
  }
}

std::size_t SGrid::intervals() const {
  return kind == SGridKind::Periodic ? static_cast<std::size_t>(std::lround(period / ds))
                                     : static_cast<std::size_t>(std::lround((s_hi - s_lo) / ds));
}

std::size_t SGrid::nodes() const {
  return kind == SGridKind::Periodic ? intervals() : intervals() + 1;
}

std::size_t SGrid::first_valid() const {
  if (kind == SGridKind::Periodic) return 0;
  return static_cast<std::size_t>(std::ceil(burn_in / ds - 1e-9));
}

std::shared_ptr<const LowModeIndex> low_mode_index(const GridSpec& grid, const ModeCut& cut) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double, int>, std::shared_ptr<const LowModeIndex>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_tuple(grid.resolution, grid.box_length, grid.dealias_fraction, cut.N);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto idx = std::make_shared<LowModeIndex>();
  idx->grid = grid;
  idx->cut = cut;
  const ModeTable& t = mode_table(grid);
  const double nsq = static_cast<double>(cut.N) * cut.N;
  for (std::size_t i = 0; i < t.ksq.size(); ++i)
    if (t.kept[i] && t.ksq[i] <= nsq) idx->flat.push_back(i);
  cache.emplace(key, idx);
  return idx;
}

ModalTrajectory::ModalTrajectory(const SGrid& sgrid, const ModeCut& cut, const GridSpec& grid)
    : sgrid_(sgrid), cut_(cut) {
  sgrid.validate();
  grid.validate();
  cut.validate(grid);
  index_ = low_mode_index(grid, cut);
  nodes_ = sgrid.nodes();
  data_.assign(nodes_ * stride(), cplx{});
}

ModalTrajectory ModalTrajectory::constant(const SGrid& sgrid, const ModeCut& cut,
                                          const SpectralField& v) {
  ModalTrajectory t(sgrid, cut, v.grid());
  t.set_node(0, v);
  for (std::size_t j = 1; j < t.nodes(); ++j)
    std::copy(t.packed(0).begin(), t.packed(0).end(), t.packed(j).begin());
  return t;
}

SpectralField ModalTrajectory::expand(const std::vector<cplx>& p) const {
  SpectralField f(grid());
  const auto& flat = index_->flat;
  const std::size_t n = flat.size();
  for (std::size_t q = 0; q < n; ++q) {
    f.at(0, flat[q]) = p[q];
    f.at(1, flat[q]) = p[n + q];
  }
  return f;
}

SpectralField ModalTrajectory::node(std::size_t j) const {
  require(j < nodes_, ErrorCode::InvalidArgument, "trajectory node out of range");
  auto p = packed(j);
  return expand(std::vector<cplx>(p.begin(), p.end()));
}

void ModalTrajectory::set_node(std::size_t j, const SpectralField& v) {
  require(j < nodes_, ErrorCode::InvalidArgument, "trajectory node out of range");
  require(v.grid() == grid(), ErrorCode::GridMismatch, "trajectory node on a different grid");
  const auto& flat = index_->flat;
  const std::size_t n = flat.size();
  // Everything off the low-mode set must be exactly zero.
  std::vector<unsigned char> low(v.modes(), 0);
  for (std::size_t i : flat) low[i] = 1;
  for (int c = 0; c < 2; ++c) {
    auto comp = v.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i)
      if (!low[i] && comp[i] != cplx{})
        fail(ErrorCode::Precondition, "trajectory value has modes outside |k| <= N");
  }
  auto dst = packed(j);
  for (std::size_t q = 0; q < n; ++q) {
    dst[q] = v.at(0, flat[q]);
    dst[n + q] = v.at(1, flat[q]);
  }
}

namespace {
double packed_h1(std::span<const cplx> p, const LowModeIndex& idx) {
  const ModeTable& t = mode_table(idx.grid);
  const std::size_t n = idx.flat.size();
  double s = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t i = idx.flat[q];
    s += t.weight[i] * t.ksq[i] * (std::norm(p[q]) + std::norm(p[n + q]));
  }
  const double k0 = idx.grid.kappa0();
  return idx.grid.box_length * k0 * std::sqrt(s);
}
}  // namespace

double ModalTrajectory::node_h1(std::size_t j) const { return packed_h1(packed(j), *index_); }

double ModalTrajectory::norm_X() const {
  double m = 0;
  for (std::size_t j = 0; j < nodes_; ++j) m = std::max(m, node_h1(j));
  return m;
}

std::size_t ModalTrajectory::wrap(long j) const {
  const long p = static_cast<long>(nodes_);
  return static_cast<std::size_t>(((j % p) + p) % p);
}

SpectralField ModalTrajectory::sample(std::size_t j, double theta, Hold hold) const {
  const bool periodic = sgrid_.kind == SGridKind::Periodic;
  require(j < sgrid_.intervals(), ErrorCode::InvalidArgument, "sample interval out of range");
  require(theta >= 0 && theta <= 1, ErrorCode::InvalidArgument, "theta must lie in [0,1]");
  const std::size_t next = periodic ? wrap(static_cast<long>(j) + 1) : j + 1;
  if (theta == 0.0) return node(j);
  if (theta == 1.0) return node(next);
  if (hold == Hold::Zero) return node(j);

  long lo = static_cast<long>(j) + (hold == Hold::Linear ? 0 : -2);
  if (!periodic) lo = std::max(0L, lo);
  const long hi = static_cast<long>(j) + 1;
  // Offsets relative to j keep the weights independent of the absolute node
  // index, which shift equivariance relies on.
  const long jj = static_cast<long>(j);
  std::vector<double> w;
  std::vector<std::size_t> src;
  for (long a = lo; a <= hi; ++a) {
    double l = 1.0;
    for (long b = lo; b <= hi; ++b)
      if (b != a) l *= (theta - static_cast<double>(b - jj)) / static_cast<double>(a - b);
    w.push_back(l);
    src.push_back(periodic ? wrap(a) : static_cast<std::size_t>(a));
  }
  std::vector<cplx> acc(stride(), cplx{});
  for (std::size_t q = 0; q < w.size(); ++q) {
    auto p = packed(src[q]);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w[q] * p[i];
  }
  return expand(acc);
}

ModalTrajectory ModalTrajectory::shifted(long m) const {
  require(sgrid_.kind == SGridKind::Periodic, ErrorCode::Precondition,
          "shifts are defined on periodic s-grids only");
  ModalTrajectory out = *this;
  for (std::size_t j = 0; j < nodes_; ++j) {
    auto src = packed(wrap(static_cast<long>(j) + m));
    std::copy(src.begin(), src.end(), out.packed(j).begin());
  }
  return out;
}

bool ModalTrajectory::operator==(const ModalTrajectory& o) const {
  return sgrid_ == o.sgrid_ && cut_.N == o.cut_.N && grid() == o.grid() &&
         data_.size() == o.data_.size() &&
         std::memcmp(data_.data(), o.data_.data(), data_.size() * sizeof(cplx)) == 0;
}

double distance_X(const ModalTrajectory& a, const ModalTrajectory& b) {
  require(a.sgrid() == b.sgrid() && a.cut().N == b.cut().N && a.grid() == b.grid(),
          ErrorCode::GridMismatch, "trajectories live on different grids");
  const auto idx = low_mode_index(a.grid(), a.cut());
  double m = 0;
  std::vector<cplx> d(a.stride());
  for (std::size_t j = 0; j < a.nodes(); ++j) {
    auto pa = a.packed(j), pb = b.packed(j);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = pa[i] - pb[i];
    m = std::max(m, packed_h1(d, *idx));
  }
  return m;
}

}  // namespace detform
