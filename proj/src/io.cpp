#include "detform/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace detform {

namespace {

template <class U>
void put_le(std::ostream& os, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(U));
}

template <class U>
U get_le(std::istream& is, const char* what) {
  unsigned char b[sizeof(U)];
  is.read(reinterpret_cast<char*>(b), sizeof(U));
  require(is.gcount() == static_cast<std::streamsize>(sizeof(U)), ErrorCode::Io,
          std::string("truncated file while reading ") + what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double x) { put_le(os, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(is, what));
}

void expect_magic(std::istream& is, const char* magic) {
  char m[4] = {};
  is.read(m, 4);
  require(is.gcount() == 4 && std::memcmp(m, magic, 4) == 0, ErrorCode::Io,
          std::string("bad magic, expected ") + magic);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::Io, "cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::Io, "cannot open " + path);
  return is;
}

}  // namespace

void write_snapshot(std::ostream& os, const SpectralField& u) {
  require(!u.empty(), ErrorCode::InvalidArgument, "cannot write an empty field");
  os.write("DFL1", 4);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid().resolution));
  put_f64(os, u.grid().box_length);
  put_le<std::uint64_t>(os, u.modes());
  for (std::size_t i = 0; i < u.modes(); ++i) {
    put_f64(os, u.at(0, i).real());
    put_f64(os, u.at(0, i).imag());
    put_f64(os, u.at(1, i).real());
    put_f64(os, u.at(1, i).imag());
  }
  require(static_cast<bool>(os), ErrorCode::Io, "write failed");
}

SpectralField read_snapshot(std::istream& is, double dealias_fraction) {
  expect_magic(is, "DFL1");
  GridSpec g;
  g.resolution = static_cast<int>(get_le<std::uint32_t>(is, "resolution"));
  g.box_length = get_f64(is, "box length");
  g.dealias_fraction = dealias_fraction;
  try {
    g.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Io, std::string("snapshot header: ") + e.what());
  }
  const auto count = get_le<std::uint64_t>(is, "mode count");
  require(count == g.modes(), ErrorCode::Io,
          "snapshot mode count " + std::to_string(count) + " does not match resolution " +
              std::to_string(g.resolution));
  SpectralField u(g);
  for (std::size_t i = 0; i < u.modes(); ++i) {
    const double a = get_f64(is, "coefficients"), b = get_f64(is, "coefficients");
    const double c = get_f64(is, "coefficients"), d = get_f64(is, "coefficients");
    u.at(0, i) = {a, b};
    u.at(1, i) = {c, d};
  }
  require(u.all_finite(), ErrorCode::Io, "snapshot holds non-finite coefficients");
  return u;
}

void save_snapshot(const std::string& path, const SpectralField& u) {
  auto os = open_out(path);
  write_snapshot(os, u);
}

SpectralField load_snapshot(const std::string& path, double dealias_fraction) {
  auto is = open_in(path);
  return read_snapshot(is, dealias_fraction);
}

std::string coefficient_csv(const SpectralField& u) {
  std::string out = "k1,k2,re1,im1,re2,im2\n";
  const int n = u.grid().resolution;
  char buf[192];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < u.grid().columns(); ++j) {
      const cplx a = u.at(0, i, j), b = u.at(1, i, j);
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", wavenumber(i, n), j,
                    a.real(), a.imag(), b.real(), b.imag());
      out += buf;
    }
  return out;
}

void save_trajectory(const std::string& path, const TrajectoryFile& t) {
  t.sgrid.validate();
  require(t.nodes.size() == t.sgrid.nodes(), ErrorCode::InvalidArgument,
          "trajectory needs one field per s-node");
  auto os = open_out(path);
  os.write("DTR1", 4);
  put_le<std::uint8_t>(os, t.sgrid.kind == SGridKind::Periodic ? 0 : 1);
  put_f64(os, t.sgrid.s_lo);
  put_f64(os, t.sgrid.s_hi);
  put_f64(os, t.sgrid.period);
  put_f64(os, t.sgrid.ds);
  put_f64(os, t.sgrid.burn_in);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.N));
  put_le<std::uint64_t>(os, t.nodes.size());
  for (const auto& u : t.nodes) write_snapshot(os, u);
}

TrajectoryFile load_trajectory(const std::string& path, double dealias_fraction) {
  auto is = open_in(path);
  expect_magic(is, "DTR1");
  TrajectoryFile t;
  const auto kind = get_le<std::uint8_t>(is, "s-grid kind");
  require(kind <= 1, ErrorCode::Io, "unknown s-grid kind");
  t.sgrid.kind = kind == 0 ? SGridKind::Periodic : SGridKind::Windowed;
  t.sgrid.s_lo = get_f64(is, "s-grid");
  t.sgrid.s_hi = get_f64(is, "s-grid");
  t.sgrid.period = get_f64(is, "s-grid");
  t.sgrid.ds = get_f64(is, "s-grid");
  t.sgrid.burn_in = get_f64(is, "s-grid");
  t.N = static_cast<std::int32_t>(get_le<std::uint32_t>(is, "mode cut"));
  try {
    t.sgrid.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Io, std::string("trajectory header: ") + e.what());
  }
  const auto count = get_le<std::uint64_t>(is, "node count");
  require(count == t.sgrid.nodes(), ErrorCode::Io, "node count does not match the s-grid");
  for (std::uint64_t j = 0; j < count; ++j) t.nodes.push_back(read_snapshot(is, dealias_fraction));
  return t;
}

TrajectoryFile trajectory_file(const ModalTrajectory& v) {
  TrajectoryFile t;
  t.sgrid = v.sgrid();
  t.N = v.cut().N;
  for (std::size_t j = 0; j < v.nodes(); ++j) t.nodes.push_back(v.node(j));
  return t;
}

ModalTrajectory to_modal(const TrajectoryFile& t) {
  require(!t.nodes.empty(), ErrorCode::InvalidArgument, "empty trajectory");
  ModalTrajectory v(t.sgrid, ModeCut{t.N}, t.nodes.front().grid());
  for (std::size_t j = 0; j < t.nodes.size(); ++j) v.set_node(j, t.nodes[j]);
  return v;
}

}  // namespace detform
