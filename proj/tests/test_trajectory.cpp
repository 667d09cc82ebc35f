#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "detform/parallel.hpp"
#include "detform/slaving.hpp"
#include "detform/trajectory.hpp"
#include "support.hpp"

using namespace detform;
using namespace testing_support;

namespace {
GridSpec small_grid() {
  GridSpec g;
  g.resolution = 16;
  return g;
}
}  // namespace

TEST_CASE("s-grid node counts") {
  const SGrid p = SGrid::periodic(2.0, 0.25);
  CHECK(p.nodes() == 8);
  CHECK(p.intervals() == 8);
  CHECK(p.first_valid() == 0);
  const SGrid w = SGrid::windowed(-1.0, 1.0, 0.25, 0.5);
  CHECK(w.nodes() == 9);
  CHECK(w.intervals() == 8);
  CHECK(w.first_valid() == 2);
  CHECK(w.s(4) == doctest::Approx(0.0));
  CHECK_THROWS_AS(SGrid::periodic(1.0, 0.3), Error);
  CHECK_THROWS_AS(SGrid::windowed(0.0, 1.0, 0.25, 1.0), Error);
}

TEST_CASE("set_node rejects modes above N") {
  const GridSpec g = small_grid();
  ModalTrajectory v(SGrid::periodic(1.0, 0.25), ModeCut{2}, g);
  const SpectralField low = random_divfree_field(g, 3, 0.0, ModeCut{2});
  v.set_node(1, low);
  CHECK(v.node(1) == low);
  const SpectralField high = random_divfree_field(g, 4, 0.0, ModeCut{3});
  try {
    v.set_node(0, high);
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
}

TEST_CASE("interpolation reproduces polynomials of its degree") {
  const GridSpec g = small_grid();
  const SGrid sg = SGrid::windowed(0.0, 2.0, 0.25, 0.0);
  const SpectralField a = random_divfree_field(g, 11, 0.0, ModeCut{2});
  auto cubic = [](double s) { return 0.3 - 1.2 * s + 0.7 * s * s + 0.25 * s * s * s; };
  auto line = [](double s) { return 0.4 + 1.5 * s; };
  ModalTrajectory vc(sg, ModeCut{2}, g), vl(sg, ModeCut{2}, g);
  for (std::size_t j = 0; j < sg.nodes(); ++j) {
    vc.set_node(j, cubic(sg.s(j)) * a);
    vl.set_node(j, line(sg.s(j)) * a);
  }
  for (std::size_t j = 2; j < sg.intervals(); ++j)
    for (double th : {0.1, 0.5, 0.77}) {
      const double s = sg.s(j) + th * sg.ds;
      CHECK(max_abs_diff(vc.sample(j, th, Hold::Cubic), cubic(s) * a) < 1e-13);
      CHECK(max_abs_diff(vl.sample(j, th, Hold::Linear), line(s) * a) < 1e-13);
    }
  // Zero-order hold returns the left node; node values are exact.
  CHECK(vc.sample(3, 0.6, Hold::Zero) == vc.node(3));
  CHECK(vc.sample(3, 0.0) == vc.node(3));
  CHECK(vc.sample(3, 1.0) == vc.node(4));
}

TEST_CASE("norms and distances of trajectories") {
  const GridSpec g = small_grid();
  const SGrid sg = SGrid::periodic(1.0, 0.125);
  const SpectralField a = random_divfree_field(g, 5, 0.0, ModeCut{2});
  ModalTrajectory v(sg, ModeCut{2}, g);
  for (std::size_t j = 0; j < sg.nodes(); ++j)
    v.set_node(j, std::cos(2 * std::numbers::pi * sg.s(j)) * a);
  CHECK(v.node_h1(0) == doctest::Approx(h1_norm(a)).epsilon(1e-13));
  CHECK(v.norm_X() == doctest::Approx(h1_norm(a)).epsilon(1e-13));
  const ModalTrajectory z = ModalTrajectory::constant(sg, ModeCut{2}, SpectralField(g));
  CHECK(distance_X(v, z) == doctest::Approx(h1_norm(a)).epsilon(1e-13));
  CHECK(distance_X(v, v) == 0.0);
}

TEST_CASE("shifted trajectories and circle layout") {
  const GridSpec g = small_grid();
  const SGrid sg = SGrid::periodic(1.0, 0.125);
  const SpectralField a = random_divfree_field(g, 6, 0.0, ModeCut{2});
  const SpectralField b = random_divfree_field(g, 7, 0.0, ModeCut{2});
  ModalTrajectory v(sg, ModeCut{2}, g);
  for (std::size_t j = 0; j < sg.nodes(); ++j) {
    const double t = 2 * std::numbers::pi * sg.s(j);
    v.set_node(j, std::cos(t) * a + std::sin(t) * b);
  }
  const ModalTrajectory v3 = v.shifted(3);
  CHECK(v3.node(0) == v.node(3));
  CHECK(v3.node(6) == v.node(1));
  CHECK(v3.shifted(-3) == v);

  const auto l = detail::circle_layout(v);
  const auto l3 = detail::circle_layout(v3);
  CHECK(l.period == 8);
  CHECK(l3.period == 8);
  CHECK((l3.start + 3) % 8 == l.start);

  // Period two on eight nodes.
  ModalTrajectory alt(sg, ModeCut{2}, g);
  for (std::size_t j = 0; j < sg.nodes(); ++j) alt.set_node(j, j % 2 ? a : b);
  CHECK(detail::circle_layout(alt).period == 2);
  const auto c = detail::circle_layout(ModalTrajectory::constant(sg, ModeCut{2}, a));
  CHECK(c.period == 1);
  CHECK(c.start == 0);
}

TEST_CASE("parallel_for covers every index once") {
  set_thread_count(4);
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10,
                               [](std::size_t i) {
                                 if (i == 7) fail(ErrorCode::InvalidArgument, "boom");
                               }),
                  Error);
  set_thread_count(1);
}
