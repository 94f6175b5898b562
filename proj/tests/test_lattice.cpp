#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mmflat/generators.hpp"
#include "mmflat/shifted_lattice.hpp"

using namespace mmflat;

TEST_CASE("locate returns a cube whose central two-thirds holds the point") {
  ShiftedLattice lat(2, {0.0, 0.0}, 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<double> x{u(rng), u(rng)};
    for (int level = 0; level <= 6; ++level) {
      const LatticeCube q = lat.locate(x, level);
      CHECK(q.level == level);
      CHECK(lat.contains(q, x));
      CHECK(lat.central_two_thirds(q, x));
      CHECK(lat.side(level) == doctest::Approx(std::pow(0.5, level)));
    }
  }
  CHECK_THROWS_AS(lat.locate({2.0, 0.5}, 3), std::domain_error);
}

TEST_CASE("one-third shifts keep points away from cube faces") {
  // The located cube leaves margin at least side/6 on every side: points near a
  // boundary of one family fall well inside a cube of a shifted family.
  ShiftedLattice lat(1, {0.0}, 1.0);
  for (int level = 1; level <= 8; ++level) {
    const double side = lat.side(level);
    for (int k = 1; k < (1 << level); ++k) {
      const std::vector<double> x{k * side + 1e-12};  // on an unshifted face
      const LatticeCube q = lat.locate(x, level);
      const auto corner = lat.corner(q);
      const double margin =
          std::min(x[0] - corner[0], corner[0] + side - x[0]);
      CHECK(margin >= side / 6.0 - 1e-9);
    }
  }
}

TEST_CASE("smallest_covering finds a tight common cube") {
  ShiftedLattice lat(2, {0.0, 0.0}, 1.0);
  const std::vector<std::vector<double>> pts{{0.40, 0.40}, {0.45, 0.43}, {0.42, 0.46}};
  const auto q = lat.smallest_covering(pts, 10);
  REQUIRE(q.has_value());
  for (const auto& p : pts) CHECK(lat.contains(*q, p));
  // Diameter of the cluster is ~0.06; the cube should be within a few doublings.
  CHECK(lat.side(q->level) <= 0.5);
  CHECK(lat.side(q->level) >= 0.05);
  // Spread points covering almost the whole root: only a coarse cube fits.
  const auto wide = lat.smallest_covering({{0.01, 0.01}, {0.99, 0.99}}, 10);
  CHECK_FALSE(wide.has_value());
}

TEST_CASE("l-good cubes are comparably sized with the tree cube") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 0.002;
  const GeneratedSpace gs = generate(spec);
  const CubeTree tree = build_default_tree(gs.space, 0.25, 0.02, 3);
  ShiftedLattice lat(1, {-2.0}, 8.0);
  int checked = 0;
  for (const Cube& q : tree.cubes) {
    if (q.level < tree.k_min + 1) continue;
    const LGoodCube good = find_l_good_cube(gs.space, *gs.chart, tree, q.id, lat);
    const double ell = tree.side(q);
    CHECK(good.comparability == doctest::Approx(good.side / ell));
    CHECK(good.comparability <= 200.0);  // stays within a bounded factor
    // The chart image of every sampled point of 10 B_Q lies in the cube.
    for (std::size_t i = 0; i < gs.space.size(); ++i)
      if (gs.space.distance(q.center, i) <= 10.0 * ell)
        CHECK(lat.contains(good.cube, gs.chart->params[i]));
    ++checked;
    if (checked >= 40) break;
  }
  CHECK(checked >= 20);
}
