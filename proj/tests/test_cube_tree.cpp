#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "mmflat/cube_tree.hpp"
#include "mmflat/generators.hpp"

using namespace mmflat;

namespace {

GeneratedSpace gen(SpaceKind kind, double spacing = 0.01, int depth = 4) {
  GeneratorSpec spec;
  spec.kind = kind;
  spec.spacing = spacing;
  spec.depth = depth;
  return generate(spec);
}

}  // namespace

TEST_CASE("net hierarchy passes its own verifier and is nested") {
  const auto space = gen(SpaceKind::Segment, 0.005).space;
  const auto h = build_net_hierarchy(space, 0.25, 0, 4, 7);
  verify_net_hierarchy(space, h);
  // Coarser nets are subsets of finer ones.
  for (std::size_t k = 0; k + 1 < h.levels.size(); ++k) {
    std::set<std::size_t> fine(h.levels[k + 1].begin(), h.levels[k + 1].end());
    for (std::size_t p : h.levels[k]) CHECK(fine.count(p) == 1);
  }
}

TEST_CASE("the verifier localizes an injected net fault") {
  const auto space = gen(SpaceKind::Segment, 0.005).space;
  auto h = build_net_hierarchy(space, 0.25, 0, 3, 7);
  // Duplicate a net point's close neighbor to break separation at the last level.
  auto& lvl = h.levels.back();
  REQUIRE(lvl.size() >= 2);
  const std::size_t victim = lvl.front();
  const std::size_t clone = victim + 1 < space.size() ? victim + 1 : victim - 1;
  if (std::find(lvl.begin(), lvl.end(), clone) == lvl.end()) lvl.push_back(clone);
  CHECK_THROWS_AS(verify_net_hierarchy(space, h), std::domain_error);
}

TEST_CASE("cube axioms hold on five generated spaces") {
  const std::vector<GeneratedSpace> spaces = {
      gen(SpaceKind::Segment, 0.01), gen(SpaceKind::Circle, 0.02),
      gen(SpaceKind::LipschitzGraph, 0.01), gen(SpaceKind::BilipCurve, 0.01),
      gen(SpaceKind::FourCornerCantor, 0.01, 4)};
  for (const auto& gs : spaces) {
    const CubeTree tree = build_default_tree(gs.space, 0.25, 0.02, 3);
    REQUIRE(tree.depth() >= 2);
    const AxiomReport rep = verify_cube_axioms(gs.space, tree);
    CHECK(rep.cover_ok);
    CHECK(rep.nesting_ok);
    CHECK(rep.sandwich_ok);
    CHECK(rep.offending_cubes.empty());
    // Each level partitions the point set.
    for (int k = tree.k_min; k <= tree.k_max; ++k) {
      std::size_t covered = 0;
      for (std::uint32_t id : tree.level_cubes(k)) covered += tree.cube(id).members.size();
      CHECK(covered == gs.space.size());
    }
  }
}

TEST_CASE("tiny rho and c0 still yield a valid tree") {
  // Small-parameter regime on a modest sample.
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 0.005;
  auto space = generate(spec).space;
  const double rho = 1.0 / 1001.0;
  const double c0 = 1.0 / 500.0;
  const CubeTree tree = build_default_tree(space, rho, c0, 5);
  CHECK(verify_cube_axioms(space, tree).all_ok());
}

TEST_CASE("sides, descendants and level ranges are consistent") {
  const auto space = gen(SpaceKind::Segment, 0.01).space;
  const CubeTree tree = build_default_tree(space, 0.25, 0.02, 1);
  const auto roots = tree.level_cubes(tree.k_min);
  REQUIRE(roots.size() == 1);
  const auto all = tree.descendants(roots.front());
  CHECK(all.size() == tree.cubes.size());
  for (const Cube& q : tree.cubes) {
    CHECK(tree.side(q) == doctest::Approx(5.0 * std::pow(0.25, q.level)));
    if (q.parent >= 0) {
      const Cube& p = tree.cube(static_cast<std::uint32_t>(q.parent));
      CHECK(p.level == q.level - 1);
      // members are nested in the parent's members
      for (std::size_t m : q.members)
        CHECK(std::binary_search(p.members.begin(), p.members.end(), m));
    }
  }
}

TEST_CASE("tree serialization round-trips") {
  const auto space = gen(SpaceKind::Circle, 0.05).space;
  const CubeTree tree = build_default_tree(space, 0.25, 0.02, 2);
  save_tree(tree, "tree_roundtrip.json");
  const CubeTree back = load_tree("tree_roundtrip.json");
  REQUIRE(back.cubes.size() == tree.cubes.size());
  CHECK(back.rho == doctest::Approx(tree.rho));
  CHECK(back.c0 == doctest::Approx(tree.c0));
  for (std::size_t i = 0; i < tree.cubes.size(); ++i) {
    CHECK(back.cubes[i].level == tree.cubes[i].level);
    CHECK(back.cubes[i].center == tree.cubes[i].center);
    CHECK(back.cubes[i].parent == tree.cubes[i].parent);
    CHECK(back.cubes[i].members == tree.cubes[i].members);
  }
  std::remove("tree_roundtrip.json");
}

TEST_CASE("multi-resolution systems cover random (x, t) pairs") {
  const auto space = gen(SpaceKind::LipschitzGraph, 0.01).space;
  const MultiResSystems sys = build_multires_systems(space, 0.25, 0.02, 9, 200);
  REQUIRE(!sys.trees.empty());
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> px(0, space.size() - 1);
  const double floor = 20.0 * space.min_spacing();
  std::uniform_real_distribution<double> pt(floor, space.diameter() / 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t x = px(rng);
    const double t = pt(rng);
    const MultiResCoverage cov = locate_covering_cube(space, sys.trees, x, t);
    CHECK(cov.covered);
    if (cov.covered) {
      const CubeTree& tree = sys.trees[cov.tree_index];
      const Cube& q = tree.cube(cov.cube_id);
      const double side = tree.side(q);
      CHECK(t <= side * (1.0 + 1e-12));
      CHECK(side <= (5.0 / (tree.rho * tree.c0)) * t * (1.0 + 1e-12));
    }
  }
}
