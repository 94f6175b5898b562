#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <vector>

#include "mmflat/carleson.hpp"
#include "mmflat/generators.hpp"

using namespace mmflat;

namespace {

// Perfect B-ary tree with sides 5 * 2^-level, no members (packing arithmetic
// only). With n = 1 each level's total side length scales by B/2.
CubeTree synthetic_tree(std::size_t branching, int depth) {
  CubeTree tree;
  tree.rho = 0.5;
  tree.c0 = 0.02;
  tree.k_min = 0;
  tree.k_max = depth;
  std::vector<std::uint32_t> prev;
  for (int level = 0; level <= depth; ++level) {
    tree.level_start.push_back(static_cast<std::uint32_t>(tree.cubes.size()));
    std::vector<std::uint32_t> current;
    const std::size_t count = level == 0 ? 1 : prev.size() * branching;
    for (std::size_t i = 0; i < count; ++i) {
      Cube q;
      q.id = static_cast<std::uint32_t>(tree.cubes.size());
      q.level = level;
      q.parent = level == 0 ? -1 : static_cast<std::int64_t>(prev[i / branching]);
      if (q.parent >= 0) tree.cubes[q.parent].children.push_back(q.id);
      current.push_back(q.id);
      tree.cubes.push_back(std::move(q));
    }
    prev = std::move(current);
  }
  tree.level_start.push_back(static_cast<std::uint32_t>(tree.cubes.size()));
  return tree;
}

CoefficientField constant_field(const CubeTree& tree, double value) {
  CoefficientField f;
  f.kind = "osc";
  for (const Cube& q : tree.cubes) {
    CoefficientEntry e;
    e.cube = q.id;
    e.level = q.level;
    e.side = tree.side(q);
    e.value = value;
    f.entries.push_back(e);
  }
  return f;
}

}  // namespace

TEST_CASE("packing sum counts one unit per fully-bad binary level") {
  const int depth = 6;
  const CubeTree tree = synthetic_tree(2, depth);
  const CoefficientField field = constant_field(tree, 1.0);
  // With branching 2 and sides halving, every level contributes exactly 1.
  CHECK(packing_sum(tree, field, 0.5, 0, 1) == doctest::Approx(depth + 1));
  // Root at level 2 sees depth-2 more levels.
  const std::uint32_t mid = tree.level_cubes(2).front();
  CHECK(packing_sum(tree, field, 0.5, mid, 1) == doctest::Approx(depth - 1));
  // Nothing exceeds a huge threshold.
  CHECK(packing_sum(tree, field, 2.0, 0, 1) == doctest::Approx(0.0));
}

TEST_CASE("packing skips unreliable entries and reports holes") {
  const CubeTree tree = synthetic_tree(2, 4);
  CoefficientField field = constant_field(tree, 1.0);
  for (CoefficientEntry& e : field.entries)
    if (e.level == 4) e.unreliable = true;
  CHECK(packing_sum(tree, field, 0.5, 0, 1) == doctest::Approx(4.0));
  field.entries.pop_back();
  CHECK_THROWS_WITH_AS(packing_sum(tree, field, 0.5, 0, 1),
                       doctest::Contains("no entry"), std::runtime_error);
}

TEST_CASE("packing is monotone in eps and Chebyshev-bounded by the strong sum") {
  const CubeTree tree = synthetic_tree(2, 6);
  CoefficientField field = constant_field(tree, 0.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (CoefficientEntry& e : field.entries) e.value = u(rng);
  const double strong = strong_carleson_sum(tree, field, 0, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double p = packing_sum(tree, field, eps, 0, 1);
    CHECK(p <= prev + 1e-12);
    prev = p;
    CHECK(p <= strong / (eps * eps) + 1e-12);  // Chebyshev on value^2
  }
}

TEST_CASE("verdicts separate bounded from multiplying bad mass") {
  // Bad cubes only at the deepest level: every root's ratio is 1, the
  // normalized profile decays, verdict flat.
  const int depth = 7;
  const CubeTree bin = synthetic_tree(2, depth);
  CoefficientField sparse = constant_field(bin, 0.0);
  for (CoefficientEntry& e : sparse.entries)
    if (e.level == depth) e.value = 1.0;
  const PackingReport flat = carleson_constant(bin, sparse, 0.5, 1);
  CHECK(flat.verdict == "flat");
  CHECK(flat.supremum == doctest::Approx(1.0));
  CHECK(flat.band_min == 0);
  CHECK(flat.band_max == depth);

  // Quaternary tree with every cube bad: level sums double, ratios blow up.
  const CubeTree quad = synthetic_tree(4, depth);
  const CoefficientField dense = constant_field(quad, 1.0);
  const PackingReport grow = carleson_constant(quad, dense, 0.5, 1);
  CHECK(grow.verdict == "growing");
  CHECK(grow.supremum >= std::pow(2.0, depth));
  export_packing_csv(grow, "packing_test.csv");
  export_packing_json(grow, "packing_test.json");
  std::remove("packing_test.csv");
  std::remove("packing_test.json");
}

TEST_CASE("rtilde keeps everything when F is everything") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 0.005;
  const auto gs = generate(spec);
  const CubeTree tree = build_default_tree(gs.space, 0.25, 0.02, 1);
  const std::uint32_t root = tree.level_cubes(tree.k_min).front();
  const RtildeResult r =
      rtilde_check(gs.space, tree, root, std::vector<std::uint8_t>(gs.space.size(), 1), 0.1);
  CHECK(r.pass);
  CHECK(r.mass == doctest::Approx(r.root_mass));
  CHECK(r.members.size() == gs.space.size());
}

TEST_CASE("rtilde drops exactly the subtree that leaks") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 0.005;
  const auto gs = generate(spec);
  const CubeTree tree = build_default_tree(gs.space, 0.25, 0.02, 1);
  const std::uint32_t root = tree.level_cubes(tree.k_min).front();
  // Remove one small deep cube from F entirely.
  const Cube* victim = nullptr;
  for (const Cube& q : tree.cubes)
    if (q.level == tree.k_max && q.members.size() >= 3) {
      victim = &q;
      break;
    }
  REQUIRE(victim != nullptr);
  std::vector<std::uint8_t> F(gs.space.size(), 1);
  for (std::size_t i : victim->members) F[i] = 0;
  const double eps = 0.25;  // cut mass stays under eps, parents keep 1-2eps
  const RtildeResult r = rtilde_check(gs.space, tree, root, F, eps);
  CHECK(r.pass);
  for (std::size_t i : victim->members)
    CHECK(std::find(r.members.begin(), r.members.end(), i) == r.members.end());
  CHECK(r.members.size() <= gs.space.size() - victim->members.size());
  // Survivors all lie in F.
  for (std::size_t i : r.members) CHECK(F[i] == 1);
}

TEST_CASE("rtilde rejects an F that violates the mass precondition") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 0.01;
  const auto gs = generate(spec);
  const CubeTree tree = build_default_tree(gs.space, 0.25, 0.02, 1);
  const std::uint32_t root = tree.level_cubes(tree.k_min).front();
  std::vector<std::uint8_t> F(gs.space.size(), 1);
  for (std::size_t i = 0; i < gs.space.size() / 2; ++i) F[i] = 0;  // half gone
  CHECK_THROWS_AS(rtilde_check(gs.space, tree, root, F, 0.1), std::domain_error);
}

TEST_CASE("rtilde invariants hold on randomized masks") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 0.005;
  const auto gs = generate(spec);
  const CubeTree tree = build_default_tree(gs.space, 0.25, 0.02, 1);
  const std::uint32_t root = tree.level_cubes(tree.k_min).front();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double eps : {0.05, 0.1, 0.2}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::uint8_t> F(gs.space.size(), 1);
      // Remove scattered points with total mass below eps/2.
      double removed = 0.0;
      while (removed < 0.4 * eps) {
        const std::size_t i = rng() % gs.space.size();
        if (F[i]) {
          F[i] = 0;
          removed += gs.space.weight(i);
        }
        if (u(rng) < 0.05) break;
      }
      const RtildeResult r = rtilde_check(gs.space, tree, root, F, eps);
      CHECK(r.mass <= r.root_mass + 1e-12);
      CHECK(r.pass == (r.mass >= eps * r.root_mass - 1e-12 * r.root_mass));
      // Survivors are points of R (membership is cube-based, so a survivor
      // need not itself lie in F).
      const Cube& R = tree.cube(root);
      double mass = 0.0;
      for (std::size_t i : r.members) {
        CHECK(std::binary_search(R.members.begin(), R.members.end(), i));
        mass += gs.space.weight(i);
      }
      CHECK(mass == doctest::Approx(r.mass));
    }
  }
}
