#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <vector>

#include "mmflat/grid_function.hpp"

using namespace mmflat;

namespace {

GridFunction random_function(std::mt19937_64& rng, int n, int J, double amp = 1.0) {
  const std::size_t cells = n == 1 ? (std::size_t{1} << J) : (std::size_t{1} << (2 * J));
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<double> v(cells);
  for (double& x : v) x = u(rng);
  return GridFunction(n, J, {0.0, 0.0}, 1.0, std::move(v), amp);
}

}  // namespace

TEST_CASE("means and volumes on a hand-built raster") {
  // 1d, J = 2: cells 1, 2, 3, 4 on [0, 1].
  GridFunction h(1, 2, {0.0, 0.0}, 1.0, {1.0, 2.0, 3.0, 4.0}, 4.0);
  CHECK(h.cell_volume() == doctest::Approx(0.25));
  CHECK(h.mean(h.root()) == doctest::Approx(2.5));
  CHECK(h.mean({1, {0, 0}}) == doctest::Approx(1.5));
  CHECK(h.mean({2, {3, 0}}) == doctest::Approx(4.0));
  CHECK(h.l2_norm_sq() == doctest::Approx((1.0 + 4.0 + 9.0 + 16.0) / 4.0));
}

TEST_CASE("haar delta on the half indicator is the classical step") {
  // h = 1 on [0, 1/2), 0 on [1/2, 1); Delta_Q0 h = ±1/2 on the halves.
  GridFunction h(1, 3, {0.0, 0.0}, 1.0, {1, 1, 1, 1, 0, 0, 0, 0}, 1.0);
  const GridFunction d = haar_delta(h, h.root());
  CHECK(d.at(0) == doctest::Approx(0.5));
  CHECK(d.at(7) == doctest::Approx(-0.5));
  CHECK(d.l2_norm_sq() == doctest::Approx(0.25));
  // Delta of a constant vanishes.
  GridFunction c(1, 3, {0.0, 0.0}, 1.0, std::vector<double>(8, 3.0), 3.0);
  CHECK(haar_delta(c, c.root()).max_abs() == doctest::Approx(0.0));
  CHECK_THROWS_AS(haar_delta(h, DyadicCube{3, {0, 0}}), std::domain_error);
}

TEST_CASE("martingale differences are orthogonal and sum to h minus its mean") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const int J = 3 + trial % 3;
    const GridFunction h = random_function(rng, n, J);
    std::vector<GridFunction> deltas;
    std::vector<DyadicCube> stack{h.root()};
    while (!stack.empty()) {
      const DyadicCube q = stack.back();
      stack.pop_back();
      if (q.level >= J) continue;
      deltas.push_back(haar_delta(h, q));
      for (const DyadicCube& c : h.children(q)) stack.push_back(c);
    }
    double parseval = 0.0;
    for (std::size_t a = 0; a < deltas.size(); ++a) {
      parseval += deltas[a].l2_norm_sq();
      for (std::size_t b = a + 1; b < deltas.size(); ++b)
        CHECK(std::abs(deltas[a].inner(deltas[b])) <= 1e-12);
    }
    const double mean = h.mean(h.root());
    double centered = h.l2_norm_sq() - mean * mean * std::pow(h.root_side(), n);
    CHECK(parseval == doctest::Approx(centered).epsilon(1e-9));
    // The differences telescope back to h - mean.
    GridFunction sum(n, J, h.root_corner(), h.root_side());
    for (const GridFunction& d : deltas)
      for (std::size_t i = 0; i < sum.cell_count(); ++i) sum.values()[i] += d.values()[i];
    for (std::size_t i = 0; i < sum.cell_count(); ++i)
      CHECK(sum.values()[i] + mean == doctest::Approx(h.values()[i]).epsilon(1e-9));
  }
}

TEST_CASE("depth-k energy obeys the (k+1) sup-norm budget") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 1 + trial % 2;
    const GridFunction h = random_function(rng, n, 6, 0.7);
    const double vol = std::pow(h.root_side(), n);
    for (int k = 1; k <= 3; ++k) {
      const double e = delta_k_energy(h, h.root(), k);
      CHECK(e >= 0.0);
      CHECK(e <= (k + 1) * 0.7 * 0.7 * vol + 1e-12);
      // Energies accumulate in k.
      if (k > 1) CHECK(e >= delta_k_energy(h, h.root(), k - 1) - 1e-12);
    }
    CHECK_THROWS_AS(delta_k_energy(h, h.root(), 6), std::domain_error);
  }
}

TEST_CASE("mean over a rasterized set") {
  GridFunction h(1, 2, {0.0, 0.0}, 1.0, {1.0, 2.0, 3.0, 4.0}, 4.0);
  RasterMask e{1, 0, 0, 1};
  CHECK(mean_over_set(h, e) == doctest::Approx(2.5));
  CHECK(mask_volume(e, h.cell_volume()) == doctest::Approx(0.5));
  CHECK_THROWS_AS(mean_over_set(h, RasterMask(4, 0)), std::domain_error);
}

TEST_CASE("oscillation scan flags exactly the cubes crossing the jump") {
  // Step function on [0,1]^2: 0 left half, 1 right half. Balls inside a pure
  // half have zero deviation; cubes straddling the jump show deviation ~1/2.
  const int J = 5;
  const std::size_t m = std::size_t{1} << J;
  std::vector<double> v(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) v[j * m + i] = i < m / 2 ? 0.0 : 1.0;
  GridFunction h(2, J, {0.0, 0.0}, 1.0, std::move(v), 1.0);
  const auto rep = oscillation_bad_cubes(h, ball_family(0.25), 0.05, 3);
  CHECK(rep.cubes_checked > 0);
  CHECK(!rep.bad.empty());
  for (const BadCubeEntry& b : rep.bad) {
    // Bad cubes touch the line x = 1/2.
    const double side = std::pow(0.5, b.cube.level);
    const double x0 = b.cube.cell[0] * side;
    CHECK(x0 <= 0.5);
    CHECK(x0 + side >= 0.5);
  }
  // A constant function has no bad cubes at all.
  GridFunction c(2, J, {0.0, 0.0}, 1.0, std::vector<double>(m * m, 2.0), 2.0);
  const auto rep0 = oscillation_bad_cubes(c, ball_family(0.25), 0.05, 3);
  CHECK(rep0.bad.empty());
  CHECK(rep0.packing_sum == doctest::Approx(0.0));
  export_bad_cubes(h, rep, "bad_cubes_test.csv");
  std::remove("bad_cubes_test.csv");
}

TEST_CASE("sandwich envelopes bracket a Cauchy sequence of sets") {
  // E_j: left fraction (1/2 + 2^-j-2) of [0,1], converging to the half line.
  const int J = 8;
  const std::size_t m = std::size_t{1} << J;
  std::vector<RasterMask> seq;
  for (int j = 0; j < 6; ++j) {
    RasterMask e(m, 0);
    const double frac = 0.5 + std::pow(2.0, -j - 2);
    for (std::size_t i = 0; i < m; ++i)
      if ((i + 0.5) / m < frac) e[i] = 1;
    seq.push_back(std::move(e));
  }
  const double cv = 1.0 / m;
  const SandwichFamily fam = sandwich_construct(seq, cv);
  REQUIRE(fam.lower.size() == fam.eps.size());
  for (std::size_t t = 0; t < fam.eps.size(); ++t) {
    // lower subset upper, and the bracket tightens as eps decreases
    double lv = mask_volume(fam.lower[t], cv);
    double uv = mask_volume(fam.upper[t], cv);
    for (std::size_t i = 0; i < m; ++i)
      if (fam.lower[t][i]) CHECK(fam.upper[t][i] == 1);
    CHECK(uv - lv <= 4.0 * fam.eps[t]);
    if (t > 0) CHECK(fam.k0[t] >= fam.k0[t - 1]);  // monotone tail start
  }
  // A non-Cauchy sequence is rejected with the offending pair named.
  std::vector<RasterMask> bad{RasterMask(m, 0), RasterMask(m, 1), RasterMask(m, 0),
                              RasterMask(m, 1), RasterMask(m, 0)};
  CHECK_THROWS_AS(sandwich_construct(bad, cv), std::domain_error);
}

TEST_CASE("grid function serialization round-trips") {
  std::mt19937_64 rng(31);
  const GridFunction h = random_function(rng, 2, 4, 2.0);
  save_grid_function(h, "gf_roundtrip.bin");
  const GridFunction back = load_grid_function("gf_roundtrip.bin");
  CHECK(back.dim() == h.dim());
  CHECK(back.resolution() == h.resolution());
  CHECK(back.root_side() == doctest::Approx(h.root_side()));
  CHECK(back.sup_bound() == doctest::Approx(h.sup_bound()));
  REQUIRE(back.cell_count() == h.cell_count());
  for (std::size_t i = 0; i < h.cell_count(); ++i)
    CHECK(back.values()[i] == h.values()[i]);
  std::remove("gf_roundtrip.bin");
  std::remove("gf_roundtrip.bin.json");
}
