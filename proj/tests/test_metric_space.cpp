#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "mmflat/generators.hpp"
#include "mmflat/metric_space.hpp"

using namespace mmflat;

namespace {

MetricSpaceSample unit_segment(std::size_t m) {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 1.0 / static_cast<double>(m);
  return generate(spec).space;
}

}  // namespace

TEST_CASE("ball masses on the uniform segment are close to 2r") {
  const auto space = unit_segment(1000);
  const std::size_t mid = 500;
  for (double r : {0.05, 0.1, 0.2}) {
    const double mass = ball_mass(space, mid, r);
    CHECK(std::abs(mass - 2.0 * r) <= 2.5e-3);
  }
  CHECK_THROWS_AS(ball_mass(space, space.size(), 0.1), std::domain_error);
  CHECK_THROWS_AS(ball_mass(space, 0, -1.0), std::domain_error);
}

TEST_CASE("validate accepts generated spaces and distances are symmetric") {
  const auto space = unit_segment(200);
  space.validate();
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(space.distance(i, 3 * i) == doctest::Approx(space.distance(3 * i, i)));
}

TEST_CASE("snowflake transform halves the exponent and hides coordinates") {
  const auto space = unit_segment(128);
  const auto flake = snowflake_transform(space, 0.5);
  CHECK_FALSE(flake.has_coords());
  CHECK(flake.distance(0, 100) == doctest::Approx(std::pow(space.distance(0, 100), 0.5)));
  // Composing transforms multiplies exponents.
  const auto again = snowflake_transform(flake, 0.5);
  CHECK(again.distance(0, 100) == doctest::Approx(std::pow(space.distance(0, 100), 0.25)));
}

TEST_CASE("ahlfors scan brackets the density of the segment") {
  const auto space = unit_segment(1000);
  std::vector<std::size_t> centers;
  for (std::size_t i = 200; i <= 800; i += 60) centers.push_back(i);
  const RegularityReport rep = ahlfors_scan(space, 1, centers, {0.05, 0.1, 0.15});
  CHECK(rep.c_lower >= 1.8);
  CHECK(rep.c_upper <= 2.2);
  CHECK_FALSE(rep.degenerate);
  CHECK(rep.doubling_estimate <= 2.5);
}

TEST_CASE("ahlfors scan flags a density break") {
  // Two parallel far-apart segments traversed as one sample: balls crossing the
  // gap deviate from the 2r law at the gap scale.
  std::vector<std::vector<double>> coords;
  std::vector<double> w;
  for (int i = 0; i < 100; ++i) {
    coords.push_back({i * 0.01, 0.0});
    w.push_back(0.01);
  }
  for (int i = 0; i < 100; ++i) {
    coords.push_back({i * 0.01, 0.02});
    w.push_back(0.01);
  }
  auto space = MetricSpaceSample::from_coords(coords, w, 1);
  std::vector<std::size_t> centers{50, 150};
  const RegularityReport rep = ahlfors_scan(space, 1, centers, {0.05, 0.2});
  CHECK(rep.c_upper > 2.5);  // doubled density once balls span both strands
}

TEST_CASE("serialization round-trips coordinates and matrix metrics") {
  const auto space = unit_segment(64);
  save_space(space, "space_roundtrip.json");
  const auto loaded = load_space("space_roundtrip.json");
  REQUIRE(loaded.size() == space.size());
  CHECK(loaded.distance(3, 40) == doctest::Approx(space.distance(3, 40)));
  CHECK(loaded.weight(5) == doctest::Approx(space.weight(5)));

  const auto flake = snowflake_transform(space, 0.5);
  save_space(flake, "space_roundtrip_flake.json");
  const auto loaded_flake = load_space("space_roundtrip_flake.json");
  CHECK(loaded_flake.distance(3, 40) == doctest::Approx(flake.distance(3, 40)));
  std::remove("space_roundtrip.json");
  std::remove("space_roundtrip_flake.json");
  std::remove("space_roundtrip_flake.json.bin");
}

TEST_CASE("from_matrix rejects asymmetric input") {
  std::vector<double> bad{0.0, 1.0, 2.0, 0.0};
  CHECK_THROWS_AS(MetricSpaceSample::from_matrix(bad, 2, {1.0, 1.0}, 1).validate(),
                  std::domain_error);
}
