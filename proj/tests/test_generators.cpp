#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mmflat/generators.hpp"

using namespace mmflat;

TEST_CASE("segment generator: mass, chart alignment, regularity") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Segment;
  spec.spacing = 0.001;
  const GeneratedSpace gs = generate(spec);
  CHECK(gs.space.size() == 1000);
  CHECK(gs.space.total_mass() == doctest::Approx(1.0));
  REQUIRE(gs.chart.has_value());
  CHECK(gs.chart->params.size() == gs.space.size());
  // Chart is an isometry here: parameter distance equals metric distance.
  CHECK(gs.space.distance(100, 700) ==
        doctest::Approx(std::abs(gs.chart->params[100][0] - gs.chart->params[700][0])));
}

TEST_CASE("snowflake generator obeys the 2 r^2 ball law") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Snowflake;
  spec.spacing = 1e-4;
  spec.snowflake_s = 0.5;
  const GeneratedSpace gs = generate(spec);
  CHECK(gs.space.dim_n() == 2);
  const std::size_t mid = gs.space.size() / 2;
  for (double r : {0.1, 0.2, 0.3}) {
    // ball of radius r in |x-y|^(1/2) is an interval of length 2 r^2
    const double mass = ball_mass(gs.space, mid, r);
    CHECK(std::abs(mass / (2.0 * r * r) - 1.0) <= 0.01);
  }
}

TEST_CASE("four-corner Cantor counts and regularity bracket") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::FourCornerCantor;
  spec.depth = 5;
  const GeneratedSpace gs = generate(spec);
  CHECK(gs.space.size() == 1024);  // 4^5
  CHECK(gs.space.total_mass() == doctest::Approx(1.0));
  // 1-regularity with constants within [1/4, 4] at the sampled scales.
  std::vector<std::size_t> centers;
  for (std::size_t i = 0; i < gs.space.size(); i += 97) centers.push_back(i);
  const RegularityReport rep =
      ahlfors_scan(gs.space, 1, centers, {0.02, 0.0625, 0.25});
  CHECK(rep.c_lower >= 0.25);
  CHECK(rep.c_upper <= 4.0);
}

TEST_CASE("graph curves respect the advertised bi-Lipschitz constant") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::BilipCurve;
  spec.spacing = 0.001;
  const GeneratedSpace gs = generate(spec);
  const double L = bilip_curve_constant();
  CHECK(L <= 1.2);
  CHECK(gs.nominal_L <= 1.2 * 1.01);
  REQUIRE(gs.chart.has_value());
  for (std::size_t i = 0; i < gs.space.size(); i += 37)
    for (std::size_t j = i + 1; j < gs.space.size(); j += 211) {
      const double dp = std::abs(gs.chart->params[i][0] - gs.chart->params[j][0]);
      const double dx = gs.space.distance(i, j);
      CHECK(dx >= dp - 1e-12);
      CHECK(dx <= gs.nominal_L * dp + 1e-12);
    }
}

TEST_CASE("circle generator: chord metric and arc-length chart") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::Circle;
  spec.spacing = 0.01;
  spec.radius = 2.0;
  const GeneratedSpace gs = generate(spec);
  CHECK(gs.space.total_mass() == doctest::Approx(2.0 * std::numbers::pi * 2.0));
  // Chord <= arc <= (pi/2) * chord.
  for (std::size_t j = 1; j < gs.space.size() / 2; j += 53) {
    const double chord = gs.space.distance(0, j);
    const double arc = std::abs(gs.chart->params[j][0] - gs.chart->params[0][0]);
    CHECK(chord <= arc + 1e-12);
    CHECK(arc <= std::numbers::pi / 2.0 * chord + 1e-12);
  }
}

TEST_CASE("generation is deterministic") {
  GeneratorSpec spec;
  spec.kind = SpaceKind::LipschitzGraph;
  spec.spacing = 0.005;
  spec.amplitude = 0.17;
  const GeneratedSpace a = generate(spec);
  const GeneratedSpace b = generate(spec);
  REQUIRE(a.space.size() == b.space.size());
  for (std::size_t i = 0; i < a.space.size(); ++i) {
    CHECK(a.space.weight(i) == b.space.weight(i));
    const auto ca = a.space.coord(i);
    const auto cb = b.space.coord(i);
    for (std::size_t d = 0; d < ca.size(); ++d) CHECK(ca[d] == cb[d]);
  }
}

TEST_CASE("kind names round-trip and bad names are rejected") {
  for (SpaceKind k :
       {SpaceKind::Segment, SpaceKind::Grid2d, SpaceKind::Snowflake, SpaceKind::LipschitzGraph,
        SpaceKind::BilipCurve, SpaceKind::FourCornerCantor, SpaceKind::Circle})
    CHECK(parse_space_kind(space_kind_name(k)) == k);
  CHECK_THROWS_AS(parse_space_kind("moebius"), std::domain_error);
  GeneratorSpec bad;
  bad.spacing = 0.0;
  CHECK_THROWS_AS(generate(bad), std::domain_error);
}
