#pragma once

#include <optional>
#include <string>

#include "mmflat/metric_space.hpp"
#include "mmflat/shifted_lattice.hpp"

namespace mmflat {

/// Registered test-space kinds. Chart-based kinds also return the sampled map.
enum class SpaceKind {
  Segment,          // unit-density segment [0,1] embedded in R^2, n = 1
  Grid2d,           // integer-spacing grid in R^2, n = 2
  Snowflake,        // [0,1] with metric |x-y|^s, n = 2 for s = 1/2
  LipschitzGraph,   // x -> (x, a*sin(2*pi*x)), n = 1
  BilipCurve,       // registered 1.2-bi-Lipschitz graph curve, n = 1
  FourCornerCantor, // depth-d four-corner Cantor set in R^2, n = 1
  Circle,           // circle of radius R in R^2 with chord metric, n = 1
};

struct GeneratorSpec {
  SpaceKind kind = SpaceKind::Segment;
  double spacing = 0.01;   // parameter-domain spacing for chart-based kinds
  int depth = 5;           // Cantor depth
  double amplitude = 0.3;  // graph amplitude a
  double snowflake_s = 0.5;
  double radius = 1.0;     // circle radius
  std::uint64_t seed = 0;
};

struct GeneratedSpace {
  MetricSpaceSample space;
  std::optional<Chart> chart;
  double nominal_L = 1.0;
};

GeneratedSpace generate(const GeneratorSpec& spec);

SpaceKind parse_space_kind(const std::string& name);
std::string space_kind_name(SpaceKind kind);

/// Bi-Lipschitz constant of the registered bilip curve (graph slope bound 0.66).
double bilip_curve_constant();

}  // namespace mmflat
