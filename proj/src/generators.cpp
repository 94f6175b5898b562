#include "mmflat/generators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmflat {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBilipSlope = 0.66;  // sqrt(1 + 0.66^2) < 1.2
}  // namespace

double bilip_curve_constant() { return std::sqrt(1.0 + kBilipSlope * kBilipSlope); }

GeneratedSpace generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case SpaceKind::Segment: {
      if (!(spec.spacing > 0.0)) throw std::domain_error("spacing must be positive");
      const auto m = static_cast<std::size_t>(std::llround(1.0 / spec.spacing));
      std::vector<std::vector<double>> coords;
      std::vector<double> weights(m, spec.spacing);
      Chart chart;
      chart.n = 1;
      for (std::size_t i = 0; i < m; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * spec.spacing;
        coords.push_back({x, 0.0});
        chart.params.push_back({x});
      }
      chart.bilip_L = 1.0;
      GeneratedSpace out{MetricSpaceSample::from_coords(std::move(coords), std::move(weights), 1),
                         std::move(chart), 1.0};
      return out;
    }
    case SpaceKind::Grid2d: {
      const auto m = static_cast<std::size_t>(std::llround(1.0 / spec.spacing));
      std::vector<std::vector<double>> coords;
      Chart chart;
      chart.n = 2;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          coords.push_back({static_cast<double>(i), static_cast<double>(j)});
          chart.params.push_back({static_cast<double>(i), static_cast<double>(j)});
        }
      std::vector<double> weights(coords.size(), 1.0);
      chart.bilip_L = 1.0;
      return {MetricSpaceSample::from_coords(std::move(coords), std::move(weights), 2),
              std::move(chart), 1.0};
    }
    case SpaceKind::Snowflake: {
      if (!(spec.spacing > 0.0)) throw std::domain_error("spacing must be positive");
      const auto m = static_cast<std::size_t>(std::llround(1.0 / spec.spacing));
      std::vector<std::vector<double>> coords;
      Chart chart;
      chart.n = 1;
      for (std::size_t i = 0; i < m; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * spec.spacing;
        coords.push_back({x});
        chart.params.push_back({x});
      }
      std::vector<double> weights(m, spec.spacing);
      const int n = static_cast<int>(std::llround(1.0 / spec.snowflake_s));
      auto space = MetricSpaceSample::from_coords(std::move(coords), std::move(weights), n,
                                                  AmbientNorm::L2, spec.snowflake_s);
      chart.bilip_L = 0.0;  // the snowflake chart is not bi-Lipschitz
      return {std::move(space), std::move(chart), 0.0};
    }
    case SpaceKind::LipschitzGraph:
    case SpaceKind::BilipCurve: {
      if (!(spec.spacing > 0.0)) throw std::domain_error("spacing must be positive");
      // The bi-Lipschitz curve oscillates at a fine scale so that coarse balls
      // see a straight strip; the Lipschitz graph keeps a unit-scale bump.
      const double freq = spec.kind == SpaceKind::BilipCurve ? 16.0 : 1.0;
      const double a =
          spec.kind == SpaceKind::BilipCurve ? kBilipSlope / (kTwoPi * freq) : spec.amplitude;
      const auto m = static_cast<std::size_t>(std::llround(1.0 / spec.spacing));
      std::vector<std::vector<double>> coords;
      std::vector<double> weights;
      Chart chart;
      chart.n = 1;
      for (std::size_t i = 0; i < m; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * spec.spacing;
        coords.push_back({x, a * std::sin(kTwoPi * freq * x)});
        chart.params.push_back({x});
        // arclength measure: weight = local speed * parameter spacing
        const double slope = a * kTwoPi * freq * std::cos(kTwoPi * freq * x);
        weights.push_back(spec.spacing * std::sqrt(1.0 + slope * slope));
      }
      const double L = std::sqrt(1.0 + kTwoPi * freq * a * kTwoPi * freq * a);
      chart.bilip_L = L;
      return {MetricSpaceSample::from_coords(std::move(coords), std::move(weights), 1),
              std::move(chart), L};
    }
    case SpaceKind::FourCornerCantor: {
      if (spec.depth < 0) throw std::domain_error("depth must be nonnegative");
      std::vector<std::vector<double>> coords{{0.0, 0.0}};
      double s = 1.0;
      for (int k = 0; k < spec.depth; ++k) {
        std::vector<std::vector<double>> next;
        next.reserve(coords.size() * 4);
        const double off = 0.75 * s;
        for (const auto& p : coords)
          for (double dy : {0.0, off})
            for (double dx : {0.0, off}) next.push_back({p[0] + dx, p[1] + dy});
        coords = std::move(next);
        s *= 0.25;
      }
      for (auto& p : coords) {
        p[0] += s / 2.0;
        p[1] += s / 2.0;
      }
      std::vector<double> weights(coords.size(), std::pow(0.25, spec.depth));
      return {MetricSpaceSample::from_coords(std::move(coords), std::move(weights), 1),
              std::nullopt, 0.0};
    }
    case SpaceKind::Circle: {
      if (!(spec.spacing > 0.0)) throw std::domain_error("spacing must be positive");
      const double circumference = kTwoPi * spec.radius;
      const auto m = static_cast<std::size_t>(std::llround(circumference / spec.spacing));
      std::vector<std::vector<double>> coords;
      Chart chart;
      chart.n = 1;
      for (std::size_t i = 0; i < m; ++i) {
        const double theta = kTwoPi * static_cast<double>(i) / static_cast<double>(m);
        coords.push_back({spec.radius * std::cos(theta), spec.radius * std::sin(theta)});
        chart.params.push_back({spec.radius * theta});  // arc length
      }
      std::vector<double> weights(m, circumference / static_cast<double>(m));
      chart.bilip_L = std::numbers::pi / 2.0;
      return {MetricSpaceSample::from_coords(std::move(coords), std::move(weights), 1),
              std::move(chart), std::numbers::pi / 2.0};
    }
  }
  throw std::domain_error("unregistered space kind");
}

SpaceKind parse_space_kind(const std::string& name) {
  if (name == "segment") return SpaceKind::Segment;
  if (name == "grid2d") return SpaceKind::Grid2d;
  if (name == "snowflake") return SpaceKind::Snowflake;
  if (name == "lipschitz_graph") return SpaceKind::LipschitzGraph;
  if (name == "bilip_curve") return SpaceKind::BilipCurve;
  if (name == "four_corner_cantor") return SpaceKind::FourCornerCantor;
  if (name == "circle") return SpaceKind::Circle;
  throw std::domain_error("unregistered space kind: " + name);
}

std::string space_kind_name(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Segment: return "segment";
    case SpaceKind::Grid2d: return "grid2d";
    case SpaceKind::Snowflake: return "snowflake";
    case SpaceKind::LipschitzGraph: return "lipschitz_graph";
    case SpaceKind::BilipCurve: return "bilip_curve";
    case SpaceKind::FourCornerCantor: return "four_corner_cantor";
    case SpaceKind::Circle: return "circle";
  }
  return "?";
}

}  // namespace mmflat
