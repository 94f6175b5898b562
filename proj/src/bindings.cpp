// Python bindings for the core operations: space generation, cube trees,
// flatness coefficients, packing audits, transport, and the pipeline driver.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmflat/carleson.hpp"
#include "mmflat/coefficients.hpp"
#include "mmflat/cube_tree.hpp"
#include "mmflat/generators.hpp"
#include "mmflat/metric_space.hpp"
#include "mmflat/pipeline.hpp"
#include "mmflat/transport.hpp"

namespace py = pybind11;
using namespace mmflat;

namespace {

GeneratedSpace py_generate(const std::string& kind, double spacing, int depth, double radius,
                           double snowflake_s) {
  GeneratorSpec spec;
  spec.kind = parse_space_kind(kind);
  spec.spacing = spacing;
  spec.depth = depth;
  spec.radius = radius;
  spec.snowflake_s = snowflake_s;
  return generate(spec);
}

py::dict axiom_dict(const AxiomReport& r) {
  py::dict d;
  d["cover_ok"] = r.cover_ok;
  d["nesting_ok"] = r.nesting_ok;
  d["sandwich_ok"] = r.sandwich_ok;
  d["all_ok"] = r.all_ok();
  return d;
}

py::dict packing_dict(const PackingReport& r) {
  py::dict d;
  d["eps"] = r.eps;
  d["supremum"] = r.supremum;
  d["verdict"] = r.verdict;
  d["profile"] = r.profile;
  d["band_min"] = r.band_min;
  d["band_max"] = r.band_max;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mmflat, m) {
  m.doc() = "Multiscale flatness coefficients and packing audits on finite "
            "metric-measure samples";

  py::class_<MetricSpaceSample>(m, "MetricSpaceSample")
      .def_static(
          "from_coords",
          [](std::vector<std::vector<double>> coords, std::vector<double> weights, int n) {
            return MetricSpaceSample::from_coords(std::move(coords), std::move(weights), n);
          },
          py::arg("coords"), py::arg("weights"), py::arg("n"))
      .def("__len__", &MetricSpaceSample::size)
      .def_property_readonly("dim_n", &MetricSpaceSample::dim_n)
      .def_property_readonly("total_mass", &MetricSpaceSample::total_mass)
      .def("weight", &MetricSpaceSample::weight)
      .def("distance", &MetricSpaceSample::distance)
      .def("diameter", &MetricSpaceSample::diameter)
      .def("min_spacing", &MetricSpaceSample::min_spacing)
      .def("validate", &MetricSpaceSample::validate, py::arg("max_triples") = 200000);

  m.def("ball_mass", &ball_mass, py::arg("space"), py::arg("center"), py::arg("r"));

  py::class_<Chart>(m, "Chart")
      .def_property_readonly("n", [](const Chart& c) { return c.n; })
      .def_property_readonly("bilip_L", [](const Chart& c) { return c.bilip_L; })
      .def_property_readonly("params", [](const Chart& c) { return c.params; });

  py::class_<GeneratedSpace>(m, "GeneratedSpace")
      .def_readonly("space", &GeneratedSpace::space)
      .def_property_readonly("chart",
                             [](const GeneratedSpace& g) -> py::object {
                               if (!g.chart) return py::none();
                               return py::cast(*g.chart);
                             })
      .def_readonly("nominal_L", &GeneratedSpace::nominal_L);

  m.def("generate", &py_generate, py::arg("kind"), py::arg("spacing") = 0.01,
        py::arg("depth") = 5, py::arg("radius") = 1.0, py::arg("snowflake_s") = 0.5,
        "Sample one of the registered model spaces (segment, grid2d, snowflake, "
        "lipschitz_graph, bilip_curve, four_corner_cantor, circle).");

  py::class_<Cube>(m, "Cube")
      .def_readonly("id", &Cube::id)
      .def_readonly("level", &Cube::level)
      .def_readonly("center", &Cube::center)
      .def_readonly("parent", &Cube::parent)
      .def_readonly("children", &Cube::children)
      .def_readonly("members", &Cube::members);

  py::class_<CubeTree>(m, "CubeTree")
      .def_readonly("rho", &CubeTree::rho)
      .def_readonly("c0", &CubeTree::c0)
      .def_readonly("k_min", &CubeTree::k_min)
      .def_readonly("k_max", &CubeTree::k_max)
      .def("__len__", [](const CubeTree& t) { return t.cubes.size(); })
      .def("cube", &CubeTree::cube, py::return_value_policy::reference_internal)
      .def("level_cubes", &CubeTree::level_cubes)
      .def("side", [](const CubeTree& t, std::uint32_t id) { return t.side(t.cube(id)); })
      .def("depth", &CubeTree::depth);

  m.def("build_tree", &build_default_tree, py::arg("space"), py::arg("rho") = 0.25,
        py::arg("c0") = 0.02, py::arg("seed") = 0);
  m.def(
      "verify_cube_axioms",
      [](const MetricSpaceSample& s, const CubeTree& t) {
        return axiom_dict(verify_cube_axioms(s, t));
      },
      py::arg("space"), py::arg("tree"));
  m.def("save_tree", &save_tree);
  m.def("load_tree", &load_tree);

  m.def(
      "osc",
      [](const MetricSpaceSample& s, std::size_t x, double r) {
        return osc_coefficient(s, x, r);
      },
      py::arg("space"), py::arg("x"), py::arg("r"),
      "Ball-mass power-law oscillation of B(x, r), normalized by r^n.");
  m.def(
      "alpha",
      [](const MetricSpaceSample& s, std::size_t x, double r) {
        const AlphaResult a = alpha_coefficient(s, x, r);
        py::dict d;
        d["value"] = a.value;
        d["c"] = a.c;
        d["lp_residual"] = a.lp_residual;
        return d;
      },
      py::arg("space"), py::arg("x"), py::arg("r"),
      "Capped-transport distance of B(x, r) to the nearest constant-density plane.");
  m.def(
      "md",
      [](const MetricSpaceSample& s, const Chart& chart, std::vector<double> corner,
         double side) { return md_coefficient(s, chart, corner, side).value; },
      py::arg("space"), py::arg("chart"), py::arg("box_corner"), py::arg("box_side"),
      "Coarse metric derivative of the chart over a parameter box.");

  py::class_<CoefficientEntry>(m, "CoefficientEntry")
      .def_readonly("cube", &CoefficientEntry::cube)
      .def_readonly("level", &CoefficientEntry::level)
      .def_readonly("side", &CoefficientEntry::side)
      .def_readonly("value", &CoefficientEntry::value)
      .def_readonly("unreliable", &CoefficientEntry::unreliable);

  py::class_<CoefficientField>(m, "CoefficientField")
      .def_readonly("kind", &CoefficientField::kind)
      .def_readonly("entries", &CoefficientField::entries);

  m.def(
      "compute_field",
      [](const MetricSpaceSample& s, const CubeTree& t, const std::string& kind) {
        FieldConfig fc;
        return compute_field(s, t, kind, fc);
      },
      py::arg("space"), py::arg("tree"), py::arg("kind"),
      "Per-cube coefficient field (osc | alpha | ...) over the tree band.");
  m.def(
      "carleson_constant",
      [](const CubeTree& t, const CoefficientField& f, double eps, int n) {
        return packing_dict(carleson_constant(t, f, eps, n));
      },
      py::arg("tree"), py::arg("field"), py::arg("eps"), py::arg("n"),
      "Packing ratios of bad cubes with the flat/growing verdict.");
  m.def("packing_sum", &packing_sum, py::arg("tree"), py::arg("field"), py::arg("eps"),
        py::arg("root"), py::arg("n"));
  m.def(
      "rtilde_check",
      [](const MetricSpaceSample& s, const CubeTree& t, std::uint32_t root,
         const std::vector<std::uint8_t>& F, double eps) {
        const RtildeResult r = rtilde_check(s, t, root, F, eps);
        py::dict d;
        d["pass"] = r.pass;
        d["mass"] = r.mass;
        d["root_mass"] = r.root_mass;
        d["members"] = r.members;
        return d;
      },
      py::arg("space"), py::arg("tree"), py::arg("root"), py::arg("F"), py::arg("eps"));

  m.def(
      "transport_distance",
      [](std::vector<std::vector<double>> pts, std::vector<double> mu, std::vector<double> nu,
         std::vector<double> cap) {
        TransportInstance inst;
        inst.metric = [pts = std::move(pts)](std::size_t i, std::size_t j) {
          double s = 0.0;
          for (std::size_t d = 0; d < pts[i].size(); ++d)
            s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
          return std::sqrt(s);
        };
        inst.mu = std::move(mu);
        inst.nu = std::move(nu);
        inst.cap = std::move(cap);
        return solve_capped_dual(inst).value;
      },
      py::arg("points"), py::arg("mu"), py::arg("nu"), py::arg("cap"),
      "Capped Kantorovich dual between two measures on a shared euclidean support.");

  m.def(
      "run_pipeline",
      [](const std::string& config_path) { return run_pipeline(load_config(config_path)); },
      py::arg("config_path"),
      "Full generate/tree/coefficients/audit run from a JSON config; returns the "
      "pipeline exit code.");
}
