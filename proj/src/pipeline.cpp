#include "mmflat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace mmflat {

namespace {

using nlohmann::json;

void write_error(const std::string& dir, const std::string& stage, const std::string& cause) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  json j{{"stage", stage}, {"cause", cause}};
  std::ofstream out(dir + "/error.json");
  out << j.dump(2) << '\n';
}

std::string color_for(double t) {
  // Three-stop gradient: deep blue -> amber -> red.
  t = std::clamp(t, 0.0, 1.0);
  auto lerp = [](int a, int b, double u) { return static_cast<int>(a + (b - a) * u); };
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = lerp(32, 250, u);
    g = lerp(64, 190, u);
    b = lerp(160, 40, u);
  } else {
    const double u = (t - 0.5) / 0.5;
    r = lerp(250, 200, u);
    g = lerp(190, 30, u);
    b = lerp(40, 30, u);
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(rho > 0.0) || rho >= 1.0) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(c0 > 0.0) || c0 >= 0.5) throw std::invalid_argument("c0 must lie in (0,1/2)");
  if (eps_list.empty()) throw std::invalid_argument("eps list must be nonempty");
  if (coefficients.empty()) throw std::invalid_argument("coefficient list must be nonempty");
  for (const std::string& c : coefficients)
    if (c != "osc" && c != "osc_E" && c != "alpha" && c != "alpha_E" && c != "xi" && c != "md")
      throw std::invalid_argument("unknown coefficient kind: " + c);
  if (!(gen.spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
  if (gen.depth < 0) throw std::invalid_argument("depth must be nonnegative");
  if (out_dir.empty()) throw std::invalid_argument("output directory must be set");
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  json j;
  in >> j;
  PipelineConfig cfg;
  if (j.contains("generator")) {
    const json& g = j["generator"];
    cfg.gen.kind = parse_space_kind(g.value("kind", "segment"));
    cfg.gen.spacing = g.value("spacing", cfg.gen.spacing);
    cfg.gen.depth = g.value("depth", cfg.gen.depth);
    cfg.gen.amplitude = g.value("amplitude", cfg.gen.amplitude);
    cfg.gen.snowflake_s = g.value("s", cfg.gen.snowflake_s);
    cfg.gen.radius = g.value("radius", cfg.gen.radius);
  }
  if (j.contains("tree")) {
    cfg.rho = j["tree"].value("rho", cfg.rho);
    cfg.c0 = j["tree"].value("c0", cfg.c0);
  }
  if (j.contains("coefficients"))
    cfg.coefficients = j["coefficients"].get<std::vector<std::string>>();
  if (j.contains("eps")) cfg.eps_list = j["eps"].get<std::vector<double>>();
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("band")) {
    cfg.field.level_min = j["band"].value("min", cfg.field.level_min);
    cfg.field.level_max = j["band"].value("max", cfg.field.level_max);
  }
  return cfg;
}

void write_field_heatmap_svg(const CubeTree& tree, const CoefficientField& field,
                             const std::string& path) {
  // Rows are tree levels (scale), columns the cube order within a level
  // (location); color encodes the value.
  std::map<int, std::vector<const CoefficientEntry*>> by_level;
  double vmax = 0.0;
  for (const CoefficientEntry& e : field.entries) {
    by_level[e.level].push_back(&e);
    if (!e.unreliable) vmax = std::max(vmax, e.value);
  }
  const int W = 900, row_h = 26, margin = 60;
  const int H = margin + row_h * static_cast<int>(by_level.size()) + 20;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<text x='10' y='20' font-family='monospace' font-size='14'>" << field.kind
      << " (max " << vmax << ")</text>\n";
  int row = 0;
  for (const auto& [level, entries] : by_level) {
    const double cell_w = static_cast<double>(W - margin - 10) / static_cast<double>(entries.size());
    out << "<text x='4' y='" << margin + row * row_h + 16 << "' font-family='monospace' "
        << "font-size='11'>k=" << level << "</text>\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const CoefficientEntry* e = entries[i];
      const std::string fill =
          e->unreliable ? "#dddddd" : color_for(vmax > 0.0 ? e->value / vmax : 0.0);
      out << "<rect x='" << margin + cell_w * static_cast<double>(i) << "' y='"
          << margin + row * row_h << "' width='" << std::max(cell_w - 1.0, 0.5) << "' height='"
          << row_h - 2 << "' fill='" << fill << "'><title>cube " << e->cube << " value "
          << e->value << "</title></rect>\n";
    }
    ++row;
  }
  out << "</svg>\n";
}

int run_pipeline(const PipelineConfig& config) {
  std::string stage = "validate";
  try {
    config.validate();
  } catch (const std::exception& ex) {
    write_error(config.out_dir, stage, ex.what());
    return 2;
  }
  try {
    std::filesystem::create_directories(config.out_dir);
    stage = "generate";
    const GeneratedSpace gs = generate(config.gen);
    save_space(gs.space, config.out_dir + "/space.json");

    stage = "tree";
    const CubeTree tree = build_default_tree(gs.space, config.rho, config.c0, config.seed);
    const AxiomReport axioms = verify_cube_axioms(gs.space, tree);
    save_tree(tree, config.out_dir + "/tree.json");

    stage = "coefficients";
    std::vector<CoefficientField> fields;
    for (const std::string& kind : config.coefficients) {
      fields.push_back(compute_field(gs.space, tree, kind, config.field,
                                     gs.chart ? &*gs.chart : nullptr));
      export_field_csv(fields.back(), config.out_dir + "/" + kind + ".csv");
      export_field_json(fields.back(), config.out_dir + "/" + kind + ".json");
      write_field_heatmap_svg(tree, fields.back(), config.out_dir + "/" + kind + ".svg");
    }

    stage = "audit";
    nlohmann::json summary;
    summary["space"] = {{"kind", space_kind_name(config.gen.kind)},
                        {"points", gs.space.size()},
                        {"n", gs.space.dim_n()}};
    summary["tree"] = {{"rho", tree.rho},
                       {"c0", tree.c0},
                       {"levels", tree.depth() + 1},
                       {"axioms_ok", axioms.all_ok()}};
    {
      std::vector<std::size_t> centers;
      for (std::size_t i = 0; i < gs.space.size(); i += std::max<std::size_t>(1, gs.space.size() / 32))
        centers.push_back(i);
      std::vector<double> scales;
      const double lo = 25.0 * gs.space.min_spacing();
      const double hi = gs.space.diameter() / 4.0;
      for (double r = hi; r > lo; r /= 2.0) scales.push_back(r);
      if (!scales.empty()) {
        const RegularityReport reg = ahlfors_scan(gs.space, gs.space.dim_n(), centers, scales);
        summary["regularity"] = {{"c_lower", reg.c_lower},
                                 {"c_upper", reg.c_upper},
                                 {"density_constant", 0.5 * (reg.c_lower + reg.c_upper)},
                                 {"degenerate", reg.degenerate}};
      }
    }
    summary["audits"] = nlohmann::json::array();
    for (std::size_t f = 0; f < fields.size(); ++f)
      for (double eps : config.eps_list) {
        const PackingReport rep =
            carleson_constant(tree, fields[f], eps, gs.space.dim_n());
        const std::string base = config.out_dir + "/packing_" + fields[f].kind + "_" +
                                 std::to_string(eps);
        export_packing_csv(rep, base + ".csv");
        export_packing_json(rep, base + ".json");
        summary["audits"].push_back({{"coefficient", fields[f].kind},
                                     {"eps", eps},
                                     {"supremum", rep.supremum},
                                     {"verdict", rep.verdict}});
      }
    summary["seed"] = config.seed;
    stage = "summary";
    std::ofstream out(config.out_dir + "/summary.json");
    out << summary.dump(2) << '\n';
    return 0;
  } catch (const std::invalid_argument& ex) {
    write_error(config.out_dir, stage, ex.what());
    return 2;
  } catch (const std::domain_error& ex) {
    write_error(config.out_dir, stage, ex.what());
    return 2;
  } catch (const std::runtime_error& ex) {
    // Coverage holes surface as runtime errors that name missing cubes.
    const std::string what = ex.what();
    write_error(config.out_dir, stage, what);
    return what.find("no entry") != std::string::npos ? 4 : 3;
  }
}

}  // namespace mmflat
