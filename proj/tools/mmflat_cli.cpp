// Command-line front end: gen | tree | coeff | audit | run.
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmflat/carleson.hpp"
#include "mmflat/coefficients.hpp"
#include "mmflat/cube_tree.hpp"
#include "mmflat/generators.hpp"
#include "mmflat/pipeline.hpp"

using namespace mmflat;

int main(int argc, char** argv) {
  CLI::App app{"multiscale flatness and Carleson-packing toolkit"};
  app.require_subcommand(1);

  // gen: emit a test space.
  auto* gen_cmd = app.add_subcommand("gen", "generate a test space");
  std::string gen_kind = "segment", gen_out = "space.json";
  double gen_spacing = 0.01, gen_amp = 0.3, gen_s = 0.5, gen_radius = 1.0;
  int gen_depth = 5;
  gen_cmd->add_option("--kind", gen_kind, "space kind")->capture_default_str();
  gen_cmd->add_option("--spacing", gen_spacing)->capture_default_str();
  gen_cmd->add_option("--depth", gen_depth)->capture_default_str();
  gen_cmd->add_option("--amplitude", gen_amp)->capture_default_str();
  gen_cmd->add_option("--snowflake-s", gen_s)->capture_default_str();
  gen_cmd->add_option("--radius", gen_radius)->capture_default_str();
  gen_cmd->add_option("--out", gen_out)->capture_default_str();

  // tree: build and verify a cube tree for a stored space.
  auto* tree_cmd = app.add_subcommand("tree", "build a cube tree");
  std::string tree_space = "space.json", tree_out = "tree.json";
  double tree_rho = 0.25, tree_c0 = 0.02;
  std::uint64_t tree_seed = 0;
  tree_cmd->add_option("--space", tree_space)->capture_default_str();
  tree_cmd->add_option("--rho", tree_rho)->capture_default_str();
  tree_cmd->add_option("--c0", tree_c0)->capture_default_str();
  tree_cmd->add_option("--seed", tree_seed)->capture_default_str();
  tree_cmd->add_option("--out", tree_out)->capture_default_str();

  // coeff: evaluate a coefficient field over a space + tree.
  auto* coeff_cmd = app.add_subcommand("coeff", "compute a coefficient field");
  std::string coeff_space = "space.json", coeff_tree = "tree.json", coeff_kind = "osc",
              coeff_out = "field.csv";
  coeff_cmd->add_option("--space", coeff_space)->capture_default_str();
  coeff_cmd->add_option("--tree", coeff_tree)->capture_default_str();
  coeff_cmd->add_option("--kind", coeff_kind, "osc|alpha|xi|md")->capture_default_str();
  coeff_cmd->add_option("--out", coeff_out)->capture_default_str();

  // audit: packing report for a stored field.
  auto* audit_cmd = app.add_subcommand("audit", "Carleson packing audit");
  std::string audit_space = "space.json", audit_tree = "tree.json", audit_kind = "osc",
              audit_out = "packing.csv";
  double audit_eps = 0.1;
  audit_cmd->add_option("--space", audit_space)->capture_default_str();
  audit_cmd->add_option("--tree", audit_tree)->capture_default_str();
  audit_cmd->add_option("--kind", audit_kind)->capture_default_str();
  audit_cmd->add_option("--eps", audit_eps)->capture_default_str();
  audit_cmd->add_option("--out", audit_out)->capture_default_str();

  // run: the composite pipeline.
  auto* run_cmd = app.add_subcommand("run", "generate -> tree -> coefficients -> audit");
  std::string run_config, run_out = "out";
  std::uint64_t run_seed = 0;
  run_cmd->add_option("--config", run_config, "JSON config (overrides flags)");
  run_cmd->add_option("--out", run_out)->capture_default_str();
  run_cmd->add_option("--seed", run_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      GeneratorSpec spec;
      spec.kind = parse_space_kind(gen_kind);
      spec.spacing = gen_spacing;
      spec.depth = gen_depth;
      spec.amplitude = gen_amp;
      spec.snowflake_s = gen_s;
      spec.radius = gen_radius;
      const GeneratedSpace gs = generate(spec);
      save_space(gs.space, gen_out);
      std::cout << "wrote " << gen_out << " (" << gs.space.size() << " points)\n";
    } else if (tree_cmd->parsed()) {
      const MetricSpaceSample space = load_space(tree_space);
      const CubeTree tree = build_default_tree(space, tree_rho, tree_c0, tree_seed);
      const AxiomReport rep = verify_cube_axioms(space, tree);
      save_tree(tree, tree_out);
      std::cout << "wrote " << tree_out << " (" << tree.cubes.size() << " cubes, axioms "
                << (rep.all_ok() ? "ok" : "FAILED") << ")\n";
      if (!rep.all_ok()) return 3;
    } else if (coeff_cmd->parsed()) {
      const MetricSpaceSample space = load_space(coeff_space);
      const CubeTree tree = load_tree(coeff_tree);
      FieldConfig fc;
      const CoefficientField field = compute_field(space, tree, coeff_kind, fc);
      export_field_csv(field, coeff_out);
      std::cout << "wrote " << coeff_out << " (" << field.entries.size() << " cubes)\n";
    } else if (audit_cmd->parsed()) {
      const MetricSpaceSample space = load_space(audit_space);
      const CubeTree tree = load_tree(audit_tree);
      FieldConfig fc;
      const CoefficientField field = compute_field(space, tree, audit_kind, fc);
      const PackingReport rep = carleson_constant(tree, field, audit_eps, space.dim_n());
      export_packing_csv(rep, audit_out);
      std::cout << "supremum " << rep.supremum << " verdict " << rep.verdict << "\n";
    } else if (run_cmd->parsed()) {
      PipelineConfig cfg;
      if (!run_config.empty()) cfg = load_config(run_config);
      if (run_cmd->count("--out") || cfg.out_dir.empty()) cfg.out_dir = run_out;
      if (run_cmd->count("--seed")) cfg.seed = run_seed;
      return run_pipeline(cfg);
    }
  } catch (const std::invalid_argument& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
    return 2;
  } catch (const std::domain_error& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  }
  return 0;
}
