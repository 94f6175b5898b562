#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmflat/carleson.hpp"
#include "mmflat/coefficients.hpp"
#include "mmflat/generators.hpp"

namespace mmflat {

struct PipelineConfig {
  GeneratorSpec gen;
  double rho = 0.25;
  double c0 = 0.02;
  std::vector<std::string> coefficients{"osc"};
  std::vector<double> eps_list{0.1};
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  FieldConfig field;

  /// Throws std::invalid_argument describing the first violation.
  void validate() const;
};

PipelineConfig load_config(const std::string& path);

/// Exit codes: 0 success, 2 validation, 3 numeric, 4 coverage. On failure an
/// error.json with {stage, cause} is left in the output directory.
int run_pipeline(const PipelineConfig& config);

/// Scale-by-location heatmap of a coefficient field, written as standalone SVG.
void write_field_heatmap_svg(const CubeTree& tree, const CoefficientField& field,
                             const std::string& path);

}  // namespace mmflat
