#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmflat/cube_tree.hpp"
#include "mmflat/grid_function.hpp"
#include "mmflat/metric_space.hpp"
#include "mmflat/norms.hpp"
#include "mmflat/shifted_lattice.hpp"
#include "mmflat/transport.hpp"

namespace mmflat {

/// Exact minimizer of max_i |m_i - c t_i^n| over c >= 0 (two-variable LP solved
/// by enumerating envelope crossings). Returns (c*, optimum value).
std::pair<double, double> minimax_constant(const std::vector<std::pair<double, double>>& samples,
                                           int n);

struct OscBudget {
  std::size_t net_points = 24;   // greedy net of B(x,r) locations
  std::size_t scales = 12;       // geometric t-grid size
  double t_floor_frac = 0.02;    // t ranges over (t_floor_frac * r, r]
};

/// Ball-mass power-law oscillation over B(x,r), normalized by r^n. The optional
/// subset restricts masses to E (the Osc_E variant). Throws std::domain_error
/// below the 20x-min-spacing scale floor.
double osc_coefficient(const MetricSpaceSample& space, std::size_t x, double r,
                       const OscBudget& budget = {},
                       const std::vector<std::uint8_t>* subset = nullptr);

struct AlphaConfig {
  double plane_spacing = 0.0;    // 0 = auto: max(min spacing, r/64)
  int angle_steps = 2;           // +-steps per rotation generator
  double angle_delta = 0.05;     // radians per step
  std::size_t c_iters = 40;      // ternary-search iterations on the density c
  SolveOptions lp;               // forwarded to the transport solver
};

struct AlphaResult {
  double value = 0.0;
  double c = 0.0;                     // chosen density constant
  std::vector<double> plane_origin;   // ambient point on the chosen plane
  std::vector<double> plane_basis;    // n ambient direction rows (row-major)
  int plane_id = 0;                   // index into the searched plane grid
  std::string norm_tag = "l2";
  double lp_residual = 0.0;
};

/// Ambient-space upper bound for the alpha number of B(x,r): (1/r^{n+1}) times
/// the capped transport distance between the sampled measure (optionally cut to
/// E) and c * H^n on the best plane in the search grid. Requires coordinates.
AlphaResult alpha_coefficient(const MetricSpaceSample& space, std::size_t x, double r,
                              const AlphaConfig& config = {},
                              const std::vector<std::uint8_t>* subset = nullptr);

/// Coarse metric derivative of the chart over the given parameter box:
/// (1/side) * min over the norm search of the max pair defect. Returns the
/// minimizing norm for reuse. pair_cap bounds the sampled pairs.
struct MdResult {
  double value = 0.0;
  NormModel norm;
};
MdResult md_coefficient(const MetricSpaceSample& space, const Chart& chart,
                        const std::vector<double>& box_corner, double box_side,
                        std::size_t pair_cap = 4000);

struct GluedSpace {
  // Indices of the sampled chart points (X side) and grid nodes (R^n side).
  std::vector<std::size_t> x_points;
  std::vector<std::vector<double>> grid_nodes;
  std::vector<double> grid_mass;
  NormModel norm;
  double penalty = 0.0;  // 2 * md_g(I) * ell(I)
  double triangle_defect = 0.0;  // worst sampled triple, must be <= tol
};

struct AlphaTildeResult {
  double value = 0.0;
  double c_pi = 0.0;          // density constant c_{P,I}
  double md = 0.0;            // md_g(I) used for the glue penalty
  GluedSpace glue;
};

/// Cube-adapted alpha number over a shifted-lattice cube I in chart parameters:
/// (1/ell(I)^{n+1}) * tilde_dist inside the glued metric between the sampled
/// image measure (cut to E) and c_{P,I} * H^n on I. grid_per_side controls the
/// R^n-side discretization. Throws when the glue triangle audit fails.
AlphaTildeResult alpha_cube_adapted(const MetricSpaceSample& space, const Chart& chart,
                                    const ShiftedLattice& lattice, const LatticeCube& I,
                                    std::size_t grid_per_side = 12,
                                    const std::vector<std::uint8_t>* subset = nullptr,
                                    const SolveOptions& lp = {});

struct XiResult {
  double value = 0.0;
  double zeta = 0.0;  // pair-distance defect part
  double eta = 0.0;   // model-ball coverage part
  NormModel norm;
};

/// Chart-based two-sided flatness defect of B(x,r): best norm in the dictionary
/// for zeta (pair distances vs the norm) + eta (normed model ball covered by
/// the chart image). Throws std::domain_error without a chart.
XiResult xi_coefficient(const MetricSpaceSample& space, const Chart& chart, std::size_t x,
                        double r, std::size_t ball_grid = 16);

/// Jacobian of a seminorm: alpha(n) * n * (integral over S^{n-1} of s^-n)^-1.
/// Degenerate seminorms (s = 0 somewhere on the sphere) give 0.
double jacobian_of_seminorm(const NormModel& s, int quadrature_order = 256);
double jacobian_of_seminorm(const std::function<double(const std::vector<double>&)>& s, int n,
                            int quadrature_order = 256);

struct JacobianField {
  GridFunction field;           // per-cell jacobian of the md-fit norm
  double pushforward_mass = 0.0;  // sum over cells of J * vol(cell)
  double image_mass = 0.0;        // measured mass of the chart image
};

/// Per-cell metric Jacobian of the chart at raster level J over the parameter
/// box; throws std::domain_error on non-injective samples.
JacobianField metric_jacobian_field(const MetricSpaceSample& space, const Chart& chart,
                                    const std::vector<double>& box_corner, double box_side,
                                    int level);

/// Per-cube coefficient values over a tree band, with search metadata.
struct CoefficientEntry {
  std::uint32_t cube = 0;
  int level = 0;
  double side = 0.0;
  double value = 0.0;
  double c = 0.0;
  std::string norm_tag;
  int plane_id = 0;
  double residual = 0.0;
  bool unreliable = false;  // below the scale floor; value not meaningful
};

struct CoefficientField {
  std::string kind;  // osc | osc_E | alpha | alpha_E | alpha_tilde | md | xi
  std::vector<CoefficientEntry> entries;

  const CoefficientEntry* find(std::uint32_t cube) const;
};

struct FieldConfig {
  int level_min = 0;             // tree levels (k indices) to audit, inclusive
  int level_max = 1 << 20;
  double ball_scale = 1.0;       // radius = ball_scale * ell(Q)
  OscBudget osc;
  AlphaConfig alpha;
  const std::vector<std::uint8_t>* subset = nullptr;
};

/// Evaluates osc/alpha/xi per cube at (x_Q, ball_scale * ell(Q)); cubes under
/// the scale floor are flagged unreliable with value 0.
CoefficientField compute_field(const MetricSpaceSample& space, const CubeTree& tree,
                               const std::string& kind, const FieldConfig& config,
                               const Chart* chart = nullptr);

void export_field_csv(const CoefficientField& field, const std::string& path);
void export_field_json(const CoefficientField& field, const std::string& path);

}  // namespace mmflat
