#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmflat/coefficients.hpp"
#include "mmflat/cube_tree.hpp"
#include "mmflat/metric_space.hpp"

namespace mmflat {

struct PackingRow {
  std::uint32_t root = 0;
  int depth = 0;       // audited levels below the root
  double ratio = 0.0;  // sum over bad descendants of ell(Q)^n / ell(R)^n
};

struct PackingReport {
  double eps = 0.0;
  int n = 1;
  int band_min = 0;  // audited tree levels (reliable entries only)
  int band_max = 0;
  std::vector<PackingRow> rows;
  double supremum = 0.0;
  std::vector<double> profile;  // max ratio per root depth, index = depth
  std::string verdict;          // "flat" | "growing" | "inconclusive" (heuristic)
};

/// Sum over descendants Q of root with field(Q) > eps of ell(Q)^n, normalized
/// by ell(root)^n. Throws std::runtime_error listing cubes without a field
/// entry; unreliable entries are skipped (outside the audited band).
double packing_sum(const CubeTree& tree, const CoefficientField& field, double eps,
                   std::uint32_t root, int n);

/// Packing ratios over every root with >= 3 audited levels below it, plus the
/// growth profile and the heuristic flat/growing verdict.
PackingReport carleson_constant(const CubeTree& tree, const CoefficientField& field, double eps,
                                int n);

/// Sum over descendants of field(Q)^2 * ell(Q)^n / ell(root)^n.
double strong_carleson_sum(const CubeTree& tree, const CoefficientField& field,
                           std::uint32_t root, int n);

struct RtildeResult {
  std::vector<std::size_t> members;  // points of R whose ancestors all kept F-mass
  double mass = 0.0;
  double root_mass = 0.0;
  bool pass = false;                 // mass >= eps * root_mass
};

/// Keeps the points of R every one of whose ancestor cubes inside R retains at
/// least (1 - 2 eps) of its mass in F. Throws std::domain_error when
/// mass(R minus F) > eps * mass(R).
RtildeResult rtilde_check(const MetricSpaceSample& space, const CubeTree& tree,
                          std::uint32_t root, const std::vector<std::uint8_t>& F, double eps);

void export_packing_csv(const PackingReport& report, const std::string& path);
void export_packing_json(const PackingReport& report, const std::string& path);

}  // namespace mmflat
