#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mmflat {

using MetricOracle = std::function<double(std::size_t, std::size_t)>;

/// Two measures on a shared support with per-point potential caps. cap[i] bounds
/// |f(z_i)| for admissible dual potentials f; it encodes the decay towards the
/// ball boundary (dist_ball) or a uniform diameter bound (tilde_dist).
struct TransportInstance {
  MetricOracle metric;
  std::vector<double> mu;
  std::vector<double> nu;
  std::vector<double> cap;

  std::size_t size() const { return mu.size(); }
};

struct DualSolution {
  std::vector<double> potential;  // f_i per support point
  double value = 0.0;             // dual objective sum f_i (mu_i - nu_i)
  double primal_value = 0.0;      // matching min-cost flow value
  double lip_residual = 0.0;      // max over checked pairs of f_i - f_j - d(i,j)
  double cap_residual = 0.0;      // max of |f_i| - cap_i
};

struct SolveOptions {
  bool sparse = false;        // k-nearest-neighbour graph + violated-pair generation
  std::size_t knn = 12;
  std::size_t max_rounds = 64;  // constraint-generation rounds before giving up
};

/// Constraint-generation working set, reusable across solves that share a
/// support and metric (only the masses may differ between calls).
using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;

/// Maximizes sum f_i (mu_i - nu_i) over {|f_i - f_j| <= d(i,j), |f_i| <= cap_i}
/// by solving the equivalent min-cost transshipment (ground node absorbs the
/// cap-priced imbalance). Throws std::runtime_error on non-convergence.
/// A non-null edge_cache seeds the sparse working set and receives the final
/// one; reuse it only across instances with identical support and metric.
DualSolution solve_capped_dual(const TransportInstance& inst, const SolveOptions& opts = {},
                               EdgeSet* edge_cache = nullptr);

/// Localized Kantorovich distance dist_B for B = B(center, r): caps are
/// max(0, r - center_dist[i]); cap-0 points are pruned.
double dist_ball(const TransportInstance& inst_uncapped,
                 const std::vector<double>& center_dist, double r,
                 const SolveOptions& opts = {}, EdgeSet* edge_cache = nullptr);

/// Diameter-capped distance: uniform cap D = max pairwise support distance.
double tilde_dist(const TransportInstance& inst_uncapped, const SolveOptions& opts = {});

/// Independent primal oracle: enumerates every spanning-tree vertex of the
/// transportation polytope (supports must be small and masses balanced).
double w1_bruteforce_oracle(const TransportInstance& inst);

/// JSON dump {support:[{id, mass_mu, mass_nu, cap}], edges:[{i,j,d}]}.
void dump_instance(const TransportInstance& inst, const std::string& path);

}  // namespace mmflat
