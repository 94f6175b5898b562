#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mmflat/metric_space.hpp"

namespace mmflat {

/// Nested maximal rho^k-nets, coarse (k_min) to fine (k_max). Each level's net
/// points are stored as indices into the space; level k is contained in level k+1.
struct NetHierarchy {
  double rho = 0.25;
  int k_min = 0;
  int k_max = 0;
  std::vector<std::vector<std::size_t>> levels;  // levels[k - k_min]

  double radius(int k) const;  // rho^k
};

struct Cube {
  std::uint32_t id = 0;
  int level = 0;                    // k(Q); side() = 5 rho^level
  std::size_t center = 0;           // x_Q, a net point index
  std::int64_t parent = -1;         // cube id, -1 at the root level
  std::vector<std::uint32_t> children;
  std::vector<std::size_t> members;  // point indices, sorted
};

class CubeTree {
 public:
  double rho = 0.25;
  double c0 = 0.03;
  std::vector<Cube> cubes;                 // ordered by (level, center index)
  std::vector<std::uint32_t> level_start;  // cube id range per level
  int k_min = 0;
  int k_max = 0;

  double side(const Cube& q) const { return 5.0 * std::pow(rho, q.level); }
  const Cube& cube(std::uint32_t id) const { return cubes[id]; }
  std::vector<std::uint32_t> level_cubes(int k) const;
  int depth() const { return k_max - k_min; }

  /// Descendants of `root` (inclusive), in id order.
  std::vector<std::uint32_t> descendants(std::uint32_t root) const;
};

struct AxiomReport {
  bool cover_ok = true;
  bool nesting_ok = true;
  bool sandwich_ok = true;
  std::vector<std::uint32_t> offending_cubes;
  // mass of {x in Q : d(x, X \ Q) <= eta * rho^k} / ell(Q)^n, averaged per eta
  std::vector<std::pair<double, double>> small_boundary_profile;  // (eta, mean ratio)
  bool all_ok() const { return cover_ok && nesting_ok && sandwich_ok; }
};

NetHierarchy build_net_hierarchy(const MetricSpaceSample& space, double rho, int k_min,
                                 int k_max, std::uint64_t seed = 0);

/// Verifies separation, maximality and nesting exhaustively; throws on failure.
void verify_net_hierarchy(const MetricSpaceSample& space, const NetHierarchy& h);

CubeTree build_christ_david(const MetricSpaceSample& space, const NetHierarchy& hierarchy,
                            double c0);

/// Convenience: nets with default level range (root covers the diameter, leaves
/// stop at 2x the minimum spacing), then the tree.
CubeTree build_default_tree(const MetricSpaceSample& space, double rho, double c0,
                            std::uint64_t seed = 0);

AxiomReport verify_cube_axioms(const MetricSpaceSample& space, const CubeTree& tree);

struct MultiResCoverage {
  std::size_t tree_index = 0;
  std::uint32_t cube_id = 0;
  bool covered = false;
};

struct MultiResSystems {
  std::vector<CubeTree> trees;
  std::size_t doubling_bound = 0;  // cap implied by the doubling estimate
};

/// N Christ-David systems so that every audited (x, t) has, in some tree, a cube
/// with B(x,t) inside (c0/2)B_Q and t <= ell(Q) <= (5/(rho c0)) t.
MultiResSystems build_multires_systems(const MetricSpaceSample& space, double rho, double c0,
                                       std::uint64_t seed = 0, std::size_t audit_pairs = 1000);

/// Checks the coverage property of the (x, t) pair against the trees; returns the
/// first covering (tree, cube) or covered=false.
MultiResCoverage locate_covering_cube(const MetricSpaceSample& space,
                                      const std::vector<CubeTree>& trees, std::size_t x,
                                      double t);

void save_tree(const CubeTree& tree, const std::string& json_path);
CubeTree load_tree(const std::string& json_path);
std::string tree_to_json(const CubeTree& tree);

}  // namespace mmflat
