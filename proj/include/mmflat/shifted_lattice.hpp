#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mmflat/cube_tree.hpp"
#include "mmflat/metric_space.hpp"

namespace mmflat {

/// A cube from one of the 2^n shifted dyadic families inside a root cube:
/// corner = root_corner + side * cell + (side/3) * e, side = root_side * 2^-level.
struct LatticeCube {
  int level = 0;
  std::uint32_t shift_mask = 0;           // e in {0,1}^n packed as bits
  std::array<std::int64_t, 3> cell{};     // grid cell per coordinate (n <= 3)

  bool operator==(const LatticeCube&) const = default;
};

class ShiftedLattice {
 public:
  ShiftedLattice(int n, std::vector<double> root_corner, double root_side);

  int dim() const { return n_; }
  double root_side() const { return root_side_; }
  const std::vector<double>& root_corner() const { return root_corner_; }

  double side(int level) const;
  std::vector<double> corner(const LatticeCube& q) const;
  std::vector<double> center(const LatticeCube& q) const;
  bool contains(const LatticeCube& q, const std::vector<double>& x) const;
  /// x within the concentric cube of side (2/3) side(q), strictly.
  bool central_two_thirds(const LatticeCube& q, const std::vector<double>& x) const;

  /// Level-j cube with x in its central two-thirds. Tie-break: lexicographic
  /// shift vector, then cell corner. Throws std::domain_error when x is outside
  /// the root cube.
  LatticeCube locate(const std::vector<double>& x, int level) const;

  /// Smallest cube (any shift) containing every given point; nullopt when only
  /// the root scale or nothing fits.
  std::optional<LatticeCube> smallest_covering(const std::vector<std::vector<double>>& pts,
                                               int max_level) const;

 private:
  int n_;
  std::vector<double> root_corner_;
  double root_side_;
};

/// Parameter-space samples of a chart g: R^n -> X aligned with point indices.
struct Chart {
  int n = 1;
  std::vector<std::vector<double>> params;  // params[i] = g^{-1}(point i)
  double bilip_L = 1.0;                     // nominal bi-Lipschitz constant
};

struct LGoodCube {
  LatticeCube cube;
  double side = 0.0;
  double comparability = 0.0;  // side / ell(Q)
};

/// Smallest shifted-lattice cube whose image covers the sampled points of 10 B_Q.
/// Throws std::runtime_error when no cube below the root scale covers them.
LGoodCube find_l_good_cube(const MetricSpaceSample& space, const Chart& chart,
                           const CubeTree& tree, std::uint32_t cube_id,
                           const ShiftedLattice& lattice);

}  // namespace mmflat
