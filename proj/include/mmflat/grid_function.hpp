#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mmflat {

/// Dyadic subcube of the root cube Q0: side(Q0) * 2^-level, grid cell per axis.
struct DyadicCube {
  int level = 0;
  std::array<std::int64_t, 2> cell{0, 0};

  bool operator==(const DyadicCube&) const = default;
};

/// Subset of Q0 rasterized at the resolution level of its GridFunction
/// (one flag per raster cell, same layout as the value array).
using RasterMask = std::vector<std::uint8_t>;

/// Piecewise-constant function on a cube Q0 in R^n (n <= 2) at dyadic
/// resolution J: 2^(nJ) cells, row-major with axis 0 fastest.
class GridFunction {
 public:
  GridFunction(int n, int J, std::array<double, 2> q0_corner, double q0_side,
               std::vector<double> values, double sup_bound);
  /// Zero function.
  GridFunction(int n, int J, std::array<double, 2> q0_corner, double q0_side);

  int dim() const { return n_; }
  int resolution() const { return J_; }
  double root_side() const { return q0_side_; }
  const std::array<double, 2>& root_corner() const { return q0_corner_; }
  double sup_bound() const { return sup_bound_; }
  std::size_t cells_per_side() const { return std::size_t{1} << J_; }
  std::size_t cell_count() const { return values_.size(); }
  double cell_volume() const;

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double& at(std::int64_t i, std::int64_t j = 0);
  double at(std::int64_t i, std::int64_t j = 0) const;

  /// Raster-cell index range of a dyadic cube; throws if Q is outside Q0 or
  /// deeper than J.
  void cell_range(const DyadicCube& q, std::int64_t& lo0, std::int64_t& hi0, std::int64_t& lo1,
                  std::int64_t& hi1) const;

  double mean(const DyadicCube& q) const;
  double l2_norm_sq() const;           // integral of h^2 over Q0
  double l2_norm_sq(const DyadicCube& q) const;
  double inner(const GridFunction& other) const;  // integral of h*g
  double max_abs() const;

  std::vector<DyadicCube> children(const DyadicCube& q) const;
  DyadicCube root() const { return {}; }

 private:
  int n_;
  int J_;
  std::array<double, 2> q0_corner_;
  double q0_side_;
  std::vector<double> values_;
  double sup_bound_;
};

/// Martingale difference: on each child P of Q the value is mean_P(h) - mean_Q(h),
/// zero outside Q. Throws std::domain_error when Q sits at the finest level.
GridFunction haar_delta(const GridFunction& h, const DyadicCube& q);

/// Depth-k energy sum_{j=0..k} sum_{R in D_j(Q)} ||haar_delta(h,R)||_2^2.
/// Throws std::domain_error when Q.level + k reaches the raster level.
double delta_k_energy(const GridFunction& h, const DyadicCube& q, int k);

/// Mean of h over a rasterized set; throws std::domain_error on empty E.
double mean_over_set(const GridFunction& h, const RasterMask& e);

/// For each cube Q the sampler returns rasterized family members inside Q
/// (already clipped to Q); empty members are skipped by the caller.
using FamilySampler =
    std::function<std::vector<RasterMask>(const GridFunction&, const DyadicCube&)>;

struct BadCubeEntry {
  DyadicCube cube;
  double deviation = 0.0;  // max |mean_E(h) - mean_Q(h)| over accepted members
};

struct OscillationReport {
  std::vector<BadCubeEntry> bad;    // cubes where some member deviates by > eps
  double packing_sum = 0.0;         // sum over bad cubes of ell(Q)^n / ell(Q0)^n
  std::size_t cubes_checked = 0;
  std::size_t rejected_members = 0; // members below the volume floor
};

/// Scans every dyadic cube of level <= max_level (family members sampled per
/// cube); members with volume below vol_floor_frac * vol(Q) are rejected.
OscillationReport oscillation_bad_cubes(const GridFunction& h, const FamilySampler& family,
                                        double eps, int max_level,
                                        double vol_floor_frac = 1e-6);

/// Deterministic Euclidean-ball subfamily: centers on a per-cube grid, radii a
/// geometric ladder in [min_radius_frac, 1/2] * ell(Q).
FamilySampler ball_family(double min_radius_frac, int centers_per_axis = 3, int radii = 3);

struct SandwichFamily {
  std::vector<RasterMask> members;   // the input sequence E_j
  std::vector<double> eps;           // descending ladder
  std::vector<RasterMask> lower;     // L_eps = intersection of the tail
  std::vector<RasterMask> upper;     // U_eps = union of the tail
  std::vector<std::size_t> k0;       // tail start index per eps
};

/// Builds lower/upper envelopes L_eps / U_eps from a Cauchy sequence of sets
/// (vol(E_j symdiff E_{j+1}) <= 2^-j required; violations throw with the
/// offending pair in the message). cell_volume scales the raster counts.
SandwichFamily sandwich_construct(const std::vector<RasterMask>& sequence, double cell_volume,
                                  const std::vector<double>& eps_ladder = {0.5, 0.25, 0.125,
                                                                           0.0625});

double mask_volume(const RasterMask& m, double cell_volume);

/// Binary float64 dump with a JSON sidecar {n, J, Q0, sup_bound} at path.json.
void save_grid_function(const GridFunction& h, const std::string& path);
GridFunction load_grid_function(const std::string& path);

/// CSV rows: level, corner coordinates, deviation.
void export_bad_cubes(const GridFunction& h, const OscillationReport& report,
                      const std::string& path);

}  // namespace mmflat
