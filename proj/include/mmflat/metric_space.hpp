#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmflat {

enum class AmbientNorm { L2, Linf };

/// Finite weighted point set with a metric oracle. Stands in for an
/// Ahlfors-regular metric measure space: weights approximate Hausdorff
/// n-measure of the cell each sample point represents.
class MetricSpaceSample {
 public:
  /// Points with ambient coordinates in R^d; metric induced by the ambient norm,
  /// optionally snowflaked by exponent s in (0,1].
  static MetricSpaceSample from_coords(std::vector<std::vector<double>> coords,
                                       std::vector<double> weights, int dim_n,
                                       AmbientNorm norm = AmbientNorm::L2,
                                       double snowflake_s = 1.0);

  /// Points with an explicit symmetric distance matrix (row-major, size N*N).
  static MetricSpaceSample from_matrix(std::vector<double> matrix, std::size_t count,
                                       std::vector<double> weights, int dim_n);

  std::size_t size() const { return weights_.size(); }
  int dim_n() const { return dim_n_; }
  double weight(std::size_t i) const { return weights_[i]; }
  double total_mass() const { return total_mass_; }
  double snowflake_exponent() const { return snowflake_s_; }
  AmbientNorm ambient_norm() const { return norm_; }

  double distance(std::size_t i, std::size_t j) const;

  /// Coordinates are only exposed while the metric is the untransformed ambient one.
  bool has_coords() const { return !coords_.empty() && snowflake_s_ == 1.0; }
  int ambient_dim() const { return ambient_dim_; }
  std::span<const double> coord(std::size_t i) const;

  double diameter() const;
  double min_spacing() const;

  /// Exhaustively checks symmetry, the diagonal, triangle inequality on sampled
  /// triples, and coordinate consistency. Throws std::domain_error on violation.
  void validate(std::size_t max_triples = 200000) const;

 private:
  std::vector<double> coords_;  // N * ambient_dim_, row major; empty for matrix metric
  int ambient_dim_ = 0;
  std::vector<double> matrix_;  // N * N when coords_ empty
  std::vector<double> weights_;
  int dim_n_ = 1;
  AmbientNorm norm_ = AmbientNorm::L2;
  double snowflake_s_ = 1.0;
  double total_mass_ = 0.0;
  mutable double diameter_ = -1.0;
  mutable double min_spacing_ = -1.0;

  friend MetricSpaceSample snowflake_transform(const MetricSpaceSample&, double);
};

struct RegularityReport {
  double c_lower = 0.0;      // min over scanned (x,r) of mass(B(x,r)) / r^n
  double c_upper = 0.0;      // max of the same ratio
  double r_min = 0.0;
  double r_max = 0.0;
  double doubling_estimate = 1.0;  // max mass(B(x,2r)) / mass(B(x,r))
  bool degenerate = false;         // some scanned ball contained only its center
  std::vector<double> degenerate_scales;
  std::vector<double> flagged_scales;  // ratio deviates from the median by > deviation_factor
};

/// Total weight of the closed ball B(center, r).
double ball_mass(const MetricSpaceSample& space, std::size_t center, double r);

/// Replaces the metric by d^s. Point set and weights are untouched; ambient
/// coordinates are no longer exposed (the result is an abstract metric).
MetricSpaceSample snowflake_transform(const MetricSpaceSample& space, double s);

RegularityReport ahlfors_scan(const MetricSpaceSample& space, int n,
                              const std::vector<std::size_t>& centers,
                              const std::vector<double>& scales,
                              double deviation_factor = 4.0);

/// JSON serialization per the space schema; matrix metrics write a sibling
/// <path>.bin (8-byte little-endian count header + row-major float64).
void save_space(const MetricSpaceSample& space, const std::string& json_path);
MetricSpaceSample load_space(const std::string& json_path);

void write_distance_matrix(const std::vector<double>& matrix, std::size_t count,
                           const std::string& path);
std::vector<double> read_distance_matrix(const std::string& path, std::size_t& count);

}  // namespace mmflat
