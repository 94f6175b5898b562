#include "mmflat/metric_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

namespace mmflat {

using nlohmann::json;

MetricSpaceSample MetricSpaceSample::from_coords(std::vector<std::vector<double>> coords,
                                                 std::vector<double> weights, int dim_n,
                                                 AmbientNorm norm, double snowflake_s) {
  if (coords.size() != weights.size())
    throw std::domain_error("coords/weights size mismatch");
  if (coords.empty()) throw std::domain_error("empty space");
  if (snowflake_s <= 0.0 || snowflake_s > 1.0)
    throw std::domain_error("snowflake exponent must lie in (0,1]");
  MetricSpaceSample s;
  s.ambient_dim_ = static_cast<int>(coords.front().size());
  s.coords_.reserve(coords.size() * s.ambient_dim_);
  for (const auto& p : coords) {
    if (static_cast<int>(p.size()) != s.ambient_dim_)
      throw std::domain_error("ragged coordinate list");
    s.coords_.insert(s.coords_.end(), p.begin(), p.end());
  }
  s.weights_ = std::move(weights);
  s.dim_n_ = dim_n;
  s.norm_ = norm;
  s.snowflake_s_ = snowflake_s;
  for (double w : s.weights_) {
    if (!(w > 0.0)) throw std::domain_error("weights must be strictly positive");
    s.total_mass_ += w;
  }
  return s;
}

MetricSpaceSample MetricSpaceSample::from_matrix(std::vector<double> matrix,
                                                 std::size_t count,
                                                 std::vector<double> weights, int dim_n) {
  if (matrix.size() != count * count) throw std::domain_error("matrix size mismatch");
  if (weights.size() != count) throw std::domain_error("weights size mismatch");
  if (count == 0) throw std::domain_error("empty space");
  MetricSpaceSample s;
  s.matrix_ = std::move(matrix);
  s.weights_ = std::move(weights);
  s.dim_n_ = dim_n;
  for (double w : s.weights_) {
    if (!(w > 0.0)) throw std::domain_error("weights must be strictly positive");
    s.total_mass_ += w;
  }
  return s;
}

double MetricSpaceSample::distance(std::size_t i, std::size_t j) const {
  if (i >= size() || j >= size()) throw std::domain_error("point index out of range");
  double d;
  if (!coords_.empty()) {
    const double* a = coords_.data() + i * ambient_dim_;
    const double* b = coords_.data() + j * ambient_dim_;
    if (norm_ == AmbientNorm::L2) {
      double s = 0.0;
      for (int k = 0; k < ambient_dim_; ++k) {
        const double t = a[k] - b[k];
        s += t * t;
      }
      d = std::sqrt(s);
    } else {
      double m = 0.0;
      for (int k = 0; k < ambient_dim_; ++k) m = std::max(m, std::abs(a[k] - b[k]));
      d = m;
    }
  } else {
    d = matrix_[i * size() + j];
  }
  if (snowflake_s_ != 1.0) d = std::pow(d, snowflake_s_);
  return d;
}

std::span<const double> MetricSpaceSample::coord(std::size_t i) const {
  if (!has_coords()) throw std::domain_error("space has no ambient coordinates");
  return {coords_.data() + i * ambient_dim_, static_cast<std::size_t>(ambient_dim_)};
}

double MetricSpaceSample::diameter() const {
  if (diameter_ >= 0.0) return diameter_;
  double d = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j) d = std::max(d, distance(i, j));
  diameter_ = d;
  return d;
}

double MetricSpaceSample::min_spacing() const {
  if (min_spacing_ >= 0.0) return min_spacing_;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j) d = std::min(d, distance(i, j));
  min_spacing_ = size() > 1 ? d : 0.0;
  return min_spacing_;
}

void MetricSpaceSample::validate(std::size_t max_triples) const {
  const std::size_t n = size();
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t checks = std::min(max_triples, n * n * n);
  for (std::size_t t = 0; t < checks; ++t) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    const double dij = distance(i, j), dji = distance(j, i);
    if (std::abs(dij - dji) > 1e-12) throw std::domain_error("metric not symmetric");
    if (i == j && dij != 0.0) throw std::domain_error("nonzero diagonal");
    if (i != j && !(dij > 0.0)) throw std::domain_error("distinct points at distance 0");
    if (distance(i, k) > dij + distance(j, k) + 1e-12)
      throw std::domain_error("triangle inequality violated");
  }
  if (has_coords()) {
    // distance() is itself coordinate-derived here; nothing further to check.
  }
}

double ball_mass(const MetricSpaceSample& space, std::size_t center, double r) {
  if (center >= space.size()) throw std::domain_error("invalid center index");
  if (r < 0.0) throw std::domain_error("negative radius");
  double m = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.distance(center, i) <= r) m += space.weight(i);
  return m;
}

MetricSpaceSample snowflake_transform(const MetricSpaceSample& space, double s) {
  if (s <= 0.0 || s > 1.0) throw std::domain_error("snowflake exponent must lie in (0,1]");
  MetricSpaceSample out = space;
  out.snowflake_s_ = space.snowflake_s_ * s;
  out.diameter_ = -1.0;
  out.min_spacing_ = -1.0;
  return out;
}

RegularityReport ahlfors_scan(const MetricSpaceSample& space, int n,
                              const std::vector<std::size_t>& centers,
                              const std::vector<double>& scales,
                              double deviation_factor) {
  if (scales.empty()) throw std::domain_error("empty scale list");
  RegularityReport rep;
  rep.r_min = *std::min_element(scales.begin(), scales.end());
  rep.r_max = *std::max_element(scales.begin(), scales.end());
  rep.c_lower = std::numeric_limits<double>::infinity();
  rep.c_upper = 0.0;
  std::vector<double> ratios;
  std::vector<std::pair<double, double>> per_scale;  // (scale, ratio)
  for (double r : scales) {
    if (!(r > 0.0)) throw std::domain_error("scales must be positive");
    for (std::size_t c : centers) {
      const double m = ball_mass(space, c, r);
      if (m <= space.weight(c)) {
        rep.degenerate = true;
        if (rep.degenerate_scales.empty() || rep.degenerate_scales.back() != r)
          rep.degenerate_scales.push_back(r);
      }
      const double ratio = m / std::pow(r, n);
      rep.c_lower = std::min(rep.c_lower, ratio);
      rep.c_upper = std::max(rep.c_upper, ratio);
      ratios.push_back(ratio);
      per_scale.emplace_back(r, ratio);
      const double m2 = ball_mass(space, c, 2.0 * r);
      if (m > 0.0) rep.doubling_estimate = std::max(rep.doubling_estimate, m2 / m);
    }
  }
  std::vector<double> sorted = ratios;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (const auto& [r, ratio] : per_scale) {
    if (ratio > median * deviation_factor || ratio < median / deviation_factor) {
      if (rep.flagged_scales.empty() || rep.flagged_scales.back() != r)
        rep.flagged_scales.push_back(r);
    }
  }
  return rep;
}

void write_distance_matrix(const std::vector<double>& matrix, std::size_t count,
                           const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  const std::uint64_t header = count;
  f.write(reinterpret_cast<const char*>(&header), 8);
  f.write(reinterpret_cast<const char*>(matrix.data()),
          static_cast<std::streamsize>(matrix.size() * sizeof(double)));
}

std::vector<double> read_distance_matrix(const std::string& path, std::size_t& count) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::uint64_t header = 0;
  f.read(reinterpret_cast<char*>(&header), 8);
  count = header;
  std::vector<double> m(count * count);
  f.read(reinterpret_cast<char*>(m.data()),
         static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!f) throw std::runtime_error("truncated distance matrix " + path);
  return m;
}

void save_space(const MetricSpaceSample& space, const std::string& json_path) {
  json j;
  j["points"] = space.size();
  j["weights"] = json::array();
  for (std::size_t i = 0; i < space.size(); ++i) j["weights"].push_back(space.weight(i));
  j["n"] = space.dim_n();
  const double s = space.snowflake_exponent();
  const bool coord_based = space.has_coords() || (!space.has_coords() && s != 1.0 &&
                                                  space.ambient_dim() > 0);
  if (coord_based) {
    // Snowflaked coordinate spaces round-trip through the matrix form: the
    // transformed space is abstract by contract.
    if (s == 1.0) {
      j["metric"] = "ambient";
      j["ambient_norm"] = space.ambient_norm() == AmbientNorm::L2 ? "l2" : "linf";
      j["coords"] = json::array();
      for (std::size_t i = 0; i < space.size(); ++i) {
        auto c = space.coord(i);
        j["coords"].push_back(std::vector<double>(c.begin(), c.end()));
      }
      std::ofstream f(json_path);
      f << j.dump(2) << "\n";
      return;
    }
  }
  if (s != 1.0)
    j["metric"] = "snowflake(" + std::to_string(s) + ")";
  else
    j["metric"] = "matrix";
  std::vector<double> m(space.size() * space.size());
  for (std::size_t i = 0; i < space.size(); ++i)
    for (std::size_t k = 0; k < space.size(); ++k) m[i * space.size() + k] = space.distance(i, k);
  const std::string bin = json_path + ".bin";
  write_distance_matrix(m, space.size(), bin);
  j["matrix_file"] = bin;
  std::ofstream f(json_path);
  f << j.dump(2) << "\n";
}

MetricSpaceSample load_space(const std::string& json_path) {
  std::ifstream f(json_path);
  if (!f) throw std::runtime_error("cannot open " + json_path);
  json j;
  f >> j;
  std::vector<double> weights = j.at("weights").get<std::vector<double>>();
  const int n = j.at("n").get<int>();
  const std::string metric = j.at("metric").get<std::string>();
  if (metric == "ambient") {
    auto coords = j.at("coords").get<std::vector<std::vector<double>>>();
    AmbientNorm norm = AmbientNorm::L2;
    if (j.contains("ambient_norm") && j["ambient_norm"] == "linf") norm = AmbientNorm::Linf;
    return MetricSpaceSample::from_coords(std::move(coords), std::move(weights), n, norm);
  }
  std::size_t count = 0;
  auto m = read_distance_matrix(j.at("matrix_file").get<std::string>(), count);
  return MetricSpaceSample::from_matrix(std::move(m), count, std::move(weights), n);
}

}  // namespace mmflat
