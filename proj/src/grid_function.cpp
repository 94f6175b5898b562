#include "mmflat/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mmflat {

GridFunction::GridFunction(int n, int J, std::array<double, 2> q0_corner, double q0_side,
                           std::vector<double> values, double sup_bound)
    : n_(n), J_(J), q0_corner_(q0_corner), q0_side_(q0_side), values_(std::move(values)),
      sup_bound_(sup_bound) {
  if (n < 1 || n > 2) throw std::domain_error("grid functions support n in {1,2}");
  if (J < 0 || J > 24) throw std::domain_error("resolution level out of range");
  if (!(q0_side_ > 0.0)) throw std::domain_error("root side must be positive");
  const std::size_t m = cells_per_side();
  const std::size_t expect = n == 1 ? m : m * m;
  if (values_.size() != expect) throw std::domain_error("value array size mismatch");
  for (double v : values_)
    if (std::abs(v) > sup_bound_ + 1e-12 * std::max(1.0, sup_bound_))
      throw std::domain_error("cell value exceeds the declared sup bound");
}

GridFunction::GridFunction(int n, int J, std::array<double, 2> q0_corner, double q0_side)
    : GridFunction(n, J, q0_corner, q0_side,
                   std::vector<double>(n == 1 ? (std::size_t{1} << J)
                                              : (std::size_t{1} << J) * (std::size_t{1} << J),
                                       0.0),
                   0.0) {}

double GridFunction::cell_volume() const {
  const double s = q0_side_ / static_cast<double>(cells_per_side());
  return n_ == 1 ? s : s * s;
}

double& GridFunction::at(std::int64_t i, std::int64_t j) {
  const auto m = static_cast<std::int64_t>(cells_per_side());
  return values_[static_cast<std::size_t>(j * (n_ == 2 ? m : 1) + i)];
}

double GridFunction::at(std::int64_t i, std::int64_t j) const {
  const auto m = static_cast<std::int64_t>(cells_per_side());
  return values_[static_cast<std::size_t>(j * (n_ == 2 ? m : 1) + i)];
}

void GridFunction::cell_range(const DyadicCube& q, std::int64_t& lo0, std::int64_t& hi0,
                              std::int64_t& lo1, std::int64_t& hi1) const {
  if (q.level < 0 || q.level > J_) throw std::domain_error("cube level outside the raster");
  const std::int64_t per = std::int64_t{1} << q.level;
  const std::int64_t scale = std::int64_t{1} << (J_ - q.level);
  for (int a = 0; a < n_; ++a)
    if (q.cell[static_cast<std::size_t>(a)] < 0 || q.cell[static_cast<std::size_t>(a)] >= per)
      throw std::domain_error("cube outside the root");
  lo0 = q.cell[0] * scale;
  hi0 = lo0 + scale;
  if (n_ == 2) {
    lo1 = q.cell[1] * scale;
    hi1 = lo1 + scale;
  } else {
    lo1 = 0;
    hi1 = 1;
  }
}

double GridFunction::mean(const DyadicCube& q) const {
  std::int64_t lo0, hi0, lo1, hi1;
  cell_range(q, lo0, hi0, lo1, hi1);
  double sum = 0.0;
  for (std::int64_t j = lo1; j < hi1; ++j)
    for (std::int64_t i = lo0; i < hi0; ++i) sum += at(i, j);
  return sum / static_cast<double>((hi0 - lo0) * (hi1 - lo1));
}

double GridFunction::l2_norm_sq() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s * cell_volume();
}

double GridFunction::l2_norm_sq(const DyadicCube& q) const {
  std::int64_t lo0, hi0, lo1, hi1;
  cell_range(q, lo0, hi0, lo1, hi1);
  double s = 0.0;
  for (std::int64_t j = lo1; j < hi1; ++j)
    for (std::int64_t i = lo0; i < hi0; ++i) s += at(i, j) * at(i, j);
  return s * cell_volume();
}

double GridFunction::inner(const GridFunction& other) const {
  if (other.values_.size() != values_.size() || other.J_ != J_ || other.n_ != n_)
    throw std::domain_error("raster mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
  return s * cell_volume();
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

std::vector<DyadicCube> GridFunction::children(const DyadicCube& q) const {
  if (q.level >= J_) throw std::domain_error("cube at the finest level has no children");
  std::vector<DyadicCube> out;
  const std::int64_t b0 = 2 * q.cell[0];
  const std::int64_t b1 = 2 * q.cell[1];
  if (n_ == 1) {
    out.push_back({q.level + 1, {b0, 0}});
    out.push_back({q.level + 1, {b0 + 1, 0}});
  } else {
    for (std::int64_t dj = 0; dj < 2; ++dj)
      for (std::int64_t di = 0; di < 2; ++di) out.push_back({q.level + 1, {b0 + di, b1 + dj}});
  }
  return out;
}

GridFunction haar_delta(const GridFunction& h, const DyadicCube& q) {
  if (q.level >= h.resolution())
    throw std::domain_error("haar_delta: cube at the finest raster level");
  GridFunction out(h.dim(), h.resolution(), h.root_corner(), h.root_side());
  const double mq = h.mean(q);
  double bound = 0.0;
  for (const DyadicCube& p : h.children(q)) {
    const double v = h.mean(p) - mq;
    bound = std::max(bound, std::abs(v));
    std::int64_t lo0, hi0, lo1, hi1;
    h.cell_range(p, lo0, hi0, lo1, hi1);
    for (std::int64_t j = lo1; j < hi1; ++j)
      for (std::int64_t i = lo0; i < hi0; ++i) out.at(i, j) = v;
  }
  return GridFunction(h.dim(), h.resolution(), h.root_corner(), h.root_side(),
                      std::move(out.values()), bound);
}

double delta_k_energy(const GridFunction& h, const DyadicCube& q, int k) {
  if (k < 0) throw std::domain_error("k must be nonnegative");
  if (q.level + k >= h.resolution())
    throw std::domain_error("delta_k_energy: k reaches below the raster level");
  double total = 0.0;
  std::vector<DyadicCube> layer{q};
  for (int j = 0; j <= k; ++j) {
    double level_sum = 0.0;
    std::vector<DyadicCube> next;
    for (const DyadicCube& r : layer) {
      level_sum += haar_delta(h, r).l2_norm_sq();
      if (j < k)
        for (const DyadicCube& c : h.children(r)) next.push_back(c);
    }
    total += level_sum;
    layer = std::move(next);
  }
  return total;
}

double mask_volume(const RasterMask& m, double cell_volume) {
  std::size_t c = 0;
  for (std::uint8_t b : m) c += b ? 1 : 0;
  return static_cast<double>(c) * cell_volume;
}

double mean_over_set(const GridFunction& h, const RasterMask& e) {
  if (e.size() != h.cell_count()) throw std::domain_error("mask raster mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i]) {
      sum += h.values()[i];
      ++count;
    }
  if (count == 0) throw std::domain_error("mean over an empty set");
  return sum / static_cast<double>(count);
}

OscillationReport oscillation_bad_cubes(const GridFunction& h, const FamilySampler& family,
                                        double eps, int max_level, double vol_floor_frac) {
  OscillationReport rep;
  const double cellvol = h.cell_volume();
  std::vector<DyadicCube> layer{h.root()};
  for (int level = 0; level <= max_level && level <= h.resolution(); ++level) {
    std::vector<DyadicCube> next;
    for (const DyadicCube& q : layer) {
      ++rep.cubes_checked;
      const double side_q = h.root_side() * std::pow(0.5, level);
      const double volq = h.dim() == 1 ? side_q : side_q * side_q;
      const double mq = h.mean(q);
      double worst = 0.0;
      for (const RasterMask& e : family(h, q)) {
        const double vol = mask_volume(e, cellvol);
        if (vol < vol_floor_frac * volq) {
          ++rep.rejected_members;
          continue;
        }
        worst = std::max(worst, std::abs(mean_over_set(h, e) - mq));
      }
      if (worst > eps) rep.bad.push_back({q, worst});
      if (level < max_level && level < h.resolution())
        for (const DyadicCube& c : h.children(q)) next.push_back(c);
    }
    layer = std::move(next);
  }
  const double n = h.dim();
  for (const BadCubeEntry& b : rep.bad)
    rep.packing_sum += std::pow(std::pow(0.5, b.cube.level), n);
  return rep;
}

FamilySampler ball_family(double min_radius_frac, int centers_per_axis, int radii) {
  return [=](const GridFunction& h, const DyadicCube& q) {
    std::vector<RasterMask> out;
    std::int64_t lo0, hi0, lo1, hi1;
    h.cell_range(q, lo0, hi0, lo1, hi1);
    const double cell = h.root_side() / static_cast<double>(h.cells_per_side());
    const double side_q = cell * static_cast<double>(hi0 - lo0);
    for (int ci = 0; ci < centers_per_axis; ++ci)
      for (int cj = 0; cj < (h.dim() == 2 ? centers_per_axis : 1); ++cj)
        for (int rr = 0; rr < radii; ++rr) {
          const double cx = (static_cast<double>(lo0) +
                             (static_cast<double>(ci) + 0.5) / centers_per_axis *
                                 static_cast<double>(hi0 - lo0)) * cell;
          const double cy = (static_cast<double>(lo1) +
                             (static_cast<double>(cj) + 0.5) / centers_per_axis *
                                 static_cast<double>(hi1 - lo1)) * cell;
          const double t = radii == 1 ? 0.0 : static_cast<double>(rr) / (radii - 1);
          const double r = side_q * (min_radius_frac + t * (0.5 - min_radius_frac));
          RasterMask mask(h.cell_count(), 0);
          const auto m = static_cast<std::int64_t>(h.cells_per_side());
          for (std::int64_t j = lo1; j < hi1; ++j)
            for (std::int64_t i = lo0; i < hi0; ++i) {
              const double x = (static_cast<double>(i) + 0.5) * cell;
              const double y = h.dim() == 2 ? (static_cast<double>(j) + 0.5) * cell : cy;
              const double dx = x - cx, dy = y - cy;
              if (dx * dx + dy * dy <= r * r)
                mask[static_cast<std::size_t>(j * (h.dim() == 2 ? m : 1) + i)] = 1;
            }
          out.push_back(std::move(mask));
        }
    return out;
  };
}

SandwichFamily sandwich_construct(const std::vector<RasterMask>& sequence, double cell_volume,
                                  const std::vector<double>& eps_ladder) {
  if (sequence.empty()) throw std::domain_error("empty set sequence");
  const std::size_t cells = sequence.front().size();
  for (const auto& e : sequence)
    if (e.size() != cells) throw std::domain_error("raster mismatch in the set sequence");
  for (std::size_t j = 0; j + 1 < sequence.size(); ++j) {
    std::size_t sym = 0;
    for (std::size_t c = 0; c < cells; ++c)
      sym += (sequence[j][c] != 0) != (sequence[j + 1][c] != 0) ? 1 : 0;
    const double vol = static_cast<double>(sym) * cell_volume;
    const double allowed = std::pow(0.5, static_cast<double>(j));
    if (vol > allowed + 1e-12) {
      std::ostringstream msg;
      msg << "symmetric-difference rate violated between sets " << j << " and " << j + 1 << ": "
          << vol << " > " << allowed;
      throw std::domain_error(msg.str());
    }
  }
  // Tail intersections/unions, finest tail first.
  const std::size_t nset = sequence.size();
  std::vector<RasterMask> tail_int(nset), tail_uni(nset);
  tail_int[nset - 1] = sequence[nset - 1];
  tail_uni[nset - 1] = sequence[nset - 1];
  for (std::size_t j = nset - 1; j-- > 0;) {
    tail_int[j] = tail_int[j + 1];
    tail_uni[j] = tail_uni[j + 1];
    for (std::size_t c = 0; c < cells; ++c) {
      tail_int[j][c] = tail_int[j][c] && sequence[j][c];
      tail_uni[j][c] = tail_uni[j][c] || sequence[j][c];
    }
  }
  SandwichFamily fam;
  fam.members = sequence;
  std::vector<double> ladder = eps_ladder;
  std::sort(ladder.begin(), ladder.end(), std::greater<>());
  std::size_t j0 = 0;
  for (double eps : ladder) {
    // Smallest tail start (monotone across the ladder) with mass ratio >= 1-eps.
    std::size_t pick = nset;  // fallback: last set alone, ratio exactly 1
    for (std::size_t j = j0; j < nset; ++j) {
      const double lo = mask_volume(tail_int[j], cell_volume);
      const double hi = mask_volume(tail_uni[j], cell_volume);
      if (hi <= 0.0 || lo / hi >= 1.0 - eps) {
        pick = j;
        break;
      }
    }
    if (pick == nset) pick = nset - 1;
    j0 = pick;
    fam.eps.push_back(eps);
    fam.k0.push_back(pick);
    fam.lower.push_back(pick == nset - 1 ? sequence[nset - 1] : tail_int[pick]);
    fam.upper.push_back(pick == nset - 1 ? sequence[nset - 1] : tail_uni[pick]);
  }
  return fam;
}

void save_grid_function(const GridFunction& h, const std::string& path) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + path);
  bin.write(reinterpret_cast<const char*>(h.values().data()),
            static_cast<std::streamsize>(h.values().size() * sizeof(double)));
  nlohmann::json j;
  j["n"] = h.dim();
  j["J"] = h.resolution();
  j["Q0"] = {{"corner", std::vector<double>(h.root_corner().begin(),
                                            h.root_corner().begin() + h.dim())},
             {"side", h.root_side()}};
  j["sup_bound"] = h.sup_bound();
  std::ofstream side(path + ".json");
  side << j.dump(2) << '\n';
}

GridFunction load_grid_function(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw std::runtime_error("cannot open " + path + ".json");
  nlohmann::json j;
  side >> j;
  const int n = j.at("n").get<int>();
  const int J = j.at("J").get<int>();
  std::array<double, 2> corner{0.0, 0.0};
  const auto cj = j.at("Q0").at("corner").get<std::vector<double>>();
  for (std::size_t i = 0; i < cj.size() && i < 2; ++i) corner[i] = cj[i];
  const double s = j.at("Q0").at("side").get<double>();
  const std::size_t m = std::size_t{1} << J;
  std::vector<double> values(n == 1 ? m : m * m);
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + path);
  bin.read(reinterpret_cast<char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!bin) throw std::runtime_error("truncated grid function file " + path);
  return GridFunction(n, J, corner, s, std::move(values), j.at("sup_bound").get<double>());
}

void export_bad_cubes(const GridFunction& h, const OscillationReport& report,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "level,corner_x,corner_y,deviation\n";
  for (const BadCubeEntry& b : report.bad) {
    const double side = h.root_side() * std::pow(0.5, b.cube.level);
    const double x = h.root_corner()[0] + side * static_cast<double>(b.cube.cell[0]);
    const double y =
        h.dim() == 2 ? h.root_corner()[1] + side * static_cast<double>(b.cube.cell[1]) : 0.0;
    out << b.cube.level << ',' << x << ',' << y << ',' << b.deviation << '\n';
  }
}

}  // namespace mmflat
