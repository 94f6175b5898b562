#include "mmflat/shifted_lattice.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmflat {

ShiftedLattice::ShiftedLattice(int n, std::vector<double> root_corner, double root_side)
    : n_(n), root_corner_(std::move(root_corner)), root_side_(root_side) {
  if (n < 1 || n > 3) throw std::domain_error("lattice supports n in {1,2,3}");
  if (static_cast<int>(root_corner_.size()) != n) throw std::domain_error("corner dim mismatch");
  if (!(root_side_ > 0.0)) throw std::domain_error("root side must be positive");
}

double ShiftedLattice::side(int level) const { return root_side_ * std::pow(0.5, level); }

std::vector<double> ShiftedLattice::corner(const LatticeCube& q) const {
  const double s = side(q.level);
  std::vector<double> c(n_);
  for (int i = 0; i < n_; ++i) {
    const double shift = (q.shift_mask >> i) & 1u ? s / 3.0 : 0.0;
    c[i] = root_corner_[i] + s * static_cast<double>(q.cell[i]) + shift;
  }
  return c;
}

std::vector<double> ShiftedLattice::center(const LatticeCube& q) const {
  auto c = corner(q);
  const double s = side(q.level);
  for (double& v : c) v += s / 2.0;
  return c;
}

bool ShiftedLattice::contains(const LatticeCube& q, const std::vector<double>& x) const {
  const auto c = corner(q);
  const double s = side(q.level);
  for (int i = 0; i < n_; ++i)
    if (x[i] < c[i] || x[i] >= c[i] + s) return false;
  return true;
}

bool ShiftedLattice::central_two_thirds(const LatticeCube& q, const std::vector<double>& x) const {
  const auto c = center(q);
  const double s = side(q.level);
  for (int i = 0; i < n_; ++i)
    if (std::abs(x[i] - c[i]) >= s / 3.0) return false;
  return true;
}

LatticeCube ShiftedLattice::locate(const std::vector<double>& x, int level) const {
  for (int i = 0; i < n_; ++i)
    if (x[i] < root_corner_[i] || x[i] > root_corner_[i] + root_side_)
      throw std::domain_error("point outside the root cube");
  const double s = side(level);
  for (std::uint32_t mask = 0; mask < (1u << n_); ++mask) {
    LatticeCube q;
    q.level = level;
    q.shift_mask = mask;
    for (int i = 0; i < n_; ++i) {
      const double shift = (mask >> i) & 1u ? s / 3.0 : 0.0;
      q.cell[i] = static_cast<std::int64_t>(std::floor((x[i] - root_corner_[i] - shift) / s));
    }
    if (central_two_thirds(q, x)) return q;
  }
  throw std::logic_error("one-third-trick containment failed");  // cannot happen
}

std::optional<LatticeCube> ShiftedLattice::smallest_covering(
    const std::vector<std::vector<double>>& pts, int max_level) const {
  if (pts.empty()) return std::nullopt;
  std::vector<double> lo(n_, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n_, -std::numeric_limits<double>::infinity());
  for (const auto& p : pts)
    for (int i = 0; i < n_; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  std::optional<LatticeCube> best;
  for (int level = max_level; level >= 1; --level) {
    const double s = side(level);
    for (std::uint32_t mask = 0; mask < (1u << n_); ++mask) {
      LatticeCube q;
      q.level = level;
      q.shift_mask = mask;
      bool fits = true;
      for (int i = 0; i < n_ && fits; ++i) {
        const double shift = (mask >> i) & 1u ? s / 3.0 : 0.0;
        const auto clo = static_cast<std::int64_t>(std::floor((lo[i] - root_corner_[i] - shift) / s));
        const auto chi = static_cast<std::int64_t>(std::floor((hi[i] - root_corner_[i] - shift) / s));
        if (clo != chi) fits = false;
        q.cell[i] = clo;
      }
      if (fits) return q;
    }
  }
  return best;
}

LGoodCube find_l_good_cube(const MetricSpaceSample& space, const Chart& chart,
                           const CubeTree& tree, std::uint32_t cube_id,
                           const ShiftedLattice& lattice) {
  const Cube& q = tree.cube(cube_id);
  const double ell = tree.side(q);
  std::vector<std::vector<double>> pre;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.distance(q.center, i) <= 10.0 * ell) pre.push_back(chart.params[i]);
  const int max_level =
      std::max(1, static_cast<int>(std::floor(std::log2(lattice.root_side() / (ell * 0.5)))) + 4);
  auto found = lattice.smallest_covering(pre, max_level);
  if (!found)
    throw std::runtime_error("no L-good lattice cube below the root scale covers 10B_Q");
  LGoodCube out;
  out.cube = *found;
  out.side = lattice.side(found->level);
  out.comparability = out.side / ell;
  return out;
}

}  // namespace mmflat
