#include "mmflat/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace mmflat {

namespace {

constexpr double kScaleFloorFactor = 20.0;

/// Exact minimizer of max_i |m_i - sigma * b_i| over sigma >= 0 (m_i, b_i >= 0).
/// The objective is max(g, h) with g(sigma) = max_i (m_i - sigma b_i) decreasing
/// and h(sigma) = max_i (sigma b_i - m_i) increasing, so the optimum sits at
/// their unique crossing (or at 0): bisect, then refine with the exact crossing
/// of the two active lines.
std::pair<double, double> minimax_affine(const std::vector<std::pair<double, double>>& mb) {
  auto envelope = [&](double sigma, bool upper) {
    double v = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < mb.size(); ++i) {
      const double line = upper ? sigma * mb[i].second - mb[i].first
                                : mb[i].first - sigma * mb[i].second;
      if (line > v) {
        v = line;
        arg = i;
      }
    }
    return std::pair<double, std::size_t>{v, arg};
  };
  auto eval = [&](double sigma) {
    return std::max(envelope(sigma, false).first, envelope(sigma, true).first);
  };
  double best_sigma = 0.0;
  double best_val = eval(0.0);
  auto consider = [&](double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) return;
    const double v = eval(sigma);
    if (v < best_val) {
      best_val = v;
      best_sigma = sigma;
    }
  };
  double hi = 1.0;
  for (int it = 0; it < 200 && envelope(hi, true).first < envelope(hi, false).first; ++it)
    hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (envelope(mid, false).first >= envelope(mid, true).first)
      lo = mid;
    else
      hi = mid;
  }
  const double mid = 0.5 * (lo + hi);
  consider(mid);
  const auto [gv, gi] = envelope(mid, false);
  const auto [hv, hj] = envelope(mid, true);
  const double denom = mb[gi].second + mb[hj].second;
  if (denom > 0.0) consider((mb[gi].first + mb[hj].first) / denom);
  return {best_sigma, best_val};
}

double dist_ambient(const MetricSpaceSample& space, std::span<const double> a,
                    const std::vector<double>& b) {
  if (space.ambient_norm() == AmbientNorm::Linf) {
    double m = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double dist_vec(const MetricSpaceSample& space, const std::vector<double>& a,
                const std::vector<double>& b) {
  return dist_ambient(space, std::span<const double>(a.data(), a.size()), b);
}

}  // namespace

std::pair<double, double> minimax_constant(const std::vector<std::pair<double, double>>& samples,
                                           int n) {
  if (samples.empty()) throw std::domain_error("minimax_constant needs at least one sample");
  std::vector<std::pair<double, double>> mb;
  mb.reserve(samples.size());
  for (const auto& [m, t] : samples) {
    if (!(t > 0.0)) throw std::domain_error("scales must be positive");
    mb.push_back({m, std::pow(t, n)});
  }
  return minimax_affine(mb);
}

double osc_coefficient(const MetricSpaceSample& space, std::size_t x, double r,
                       const OscBudget& budget, const std::vector<std::uint8_t>* subset) {
  if (x >= space.size()) throw std::domain_error("center index out of range");
  if (r < kScaleFloorFactor * space.min_spacing())
    throw std::domain_error("degenerate scale: r below 20x the minimum spacing");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.distance(x, i) <= r) members.push_back(i);
  // Greedy farthest-point net of the ball locations, seeded at the center.
  std::vector<std::size_t> net{x};
  std::vector<double> mind(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) mind[k] = space.distance(x, members[k]);
  while (net.size() < std::min<std::size_t>(budget.net_points, members.size())) {
    std::size_t far = members.size();
    for (std::size_t k = 0; k < members.size(); ++k)
      if (far == members.size() || mind[k] > mind[far] + 1e-15) far = k;
    if (far == members.size() || mind[far] <= 0.0) break;
    net.push_back(members[far]);
    for (std::size_t k = 0; k < members.size(); ++k)
      mind[k] = std::min(mind[k], space.distance(members[far], members[k]));
  }
  const std::size_t scales = std::max<std::size_t>(2, budget.scales);
  std::vector<std::pair<double, double>> samples;
  for (std::size_t y : net)
    for (std::size_t s = 0; s < scales; ++s) {
      const double t =
          r * std::pow(budget.t_floor_frac,
                       static_cast<double>(s) / static_cast<double>(scales - 1));
      double mass = 0.0;
      for (std::size_t i = 0; i < space.size(); ++i)
        if ((!subset || (*subset)[i]) && space.distance(y, i) <= t) mass += space.weight(i);
      samples.push_back({mass, t});
    }
  const int n = space.dim_n();
  return minimax_constant(samples, n).second / std::pow(r, n);
}

namespace {

struct Plane {
  std::vector<double> origin;  // ambient
  std::vector<double> basis;   // n rows of ambient_dim, row-major, orthonormal
};

std::vector<double> plane_point(const Plane& pl, const std::vector<double>& u, int D) {
  std::vector<double> p = pl.origin;
  const int n = static_cast<int>(u.size());
  for (int a = 0; a < n; ++a)
    for (int d = 0; d < D; ++d) p[static_cast<std::size_t>(d)] += u[static_cast<std::size_t>(a)] * pl.basis[static_cast<std::size_t>(a * D + d)];
  return p;
}

/// PCA frame of the weighted member coordinates plus angular perturbations.
std::vector<Plane> candidate_planes(const MetricSpaceSample& space,
                                    const std::vector<std::size_t>& members,
                                    const std::vector<double>& mu, int n,
                                    const AlphaConfig& cfg) {
  const int D = space.ambient_dim();
  std::vector<double> centroid(static_cast<std::size_t>(D), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto c = space.coord(members[k]);
    for (int d = 0; d < D; ++d) centroid[static_cast<std::size_t>(d)] += mu[k] * c[static_cast<std::size_t>(d)];
    total += mu[k];
  }
  for (double& v : centroid) v /= std::max(total, 1e-300);
  std::vector<double> cov(static_cast<std::size_t>(D * D), 0.0);
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto c = space.coord(members[k]);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        cov[static_cast<std::size_t>(a * D + b)] += mu[k] *
            (c[static_cast<std::size_t>(a)] - centroid[static_cast<std::size_t>(a)]) *
            (c[static_cast<std::size_t>(b)] - centroid[static_cast<std::size_t>(b)]);
  }
  std::vector<double> lam, V;
  linalg::sym_eigen(cov, D, lam, V);  // ascending; principal directions last
  Plane base;
  base.origin = centroid;
  base.basis.assign(static_cast<std::size_t>(n * D), 0.0);
  for (int a = 0; a < n; ++a)
    for (int d = 0; d < D; ++d)
      base.basis[static_cast<std::size_t>(a * D + d)] = V[static_cast<std::size_t>(d * D + (D - 1 - a))];
  std::vector<Plane> out{base};
  if (n >= D) return out;
  // Rotate each basis row toward each discarded direction by +-k*delta.
  for (int a = 0; a < n; ++a)
    for (int disc = 0; disc < D - n; ++disc)
      for (int step = -cfg.angle_steps; step <= cfg.angle_steps; ++step) {
        if (step == 0) continue;
        const double th = cfg.angle_delta * static_cast<double>(step);
        Plane p = base;
        for (int d = 0; d < D; ++d) {
          const double va = base.basis[static_cast<std::size_t>(a * D + d)];
          const double vd = V[static_cast<std::size_t>(d * D + (D - 1 - n - disc))];
          p.basis[static_cast<std::size_t>(a * D + d)] = std::cos(th) * va + std::sin(th) * vd;
        }
        out.push_back(std::move(p));
      }
  return out;
}

}  // namespace

AlphaResult alpha_coefficient(const MetricSpaceSample& space, std::size_t x, double r,
                              const AlphaConfig& config, const std::vector<std::uint8_t>* subset) {
  if (!space.has_coords())
    throw std::domain_error("alpha_coefficient requires ambient coordinates");
  if (x >= space.size()) throw std::domain_error("center index out of range");
  const int n = space.dim_n();
  const int D = space.ambient_dim();
  std::vector<std::size_t> members;
  std::vector<double> mu;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.distance(x, i) <= r && (!subset || (*subset)[i])) {
      members.push_back(i);
      mu.push_back(space.weight(i));
    }
  AlphaResult result;
  double total = 0.0;
  for (double m : mu) total += m;
  if (total <= 0.0) return result;  // empty ball convention
  // Large balls: aggregate the measure onto a metric net before the plane
  // search. Each point's mass joins its nearest representative, so every atom
  // moves by at most the net granularity g <= a few multiples of r/128.
  constexpr std::size_t kSupportBudget = 384;
  if (members.size() > kSupportBudget) {
    std::vector<std::size_t> reps;
    for (double g = r / 128.0;; g *= 2.0) {
      reps.clear();
      for (std::size_t i : members) {
        bool covered = false;
        for (std::size_t rep : reps)
          if (space.distance(i, rep) <= g) {
            covered = true;
            break;
          }
        if (!covered) reps.push_back(i);
        if (reps.size() > kSupportBudget) break;
      }
      if (reps.size() <= kSupportBudget) break;
    }
    std::vector<double> agg(reps.size(), 0.0);
    for (std::size_t k = 0; k < members.size(); ++k) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < reps.size(); ++t) {
        const double d = space.distance(members[k], reps[t]);
        if (d < bd) {
          bd = d;
          best = t;
        }
      }
      agg[best] += mu[k];
    }
    members = std::move(reps);
    mu = std::move(agg);
  }
  double s = config.plane_spacing > 0.0
                 ? config.plane_spacing
                 : std::max(space.min_spacing(), r / 64.0);
  // Cap the plane-grid size; the density search below absorbs the coarser
  // node volume, and the discretization only over-estimates the distance.
  while (std::pow(2.0 * (std::ceil(r / s) + 1.0), n) > 4096.0) s *= 1.5;
  const std::vector<double> xc(space.coord(x).begin(), space.coord(x).end());
  const auto planes = candidate_planes(space, members, mu, n, config);
  result.value = std::numeric_limits<double>::infinity();
  // Shortlist the planes by the first moment of the member distances (cheap,
  // no solves); only the best few enter the density search.
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t pid = 0; pid < planes.size(); ++pid) {
    const Plane& pl = planes[pid];
    double moment = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto c = space.coord(members[k]);
      double sq = 0.0;
      std::vector<double> proj(static_cast<std::size_t>(n), 0.0);
      for (int d = 0; d < D; ++d) {
        const double v = c[static_cast<std::size_t>(d)] - pl.origin[static_cast<std::size_t>(d)];
        sq += v * v;
        for (int a = 0; a < n; ++a)
          proj[static_cast<std::size_t>(a)] += v * pl.basis[static_cast<std::size_t>(a * D + d)];
      }
      for (int a = 0; a < n; ++a) sq -= proj[static_cast<std::size_t>(a)] * proj[static_cast<std::size_t>(a)];
      moment += mu[k] * std::sqrt(std::max(sq, 0.0));
    }
    ranked.push_back({moment, pid});
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::uint8_t> shortlisted(planes.size(), 0);
  for (std::size_t t = 0; t < ranked.size() && t < 2; ++t) shortlisted[ranked[t].second] = 1;
  // Two-stage search: rank the shortlisted planes with a coarse density
  // search, then refine only the winner with the full iteration budget.
  const std::size_t coarse_iters = std::min<std::size_t>(12, config.c_iters);
  std::size_t best_pid = planes.size();
  std::vector<EdgeSet> plane_edges(planes.size());
  for (std::size_t stage = 0; stage < 2; ++stage) {
  for (std::size_t pid = 0; pid < planes.size(); ++pid) {
    if (stage == 0 && !shortlisted[pid]) continue;
    if (stage == 1 && pid != best_pid) continue;
    const std::size_t iters = stage == 0 ? coarse_iters : std::max<std::size_t>(config.c_iters, 3);
    const Plane& pl = planes[pid];
    // Grid nodes on the plane, centered near the projection of x.
    std::vector<double> xproj(static_cast<std::size_t>(n), 0.0);
    for (int a = 0; a < n; ++a)
      for (int d = 0; d < D; ++d)
        xproj[static_cast<std::size_t>(a)] += (xc[static_cast<std::size_t>(d)] - pl.origin[static_cast<std::size_t>(d)]) * pl.basis[static_cast<std::size_t>(a * D + d)];
    const auto reach = static_cast<std::int64_t>(std::ceil(r / s)) + 1;
    std::vector<std::vector<double>> nodes;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n), -reach);
    while (true) {
      std::vector<double> u(static_cast<std::size_t>(n));
      for (int a = 0; a < n; ++a)
        u[static_cast<std::size_t>(a)] = xproj[static_cast<std::size_t>(a)] +
            (static_cast<double>(idx[static_cast<std::size_t>(a)]) + 0.5) * s;
      auto p = plane_point(pl, u, D);
      if (dist_vec(space, p, xc) < r) nodes.push_back(std::move(p));
      int a = 0;
      for (; a < n; ++a) {
        if (++idx[static_cast<std::size_t>(a)] < reach) break;
        idx[static_cast<std::size_t>(a)] = -reach;
      }
      if (a == n) break;
    }
    if (nodes.empty()) continue;
    const double node_vol = std::pow(s, n);
    // Shared support: members first, then plane nodes.
    const std::size_t nm = members.size();
    TransportInstance inst;
    inst.metric = [&space, &members, &nodes, nm](std::size_t a, std::size_t b) {
      if (a < nm && b < nm) return space.distance(members[a], members[b]);
      if (a >= nm && b >= nm) {
        double ss = 0.0;
        const auto& pa = nodes[a - nm];
        const auto& pb = nodes[b - nm];
        for (std::size_t d = 0; d < pa.size(); ++d) ss += (pa[d] - pb[d]) * (pa[d] - pb[d]);
        return std::sqrt(ss);
      }
      const std::size_t pt = a < nm ? members[a] : members[b];
      const auto& node = a < nm ? nodes[b - nm] : nodes[a - nm];
      return dist_ambient(space, space.coord(pt), node);
    };
    std::vector<double> center_dist;
    inst.mu.assign(nm + nodes.size(), 0.0);
    inst.nu.assign(nm + nodes.size(), 0.0);
    inst.cap.assign(nm + nodes.size(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < nm; ++k) {
      inst.mu[k] = mu[k];
      center_dist.push_back(space.distance(members[k], x));
    }
    for (const auto& node : nodes) center_dist.push_back(dist_vec(space, node, xc));
    SolveOptions lp = config.lp;
    if (!lp.sparse && nm + nodes.size() > 48) lp.sparse = true;
    auto eval = [&](double c) {
      for (std::size_t k = 0; k < nodes.size(); ++k) inst.nu[nm + k] = c * node_vol;
      return dist_ball(inst, center_dist, r, lp, &plane_edges[pid]);
    };
    // dist_ball is convex piecewise-linear in c: golden-section search on a
    // bracket around the empirical density (one solve per iteration).
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 3.0 * total / std::pow(r, n) + 1e-12;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    for (std::size_t it = 2; it < std::max<std::size_t>(iters, 3); ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = eval(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = eval(x2);
      }
    }
    const double c_star = f1 <= f2 ? x1 : x2;
    const double val = std::min(f1, f2) / std::pow(r, n + 1);
    if (val < result.value || (stage == 1 && pid == best_pid)) {
      result.value = std::min(val, result.value);
      result.c = c_star;
      result.plane_origin = pl.origin;
      result.plane_basis = pl.basis;
      result.plane_id = static_cast<int>(pid);
      result.norm_tag = "l2";
      best_pid = pid;
    }
  }
  if (best_pid == planes.size()) break;  // no plane produced nodes
  }
  if (!std::isfinite(result.value)) result.value = 0.0;
  return result;
}

MdResult md_coefficient(const MetricSpaceSample& space, const Chart& chart,
                        const std::vector<double>& box_corner, double box_side,
                        std::size_t pair_cap) {
  const int n = chart.n;
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < chart.params.size(); ++i) {
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) {
      const double v = chart.params[i][static_cast<std::size_t>(a)];
      if (v < box_corner[static_cast<std::size_t>(a)] ||
          v > box_corner[static_cast<std::size_t>(a)] + box_side)
        ok = false;
    }
    if (ok) inside.push_back(i);
  }
  if (inside.size() < 2) throw std::domain_error("md_coefficient needs at least 2 samples");
  std::vector<PairSample> pairs;
  const std::size_t total_pairs = inside.size() * (inside.size() - 1) / 2;
  const std::size_t stride = std::max<std::size_t>(1, total_pairs / std::max<std::size_t>(pair_cap, 1));
  std::size_t counter = 0;
  for (std::size_t a = 0; a < inside.size(); ++a)
    for (std::size_t b = a + 1; b < inside.size(); ++b) {
      if (counter++ % stride != 0) continue;
      PairSample ps;
      ps.dx.resize(static_cast<std::size_t>(n));
      for (int d = 0; d < n; ++d)
        ps.dx[static_cast<std::size_t>(d)] = chart.params[inside[a]][static_cast<std::size_t>(d)] -
                                             chart.params[inside[b]][static_cast<std::size_t>(d)];
      ps.target = space.distance(inside[a], inside[b]);
      pairs.push_back(std::move(ps));
    }
  MdResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const NormModel& base : norm_dictionary(n)) {
    // Optimal scalar for the tag by the exact 1-D minimax.
    std::vector<std::pair<double, double>> mb;
    NormModel unit = base;
    for (const PairSample& ps : pairs) mb.push_back({ps.target, unit(ps.dx)});
    auto [sigma, val] = minimax_affine(mb);
    if (val < best.value) {
      best.value = val;
      best.norm = base;
      best.norm.scale = sigma;
    }
  }
  NormModel fitted = fit_matrix_norm(pairs, n);
  const double fitted_val = max_pair_defect(fitted, pairs);
  if (fitted_val < best.value) {
    best.value = fitted_val;
    best.norm = fitted;
  }
  best.value /= box_side;
  return best;
}

namespace {

/// Jacobian of the locally fitted norm around a chart-parameter point.
double local_jacobian(const MetricSpaceSample& space, const Chart& chart,
                      const std::vector<double>& center, double radius,
                      const NormModel* fallback) {
  const int n = chart.n;
  std::vector<std::size_t> close;
  for (std::size_t i = 0; i < chart.params.size(); ++i) {
    bool ok = true;
    for (int a = 0; a < n && ok; ++a)
      if (std::abs(chart.params[i][static_cast<std::size_t>(a)] - center[static_cast<std::size_t>(a)]) > radius)
        ok = false;
    if (ok) close.push_back(i);
  }
  if (close.size() < static_cast<std::size_t>(n + 1)) {
    if (fallback) return jacobian_of_seminorm(*fallback);
    throw std::domain_error("too few chart samples for a local jacobian");
  }
  std::vector<PairSample> pairs;
  const std::size_t cap = 400;
  const std::size_t total = close.size() * (close.size() - 1) / 2;
  const std::size_t stride = std::max<std::size_t>(1, total / cap);
  std::size_t counter = 0;
  for (std::size_t a = 0; a < close.size(); ++a)
    for (std::size_t b = a + 1; b < close.size(); ++b) {
      if (counter++ % stride != 0) continue;
      PairSample ps;
      ps.dx.resize(static_cast<std::size_t>(n));
      for (int d = 0; d < n; ++d)
        ps.dx[static_cast<std::size_t>(d)] = chart.params[close[a]][static_cast<std::size_t>(d)] -
                                             chart.params[close[b]][static_cast<std::size_t>(d)];
      ps.target = space.distance(close[a], close[b]);
      pairs.push_back(std::move(ps));
    }
  return jacobian_of_seminorm(fit_matrix_norm(pairs, n));
}

}  // namespace

AlphaTildeResult alpha_cube_adapted(const MetricSpaceSample& space, const Chart& chart,
                                    const ShiftedLattice& lattice, const LatticeCube& I,
                                    std::size_t grid_per_side,
                                    const std::vector<std::uint8_t>* subset,
                                    const SolveOptions& lp) {
  const int n = chart.n;
  const double ell = lattice.side(I.level);
  const auto corner = lattice.corner(I);
  std::vector<std::size_t> in_cube;   // all chart samples in I (glue interface)
  std::vector<std::size_t> e_members; // those also in E
  for (std::size_t i = 0; i < chart.params.size(); ++i)
    if (lattice.contains(I, chart.params[i])) {
      in_cube.push_back(i);
      if (!subset || (*subset)[i]) e_members.push_back(i);
    }
  AlphaTildeResult out;
  if (e_members.empty()) return out;  // empty set convention
  const MdResult md = md_coefficient(space, chart, corner, ell);
  out.md = md.value;
  out.glue.norm = md.norm;
  out.glue.penalty = 2.0 * md.value * ell;
  out.glue.x_points = e_members;
  // Density c_{P,I} * H^n_{||.||_I} == (avg of J_g over P) * Lebesgue on I:
  // rasterize I, mark cells meeting P (params of E members), average the local
  // jacobian over marked cells.
  const std::size_t m = grid_per_side;
  const double cell = ell / static_cast<double>(m);
  const double cell_vol = std::pow(cell, n);
  std::vector<std::vector<double>> centers;
  std::vector<char> in_p;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    std::vector<double> c(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
      c[static_cast<std::size_t>(a)] = corner[static_cast<std::size_t>(a)] +
          (static_cast<double>(idx[static_cast<std::size_t>(a)]) + 0.5) * cell;
    bool meets = false;
    for (std::size_t i : e_members) {
      bool inside = true;
      for (int a = 0; a < n && inside; ++a)
        if (std::abs(chart.params[i][static_cast<std::size_t>(a)] - c[static_cast<std::size_t>(a)]) > cell / 2.0)
          inside = false;
      if (inside) {
        meets = true;
        break;
      }
    }
    centers.push_back(std::move(c));
    in_p.push_back(meets ? 1 : 0);
    int a = 0;
    for (; a < n; ++a) {
      if (++idx[static_cast<std::size_t>(a)] < static_cast<std::int64_t>(m)) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
    if (a == n) break;
  }
  double jac_sum = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k)
    if (in_p[k]) jac_sum += local_jacobian(space, chart, centers[k], 1.5 * cell, &md.norm);
  const double density = jac_sum * cell_vol / std::pow(ell, n);  // avg over I of J_g chi_P
  out.c_pi = density;
  out.glue.grid_nodes = centers;
  out.glue.grid_mass.assign(centers.size(), density * cell_vol);
  // Glued metric: X side uses d, R^n side uses ||.||_I, cross terms route
  // through the sampled interface with the 2 md ell penalty.
  const std::size_t nx = e_members.size();
  const NormModel& norm = md.norm;
  auto norm_diff = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) d[t] = a[t] - b[t];
    return norm(d);
  };
  std::vector<std::vector<double>> cross(nx, std::vector<double>(centers.size()));
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t g = 0; g < centers.size(); ++g) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t u : in_cube)
        best = std::min(best, norm_diff(chart.params[u], centers[g]) + out.glue.penalty +
                                  space.distance(u, e_members[i]));
      cross[i][g] = best;
    }
  TransportInstance inst;
  inst.metric = [&, nx](std::size_t a, std::size_t b) {
    if (a < nx && b < nx) return space.distance(e_members[a], e_members[b]);
    if (a >= nx && b >= nx) return norm_diff(centers[a - nx], centers[b - nx]);
    return a < nx ? cross[a][b - nx] : cross[b][a - nx];
  };
  const std::size_t total = nx + centers.size();
  inst.mu.assign(total, 0.0);
  inst.nu.assign(total, 0.0);
  inst.cap.assign(total, 0.0);
  for (std::size_t i = 0; i < nx; ++i) inst.mu[i] = space.weight(e_members[i]);
  for (std::size_t g = 0; g < centers.size(); ++g) inst.nu[nx + g] = out.glue.grid_mass[g];
  // Triangle audit on a deterministic triple sample across the two sides.
  double defect = 0.0;
  const std::size_t tstep = std::max<std::size_t>(1, total / 12);
  for (std::size_t a = 0; a < total; a += tstep)
    for (std::size_t b = a + 1; b < total; b += tstep)
      for (std::size_t c = b + 1; c < total; c += tstep)
        defect = std::max({defect, inst.metric(a, b) - inst.metric(a, c) - inst.metric(c, b),
                           inst.metric(a, c) - inst.metric(a, b) - inst.metric(b, c),
                           inst.metric(b, c) - inst.metric(b, a) - inst.metric(a, c)});
  out.glue.triangle_defect = defect;
  if (defect > 1e-9 * std::max(1.0, ell))
    throw std::runtime_error("glued-metric triangle audit failed");
  out.value = tilde_dist(inst, lp) / std::pow(ell, n + 1);
  return out;
}

XiResult xi_coefficient(const MetricSpaceSample& space, const Chart& chart, std::size_t x,
                        double r, std::size_t ball_grid) {
  if (chart.params.size() != space.size())
    throw std::domain_error("chart does not cover the space");
  const int n = chart.n;
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.distance(x, i) <= r) members.push_back(i);
  if (members.size() < 2) throw std::domain_error("ball too small for xi");
  const std::vector<double>& phix = chart.params[x];
  std::vector<NormModel> candidates = norm_dictionary(n);
  {
    std::vector<PairSample> pairs;
    const std::size_t cap = 1500;
    const std::size_t total = members.size() * (members.size() - 1) / 2;
    const std::size_t stride = std::max<std::size_t>(1, total / cap);
    std::size_t counter = 0;
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        if (counter++ % stride != 0) continue;
        PairSample ps;
        ps.dx.resize(static_cast<std::size_t>(n));
        for (int d = 0; d < n; ++d)
          ps.dx[static_cast<std::size_t>(d)] =
              chart.params[members[a]][static_cast<std::size_t>(d)] -
              chart.params[members[b]][static_cast<std::size_t>(d)];
        ps.target = space.distance(members[a], members[b]);
        pairs.push_back(std::move(ps));
      }
    candidates.push_back(fit_matrix_norm(pairs, n));
  }
  XiResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const NormModel& norm : candidates) {
    auto nd = [&](const std::vector<double>& a, const std::vector<double>& b) {
      std::vector<double> d(a.size());
      for (std::size_t t = 0; t < a.size(); ++t) d[t] = a[t] - b[t];
      return norm(d);
    };
    double zeta = 0.0;
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        zeta = std::max(zeta, std::abs(space.distance(members[a], members[b]) -
                                       nd(chart.params[members[a]], chart.params[members[b]])));
    zeta /= r;
    // eta: every point of the normed model ball close to the chart image.
    double eta = 0.0;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n), 0);
    const auto g = static_cast<std::int64_t>(ball_grid);
    while (true) {
      std::vector<double> u = phix;
      for (int a = 0; a < n; ++a)
        u[static_cast<std::size_t>(a)] +=
            -2.0 * r + 4.0 * r * (static_cast<double>(idx[static_cast<std::size_t>(a)]) + 0.5) /
                           static_cast<double>(g);
      if (nd(u, phix) <= r) {
        double closest = std::numeric_limits<double>::infinity();
        for (std::size_t i : members) closest = std::min(closest, nd(u, chart.params[i]));
        eta = std::max(eta, closest);
      }
      int a = 0;
      for (; a < n; ++a) {
        if (++idx[static_cast<std::size_t>(a)] < g) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
      if (a == n) break;
    }
    eta /= r;
    if (zeta + eta < best.value) {
      best.value = zeta + eta;
      best.zeta = zeta;
      best.eta = eta;
      best.norm = norm;
    }
  }
  return best;
}

double jacobian_of_seminorm(const std::function<double(const std::vector<double>&)>& s, int n,
                            int quadrature_order) {
  const double floor = 1e-12;
  if (n == 1) {
    const double a = s({1.0}), b = s({-1.0});
    if (a < floor || b < floor) return 0.0;
    // alpha(1) = 2; the 0-sphere integral is the two-point sum.
    return 2.0 / (1.0 / a + 1.0 / b);
  }
  if (n == 2) {
    const int m = std::max(quadrature_order, 16);
    double integral = 0.0;
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / m;
      const double v = s({std::cos(th), std::sin(th)});
      if (v < floor) return 0.0;
      integral += std::pow(v, -2.0);
    }
    integral *= 2.0 * std::numbers::pi / m;
    return 2.0 * std::numbers::pi / integral;  // alpha(2) * 2 = 2 pi
  }
  if (n == 3) {
    // Gauss-Legendre in cos(theta) x periodic trapezoid in phi.
    const int gl = std::max(quadrature_order / 2, 16);
    const int mp = std::max(quadrature_order, 32);
    std::vector<double> nodes(static_cast<std::size_t>(gl)), wts(static_cast<std::size_t>(gl));
    for (int i = 0; i < gl; ++i) {
      // Newton iteration from the Chebyshev initial guess.
      double t = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (gl + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= gl; ++k) {
          const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        pp = gl * (t * p1 - p0) / (t * t - 1.0);
        const double dt = p1 / pp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      nodes[static_cast<std::size_t>(i)] = t;
      wts[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * pp * pp);
    }
    double integral = 0.0;
    for (int i = 0; i < gl; ++i) {
      const double u = nodes[static_cast<std::size_t>(i)];
      const double sth = std::sqrt(std::max(0.0, 1.0 - u * u));
      double ring = 0.0;
      for (int k = 0; k < mp; ++k) {
        const double ph = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / mp;
        const double v = s({sth * std::cos(ph), sth * std::sin(ph), u});
        if (v < floor) return 0.0;
        ring += std::pow(v, -3.0);
      }
      integral += wts[static_cast<std::size_t>(i)] * ring * 2.0 * std::numbers::pi / mp;
    }
    return 4.0 * std::numbers::pi / integral;  // alpha(3) * 3 = 4 pi
  }
  throw std::domain_error("jacobian supports n <= 3");
}

double jacobian_of_seminorm(const NormModel& s, int quadrature_order) {
  if (s.scale <= 0.0) return 0.0;
  // Singular matrices vanish on a subspace the angular quadrature can miss.
  if (s.kind == NormModel::Kind::Matrix && std::abs(linalg::det(s.A, s.n)) < 1e-12) return 0.0;
  return jacobian_of_seminorm([&s](const std::vector<double>& x) { return s(x); }, s.n,
                              quadrature_order);
}

JacobianField metric_jacobian_field(const MetricSpaceSample& space, const Chart& chart,
                                    const std::vector<double>& box_corner, double box_side,
                                    int level) {
  const int n = chart.n;
  if (n > 2) throw std::domain_error("jacobian fields support n <= 2");
  for (std::size_t i = 0; i < chart.params.size(); ++i)
    for (std::size_t j = i + 1; j < chart.params.size(); ++j)
      if (space.distance(i, j) <= 0.0)
        throw std::domain_error("chart samples are not injective");
  const MdResult global = md_coefficient(space, chart, box_corner, box_side);
  const std::size_t m = std::size_t{1} << level;
  const double cell = box_side / static_cast<double>(m);
  std::array<double, 2> corner{box_corner[0], n == 2 ? box_corner[1] : 0.0};
  GridFunction field(n, level, corner, box_side);
  double maxv = 0.0;
  const std::size_t rows = n == 2 ? m : 1;
  for (std::size_t j = 0; j < rows; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> c{box_corner[0] + (static_cast<double>(i) + 0.5) * cell};
      if (n == 2) c.push_back(box_corner[1] + (static_cast<double>(j) + 0.5) * cell);
      const double v = local_jacobian(space, chart, c, 1.25 * cell, &global.norm);
      field.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = v;
      maxv = std::max(maxv, v);
    }
  JacobianField out{GridFunction(n, level, corner, box_side, std::move(field.values()), maxv),
                    0.0, 0.0};
  for (double v : out.field.values()) out.pushforward_mass += v;
  out.pushforward_mass *= std::pow(cell, n);
  for (std::size_t i = 0; i < chart.params.size(); ++i) {
    bool inside = true;
    for (int a = 0; a < n && inside; ++a)
      if (chart.params[i][static_cast<std::size_t>(a)] < box_corner[static_cast<std::size_t>(a)] ||
          chart.params[i][static_cast<std::size_t>(a)] > box_corner[static_cast<std::size_t>(a)] + box_side)
        inside = false;
    if (inside) out.image_mass += space.weight(i);
  }
  return out;
}

const CoefficientEntry* CoefficientField::find(std::uint32_t cube) const {
  for (const CoefficientEntry& e : entries)
    if (e.cube == cube) return &e;
  return nullptr;
}

CoefficientField compute_field(const MetricSpaceSample& space, const CubeTree& tree,
                               const std::string& kind, const FieldConfig& config,
                               const Chart* chart) {
  CoefficientField field;
  field.kind = kind;
  const double floor_r = kScaleFloorFactor * space.min_spacing();
  for (const Cube& q : tree.cubes) {
    if (q.level < config.level_min || q.level > config.level_max) continue;
    CoefficientEntry e;
    e.cube = q.id;
    e.level = q.level;
    e.side = tree.side(q);
    const double r = config.ball_scale * e.side;
    if (r < floor_r) {
      e.unreliable = true;
      field.entries.push_back(std::move(e));
      continue;
    }
    if (kind == "osc" || kind == "osc_E") {
      e.value = osc_coefficient(space, q.center, r, config.osc,
                                kind == "osc_E" ? config.subset : nullptr);
    } else if (kind == "alpha" || kind == "alpha_E") {
      const AlphaResult a = alpha_coefficient(space, q.center, r, config.alpha,
                                              kind == "alpha_E" ? config.subset : nullptr);
      e.value = a.value;
      e.c = a.c;
      e.norm_tag = a.norm_tag;
      e.plane_id = a.plane_id;
      e.residual = a.lp_residual;
    } else if (kind == "xi") {
      if (!chart) throw std::domain_error("xi field requires a chart");
      const XiResult x = xi_coefficient(space, *chart, q.center, r);
      e.value = x.value;
      e.norm_tag = x.norm.tag();
    } else if (kind == "md") {
      if (!chart) throw std::domain_error("md field requires a chart");
      // Bounding box of the member parameters.
      const int n = chart->n;
      std::vector<double> lo(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
      double span = 0.0;
      for (std::size_t i : q.members)
        for (int a = 0; a < n; ++a)
          lo[static_cast<std::size_t>(a)] =
              std::min(lo[static_cast<std::size_t>(a)], chart->params[i][static_cast<std::size_t>(a)]);
      for (std::size_t i : q.members)
        for (int a = 0; a < n; ++a)
          span = std::max(span, chart->params[i][static_cast<std::size_t>(a)] -
                                    lo[static_cast<std::size_t>(a)]);
      if (span <= 0.0) span = e.side;
      const MdResult mdr = md_coefficient(space, *chart, lo, span);
      e.value = mdr.value;
      e.norm_tag = mdr.norm.tag();
    } else {
      throw std::domain_error("unknown coefficient kind: " + kind);
    }
    field.entries.push_back(std::move(e));
  }
  return field;
}

void export_field_csv(const CoefficientField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "cube,level,side,value,c,norm,plane,residual,unreliable\n";
  for (const CoefficientEntry& e : field.entries)
    out << e.cube << ',' << e.level << ',' << e.side << ',' << e.value << ',' << e.c << ','
        << e.norm_tag << ',' << e.plane_id << ',' << e.residual << ',' << (e.unreliable ? 1 : 0)
        << '\n';
}

void export_field_json(const CoefficientField& field, const std::string& path) {
  nlohmann::json j;
  j["kind"] = field.kind;
  j["entries"] = nlohmann::json::array();
  for (const CoefficientEntry& e : field.entries)
    j["entries"].push_back({{"cube", e.cube},
                            {"level", e.level},
                            {"side", e.side},
                            {"value", e.value},
                            {"c", e.c},
                            {"norm", e.norm_tag},
                            {"plane", e.plane_id},
                            {"residual", e.residual},
                            {"unreliable", e.unreliable}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mmflat
