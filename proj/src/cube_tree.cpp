#include "mmflat/cube_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mmflat {

using nlohmann::json;

double NetHierarchy::radius(int k) const { return std::pow(rho, k); }

namespace {

// Greedy farthest-point completion of `chosen` to a maximal radius-net.
// `priority` points are inserted first (in order) when separation allows.
void complete_net(const MetricSpaceSample& space, double radius,
                  std::vector<std::size_t>& chosen,
                  const std::vector<std::size_t>& priority) {
  const std::size_t n = space.size();
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  for (std::size_t c : chosen)
    for (std::size_t i = 0; i < n; ++i) mind[i] = std::min(mind[i], space.distance(c, i));
  auto insert = [&](std::size_t p) {
    chosen.push_back(p);
    for (std::size_t i = 0; i < n; ++i) mind[i] = std::min(mind[i], space.distance(p, i));
  };
  if (chosen.empty()) {
    if (!priority.empty())
      insert(priority.front());
    else
      insert(0);
  }
  for (std::size_t p : priority)
    if (mind[p] > radius) insert(p);
  for (;;) {
    std::size_t best = n;
    double bestd = radius;
    for (std::size_t i = 0; i < n; ++i)
      if (mind[i] > bestd) {
        bestd = mind[i];
        best = i;
      }
    if (best == n) break;
    insert(best);
  }
  std::sort(chosen.begin(), chosen.end());
}

}  // namespace

NetHierarchy build_net_hierarchy(const MetricSpaceSample& space, double rho, int k_min,
                                 int k_max, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
  if (k_min > k_max) throw std::domain_error("k_min > k_max");
  NetHierarchy h;
  h.rho = rho;
  h.k_min = k_min;
  h.k_max = k_max;
  std::vector<std::size_t> priority;
  if (seed != 0) priority.push_back(seed % space.size());
  std::vector<std::size_t> net;
  for (int k = k_min; k <= k_max; ++k) {
    complete_net(space, h.radius(k), net, priority);
    h.levels.push_back(net);
  }
  return h;
}

void verify_net_hierarchy(const MetricSpaceSample& space, const NetHierarchy& h) {
  for (int k = h.k_min; k <= h.k_max; ++k) {
    const auto& net = h.levels[k - h.k_min];
    const double r = h.radius(k);
    for (std::size_t a = 0; a < net.size(); ++a)
      for (std::size_t b = a + 1; b < net.size(); ++b)
        if (space.distance(net[a], net[b]) <= r)
          throw std::domain_error("net separation violated at level " + std::to_string(k));
    for (std::size_t i = 0; i < space.size(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c : net) d = std::min(d, space.distance(c, i));
      if (d > r) throw std::domain_error("net maximality violated at level " + std::to_string(k));
    }
    if (k > h.k_min) {
      const auto& coarse = h.levels[k - h.k_min - 1];
      if (!std::includes(net.begin(), net.end(), coarse.begin(), coarse.end()))
        throw std::domain_error("nets not nested at level " + std::to_string(k));
    }
  }
}

CubeTree build_christ_david(const MetricSpaceSample& space, const NetHierarchy& hierarchy,
                            double c0) {
  if (!(c0 > 0.0 && c0 < 0.5)) throw std::domain_error("c0 must lie in (0, 1/2)");
  CubeTree tree;
  tree.rho = hierarchy.rho;
  tree.c0 = c0;
  tree.k_min = hierarchy.k_min;
  tree.k_max = hierarchy.k_max;
  const std::size_t n = space.size();
  const std::size_t levels = hierarchy.levels.size();

  // Deterministic nearest net point (smallest index on ties).
  auto nearest_in = [&](const std::vector<std::size_t>& net, std::size_t p) {
    std::size_t best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < net.size(); ++c) {
      const double d = space.distance(net[c], p);
      if (d < bestd - 1e-15 || (d <= bestd + 1e-15 && net[c] < net[best])) {
        bestd = d;
        best = c;
      }
    }
    return best;
  };

  // One cube per net point; the parent cube is the one centered at the nearest
  // coarser net point (a net point that is itself coarse keeps its own chain).
  std::vector<std::vector<std::uint32_t>> cube_of_center(levels);
  for (std::size_t li = 0; li < levels; ++li) {
    tree.level_start.push_back(static_cast<std::uint32_t>(tree.cubes.size()));
    const auto& net = hierarchy.levels[li];
    const std::uint32_t base = static_cast<std::uint32_t>(tree.cubes.size());
    cube_of_center[li].resize(net.size());
    for (std::size_t c = 0; c < net.size(); ++c) {
      Cube q;
      q.id = base + static_cast<std::uint32_t>(c);
      q.level = hierarchy.k_min + static_cast<int>(li);
      q.center = net[c];
      if (li == 0) {
        q.parent = -1;
      } else {
        const std::size_t pc = nearest_in(hierarchy.levels[li - 1], net[c]);
        q.parent = static_cast<std::int64_t>(cube_of_center[li - 1][pc]);
      }
      cube_of_center[li][c] = q.id;
      tree.cubes.push_back(std::move(q));
    }
  }
  tree.level_start.push_back(static_cast<std::uint32_t>(tree.cubes.size()));
  for (const Cube& q : tree.cubes)
    if (q.parent >= 0) tree.cubes[q.parent].children.push_back(q.id);

  // Assign each point to its nearest finest-level center, then propagate the
  // membership up the ancestor chain. This keeps every inner ball inside its
  // own cube: ancestor hops shrink geometrically, so a point close to a
  // level-k center cannot end up under a different level-k ancestor.
  const auto& leaf_net = hierarchy.levels.back();
  for (std::size_t p = 0; p < n; ++p) {
    std::int64_t id = cube_of_center.back()[nearest_in(leaf_net, p)];
    while (id >= 0) {
      tree.cubes[id].members.push_back(p);
      id = tree.cubes[id].parent;
    }
  }
  for (Cube& q : tree.cubes) std::sort(q.members.begin(), q.members.end());
  return tree;
}

CubeTree build_default_tree(const MetricSpaceSample& space, double rho, double c0,
                            std::uint64_t seed) {
  const double diam = space.diameter();
  const double spacing = space.min_spacing();
  int k_min = static_cast<int>(std::floor(std::log(std::max(diam, 1e-300)) / std::log(rho)));
  while (std::pow(rho, k_min) < diam) --k_min;
  int k_max = k_min;
  if (spacing > 0.0)
    while (std::pow(rho, k_max + 1) >= 2.0 * spacing) ++k_max;
  auto h = build_net_hierarchy(space, rho, k_min, k_max, seed);
  return build_christ_david(space, h, c0);
}

std::vector<std::uint32_t> CubeTree::level_cubes(int k) const {
  std::vector<std::uint32_t> out;
  const std::size_t idx = static_cast<std::size_t>(k - k_min);
  for (std::uint32_t id = level_start[idx]; id < level_start[idx + 1]; ++id) out.push_back(id);
  return out;
}

std::vector<std::uint32_t> CubeTree::descendants(std::uint32_t root) const {
  std::vector<std::uint32_t> out, stack{root};
  while (!stack.empty()) {
    const std::uint32_t id = stack.back();
    stack.pop_back();
    out.push_back(id);
    for (std::uint32_t c : cubes[id].children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

AxiomReport verify_cube_axioms(const MetricSpaceSample& space, const CubeTree& tree) {
  AxiomReport rep;
  const std::size_t n = space.size();
  const int levels = tree.k_max - tree.k_min + 1;
  std::vector<std::uint32_t> owner(n);
  for (int li = 0; li < levels; ++li) {
    std::vector<int> seen(n, 0);
    for (std::uint32_t id = tree.level_start[li]; id < tree.level_start[li + 1]; ++id) {
      const Cube& q = tree.cubes[id];
      for (std::size_t p : q.members) {
        ++seen[p];
        owner[p] = id;
      }
      // nesting: members contained in the parent's member set
      if (q.parent >= 0) {
        const auto& pm = tree.cubes[q.parent].members;
        if (!std::includes(pm.begin(), pm.end(), q.members.begin(), q.members.end())) {
          rep.nesting_ok = false;
          rep.offending_cubes.push_back(id);
        }
      }
      // sandwich
      const double side = tree.side(q);
      for (std::size_t p : q.members)
        if (space.distance(q.center, p) > side) {
          rep.sandwich_ok = false;
          rep.offending_cubes.push_back(id);
          break;
        }
    }
    for (std::size_t p = 0; p < n; ++p)
      if (seen[p] != 1) rep.cover_ok = false;
    // inner-ball half of the sandwich
    for (std::uint32_t id = tree.level_start[li]; id < tree.level_start[li + 1]; ++id) {
      const Cube& q = tree.cubes[id];
      const double inner = tree.c0 * tree.side(q);
      for (std::size_t p = 0; p < n; ++p)
        if (space.distance(q.center, p) <= inner && owner[p] != id) {
          rep.sandwich_ok = false;
          rep.offending_cubes.push_back(id);
          break;
        }
    }
  }
  // small-boundary profile, report only
  for (double eta : {0.1, 0.01}) {
    double total_ratio = 0.0;
    std::size_t counted = 0;
    for (int li = 1; li < levels; ++li) {
      const double rk = std::pow(tree.rho, tree.k_min + li);
      std::vector<std::uint32_t> owner_k(n);
      for (std::uint32_t id = tree.level_start[li]; id < tree.level_start[li + 1]; ++id)
        for (std::size_t p : tree.cubes[id].members) owner_k[p] = id;
      for (std::uint32_t id = tree.level_start[li]; id < tree.level_start[li + 1]; ++id) {
        const Cube& q = tree.cubes[id];
        if (q.members.size() == n) continue;
        double boundary_mass = 0.0;
        for (std::size_t p : q.members) {
          double d = std::numeric_limits<double>::infinity();
          for (std::size_t o = 0; o < n; ++o)
            if (owner_k[o] != id) d = std::min(d, space.distance(p, o));
          if (d <= eta * rk) boundary_mass += space.weight(p);
        }
        total_ratio += boundary_mass / std::pow(tree.side(q), space.dim_n());
        ++counted;
      }
    }
    rep.small_boundary_profile.emplace_back(eta, counted ? total_ratio / counted : 0.0);
  }
  std::sort(rep.offending_cubes.begin(), rep.offending_cubes.end());
  rep.offending_cubes.erase(
      std::unique(rep.offending_cubes.begin(), rep.offending_cubes.end()),
      rep.offending_cubes.end());
  return rep;
}

MultiResCoverage locate_covering_cube(const MetricSpaceSample& space,
                                      const std::vector<CubeTree>& trees, std::size_t x,
                                      double t) {
  MultiResCoverage res;
  for (std::size_t ti = 0; ti < trees.size(); ++ti) {
    const CubeTree& tree = trees[ti];
    for (int k = tree.k_min; k <= tree.k_max; ++k) {
      const double side = 5.0 * std::pow(tree.rho, k);
      if (side < t || side > 5.0 / (tree.rho * tree.c0) * t) continue;
      const std::size_t li = static_cast<std::size_t>(k - tree.k_min);
      for (std::uint32_t id = tree.level_start[li]; id < tree.level_start[li + 1]; ++id) {
        const Cube& q = tree.cubes[id];
        if (space.distance(x, q.center) + t <= 0.5 * tree.c0 * side) {
          res.tree_index = ti;
          res.cube_id = id;
          res.covered = true;
          return res;
        }
      }
    }
  }
  return res;
}

MultiResSystems build_multires_systems(const MetricSpaceSample& space, double rho, double c0,
                                       std::uint64_t seed, std::size_t audit_pairs) {
  MultiResSystems sys;
  const double diam = space.diameter();
  const double spacing = space.min_spacing();
  // audit sample: deterministic (x, t) pairs across the resolvable band
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  const double t_lo = std::max(2.0 * spacing, diam * 1e-6);
  const double t_hi = diam / 4.0;
  std::uniform_real_distribution<double> logt(std::log(t_lo), std::log(std::max(t_hi, t_lo * 1.0001)));
  std::vector<std::pair<std::size_t, double>> pairs;
  for (std::size_t i = 0; i < audit_pairs; ++i)
    pairs.emplace_back(pick(rng), std::exp(logt(rng)));

  // doubling-implied cap on the number of systems
  RegularityReport reg;
  {
    std::vector<std::size_t> centers;
    for (std::size_t i = 0; i < std::min<std::size_t>(space.size(), 50); ++i)
      centers.push_back(i * std::max<std::size_t>(1, space.size() / 50));
    std::vector<double> scales{t_lo, std::sqrt(t_lo * t_hi), t_hi};
    reg = ahlfors_scan(space, space.dim_n(), centers, scales);
  }
  const double cd = std::max(2.0, reg.doubling_estimate);
  sys.doubling_bound = static_cast<std::size_t>(
      std::min(1e6, std::pow(cd, std::ceil(std::log2(8.0 / (c0 * rho))))));

  // first tree, then targeted extra trees whose nets prioritize centers of
  // still-uncovered balls at the level bracket that would cover them
  const double spacing_floor = spacing > 0.0 ? 2.0 * spacing : 0.0;
  int k_min = 0;
  while (std::pow(rho, k_min) < diam) --k_min;
  // Coarse enough that a root centered at any point absorbs B(x, t_hi) for
  // every x: the largest audited balls stay within the innermost root ball.
  while (0.5 * c0 * 5.0 * std::pow(rho, k_min) < diam + t_hi) --k_min;
  int k_max = k_min;
  if (spacing_floor > 0.0)
    while (std::pow(rho, k_max + 1) >= spacing_floor) ++k_max;

  // Deterministic worst-case audit on top of the random draws. For a scale t
  // the coarsest admissible level k satisfies ell(k) <= (5/(rho c0)) t, and the
  // binding case is t just below (c0/5) ell(k-1), where level k is forced and
  // the center-proximity requirement d <= (c0/2) ell(k) - t is tightest. Seeding
  // stragglers against these scales covers every intermediate t as well.
  const std::size_t stride = std::max<std::size_t>(1, space.size() / 2000);
  for (std::size_t i = 0; i < space.size(); i += stride)
    for (int k = k_min; k <= k_max; ++k) {
      const double t = 0.999 * c0 * std::pow(rho, k);  // just below (c0/5) ell(k-1)
      if (t >= t_lo && t <= t_hi) pairs.emplace_back(i, t);
    }

  auto build_with_priority = [&](const std::map<int, std::vector<std::size_t>>& prio,
                                 const std::vector<std::size_t>& global) {
    NetHierarchy h;
    h.rho = rho;
    h.k_min = k_min;
    h.k_max = k_max;
    std::vector<std::size_t> net;
    for (int k = k_min; k <= k_max; ++k) {
      std::vector<std::size_t> p = global;
      auto it = prio.find(k);
      if (it != prio.end()) p.insert(p.end(), it->second.begin(), it->second.end());
      complete_net(space, h.radius(k), net, p);
      h.levels.push_back(net);
    }
    return build_christ_david(space, h, c0);
  };

  sys.trees.push_back(build_with_priority({}, {}));
  const std::size_t max_trees = 64;
  std::size_t rotation = 0;
  for (;;) {
    std::vector<std::pair<std::size_t, double>> uncovered;
    for (const auto& pr : pairs)
      if (!locate_covering_cube(space, sys.trees, pr.first, pr.second).covered)
        uncovered.push_back(pr);
    if (uncovered.empty()) break;
    if (sys.trees.size() >= max_trees)
      throw std::runtime_error("multires coverage failed after max iterations (" +
                               std::to_string(uncovered.size()) + " pairs uncovered)");
    std::map<int, std::vector<std::size_t>> prio;
    std::vector<std::size_t> global;
    for (const auto& [x, t] : uncovered) {
      global.push_back(x);
      for (int k = k_min; k <= k_max; ++k) {
        const double side = 5.0 * std::pow(rho, k);
        if (side >= t && side <= 5.0 / (rho * c0) * t && t <= 0.5 * c0 * side)
          prio[k].push_back(x);
      }
    }
    std::sort(global.begin(), global.end());
    global.erase(std::unique(global.begin(), global.end()), global.end());
    std::rotate(global.begin(),
                global.begin() + (rotation % std::max<std::size_t>(1, global.size())),
                global.end());
    for (auto& [k, v] : prio) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      std::rotate(v.begin(), v.begin() + (rotation % std::max<std::size_t>(1, v.size())),
                  v.end());
    }
    ++rotation;
    sys.trees.push_back(build_with_priority(prio, global));
  }
  return sys;
}

std::string tree_to_json(const CubeTree& tree) {
  json j;
  j["rho"] = tree.rho;
  j["c0"] = tree.c0;
  j["k_min"] = tree.k_min;
  j["k_max"] = tree.k_max;
  j["cubes"] = json::array();
  for (const Cube& q : tree.cubes) {
    json c;
    c["id"] = q.id;
    c["level"] = q.level;
    c["center"] = q.center;
    c["parent"] = q.parent;
    c["members"] = q.members;
    j["cubes"].push_back(std::move(c));
  }
  return j.dump(2);
}

void save_tree(const CubeTree& tree, const std::string& json_path) {
  std::ofstream f(json_path);
  if (!f) throw std::runtime_error("cannot open " + json_path);
  f << tree_to_json(tree) << "\n";
}

CubeTree load_tree(const std::string& json_path) {
  std::ifstream f(json_path);
  if (!f) throw std::runtime_error("cannot open " + json_path);
  json j;
  f >> j;
  CubeTree tree;
  tree.rho = j.at("rho").get<double>();
  tree.c0 = j.at("c0").get<double>();
  tree.k_min = j.at("k_min").get<int>();
  tree.k_max = j.at("k_max").get<int>();
  int last_level = tree.k_min - 1;
  for (const auto& c : j.at("cubes")) {
    Cube q;
    q.id = c.at("id").get<std::uint32_t>();
    q.level = c.at("level").get<int>();
    q.center = c.at("center").get<std::size_t>();
    q.parent = c.at("parent").get<std::int64_t>();
    q.members = c.at("members").get<std::vector<std::size_t>>();
    while (last_level < q.level) {
      tree.level_start.push_back(static_cast<std::uint32_t>(tree.cubes.size()));
      ++last_level;
    }
    if (q.parent >= 0) tree.cubes[q.parent].children.push_back(q.id);
    tree.cubes.push_back(std::move(q));
  }
  tree.level_start.push_back(static_cast<std::uint32_t>(tree.cubes.size()));
  return tree;
}

}  // namespace mmflat
