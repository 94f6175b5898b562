#include "mmflat/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace mmflat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uncapacitated min-cost transshipment solved by successive shortest paths
/// with node potentials (all arc costs nonnegative, so plain Dijkstra works).
class Transshipment {
 public:
  explicit Transshipment(std::size_t n) : head_(n), excess_(n, 0.0), pi_(n, 0.0) {}

  void add_edge(int u, int v, double cost) {
    head_[u].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({v, cost, kInf, 0.0});
    head_[v].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({u, -cost, 0.0, 0.0});
  }

  void set_supply(int v, double b) { excess_[v] = b; }

  /// Returns total cost. Throws when some surplus cannot reach any deficit.
  double run(double tol) {
    const int n = static_cast<int>(head_.size());
    std::vector<double> dist(n);
    std::vector<int> prev_arc(n);
    std::vector<char> done(n);
    using Item = std::pair<double, int>;
    while (true) {
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      bool any_excess = false;
      for (int v = 0; v < n; ++v)
        if (excess_[v] > tol) {
          dist[v] = 0.0;
          prev_arc[v] = -1;
          pq.push({0.0, v});
          any_excess = true;
        }
      if (!any_excess) break;
      int sink = -1;
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = 1;
        if (excess_[u] < -tol) {
          sink = u;
          break;
        }
        for (int e : head_[u]) {
          const Arc& a = arcs_[e];
          const double residual = a.cap - a.flow;
          if (residual <= tol) continue;
          const double nd = d + a.cost + pi_[u] - pi_[a.to];
          if (nd < dist[a.to] - 1e-15) {
            dist[a.to] = nd;
            prev_arc[a.to] = e;
            pq.push({nd, a.to});
          }
        }
      }
      if (sink < 0) throw std::runtime_error("transport network is disconnected");
      const double dt = dist[sink];
      for (int v = 0; v < n; ++v) pi_[v] += std::min(dist[v], dt);
      // Trace back, find bottleneck, augment.
      double amt = -excess_[sink];
      for (int v = sink; prev_arc[v] >= 0;) {
        const Arc& a = arcs_[prev_arc[v]];
        amt = std::min(amt, a.cap - a.flow);
        v = arcs_[prev_arc[v] ^ 1].to;
      }
      int source = sink;
      while (prev_arc[source] >= 0) source = arcs_[prev_arc[source] ^ 1].to;
      amt = std::min(amt, excess_[source]);
      for (int v = sink; prev_arc[v] >= 0;) {
        arcs_[prev_arc[v]].flow += amt;
        arcs_[prev_arc[v] ^ 1].flow -= amt;
        v = arcs_[prev_arc[v] ^ 1].to;
      }
      excess_[source] -= amt;
      excess_[sink] += amt;
    }
    double cost = 0.0;
    for (std::size_t e = 0; e < arcs_.size(); e += 2) cost += arcs_[e].cost * arcs_[e].flow;
    return cost;
  }

  double potential(int v) const { return pi_[v]; }

 private:
  struct Arc {
    int to;
    double cost;
    double cap;
    double flow;
  };
  std::vector<std::vector<int>> head_;
  std::vector<Arc> arcs_;
  std::vector<double> excess_;
  std::vector<double> pi_;
};

std::set<std::pair<std::size_t, std::size_t>> knn_edges(const TransportInstance& inst,
                                                        std::size_t k) {
  const std::size_t n = inst.size();
  std::set<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::pair<double, std::size_t>> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = {i == j ? kInf : inst.metric(i, j), j};
    const std::size_t take = std::min(k, n - 1);
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(take), row.end());
    for (std::size_t t = 0; t < take; ++t)
      edges.insert({std::min(i, row[t].second), std::max(i, row[t].second)});
  }
  return edges;
}

DualSolution solve_on_edges(const TransportInstance& inst,
                            const std::set<std::pair<std::size_t, std::size_t>>& edges) {
  const std::size_t n = inst.size();
  const int ground = static_cast<int>(n);
  Transshipment net(n + 1);
  for (const auto& [i, j] : edges) {
    const double d = inst.metric(i, j);
    net.add_edge(static_cast<int>(i), static_cast<int>(j), d);
    net.add_edge(static_cast<int>(j), static_cast<int>(i), d);
  }
  double total = 0.0;
  double imbalance = 0.0;
  bool any_ground = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = inst.mu[i] - inst.nu[i];
    net.set_supply(static_cast<int>(i), b);
    imbalance += b;
    total += std::abs(inst.mu[i]) + std::abs(inst.nu[i]);
    if (std::isfinite(inst.cap[i])) {
      net.add_edge(static_cast<int>(i), ground, inst.cap[i]);
      net.add_edge(ground, static_cast<int>(i), inst.cap[i]);
      any_ground = true;
    }
  }
  if (!any_ground && std::abs(imbalance) > 1e-12 * std::max(1.0, total))
    throw std::runtime_error("unbalanced masses with no finite cap");
  net.set_supply(ground, -imbalance);
  const double tol = 1e-13 * std::max(1.0, total);
  DualSolution out;
  out.primal_value = net.run(tol);
  out.potential.resize(n);
  const double pg = net.potential(ground);
  out.value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.potential[i] = pg - net.potential(static_cast<int>(i));
    out.value += out.potential[i] * (inst.mu[i] - inst.nu[i]);
  }
  return out;
}

void fill_residuals(const TransportInstance& inst, DualSolution& sol) {
  const std::size_t n = inst.size();
  sol.lip_residual = 0.0;
  sol.cap_residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(inst.cap[i]))
      sol.cap_residual = std::max(sol.cap_residual, std::abs(sol.potential[i]) - inst.cap[i]);
    for (std::size_t j = i + 1; j < n; ++j)
      sol.lip_residual = std::max(
          sol.lip_residual, std::abs(sol.potential[i] - sol.potential[j]) - inst.metric(i, j));
  }
}

}  // namespace

DualSolution solve_capped_dual(const TransportInstance& inst, const SolveOptions& opts,
                               EdgeSet* edge_cache) {
  const std::size_t n = inst.size();
  if (inst.nu.size() != n || inst.cap.size() != n)
    throw std::domain_error("mu/nu/cap size mismatch");
  if (n == 0) return {};
  EdgeSet edges;
  if (opts.sparse) {
    edges = edge_cache && !edge_cache->empty() ? *edge_cache : knn_edges(inst, opts.knn);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) edges.insert({i, j});
  }
  DualSolution sol;
  for (std::size_t round = 0;; ++round) {
    if (round >= opts.max_rounds)
      throw std::runtime_error("constraint generation did not converge");
    sol = solve_on_edges(inst, edges);
    if (!opts.sparse) break;
    // Add every pair whose Lipschitz constraint the sparse optimum violates.
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(sol.potential[i]));
    const double viol_tol = 1e-11 * std::max(1.0, scale);
    std::size_t added = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (edges.count({i, j})) continue;
        if (std::abs(sol.potential[i] - sol.potential[j]) > inst.metric(i, j) + viol_tol) {
          edges.insert({i, j});
          ++added;
        }
      }
    if (added == 0) break;
  }
  if (opts.sparse && edge_cache) *edge_cache = std::move(edges);
  fill_residuals(inst, sol);
  return sol;
}

double dist_ball(const TransportInstance& inst_uncapped, const std::vector<double>& center_dist,
                 double r, const SolveOptions& opts, EdgeSet* edge_cache) {
  const std::size_t n = inst_uncapped.size();
  if (center_dist.size() != n) throw std::domain_error("center_dist size mismatch");
  if (!(r > 0.0)) throw std::domain_error("radius must be positive");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (r - center_dist[i] > 0.0) keep.push_back(i);
  if (keep.empty()) return 0.0;
  TransportInstance sub;
  sub.metric = [metric = inst_uncapped.metric, keep](std::size_t a, std::size_t b) {
    return metric(keep[a], keep[b]);
  };
  for (std::size_t i : keep) {
    sub.mu.push_back(inst_uncapped.mu[i]);
    sub.nu.push_back(inst_uncapped.nu[i]);
    sub.cap.push_back(r - center_dist[i]);
  }
  return solve_capped_dual(sub, opts, edge_cache).value;
}

double tilde_dist(const TransportInstance& inst_uncapped, const SolveOptions& opts) {
  const std::size_t n = inst_uncapped.size();
  double D = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) D = std::max(D, inst_uncapped.metric(i, j));
  TransportInstance capped = inst_uncapped;
  capped.cap.assign(n, D);
  return solve_capped_dual(capped, opts).value;
}

namespace {

/// Union-find with rollback (no path compression) for tree enumeration.
class Dsu {
 public:
  explicit Dsu(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }
  std::size_t find(std::size_t v) const {
    while (parent_[v] != v) v = parent_[v];
    return v;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    trail_.push_back(b);
    return true;
  }
  void rollback() {
    const std::size_t b = trail_.back();
    trail_.pop_back();
    size_[parent_[b]] -= size_[b];
    parent_[b] = b;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> trail_;
};

struct TreeEnumerator {
  std::size_t nodes;
  const std::vector<std::pair<std::size_t, std::size_t>>& all_edges;
  const std::vector<double>& supply;       // per node, sums to ~0
  const std::vector<double>& edge_cost;
  double tol;
  double best = kInf;
  Dsu dsu;
  std::vector<std::size_t> chosen;

  TreeEnumerator(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& e,
                 const std::vector<double>& b, const std::vector<double>& c, double t)
      : nodes(n), all_edges(e), supply(b), edge_cost(c), tol(t), dsu(n) {}

  void recurse(std::size_t next_edge, std::size_t picked) {
    if (picked == nodes - 1) {
      evaluate();
      return;
    }
    if (all_edges.size() - next_edge < nodes - 1 - picked) return;
    recurse(next_edge + 1, picked);
    const auto& [u, v] = all_edges[next_edge];
    if (dsu.unite(u, v)) {
      chosen.push_back(next_edge);
      recurse(next_edge + 1, picked + 1);
      chosen.pop_back();
      dsu.rollback();
    }
  }

  void evaluate() {
    // Solve the unique tree flow by leaf stripping; reject negative flows.
    std::vector<double> rem = supply;
    std::vector<std::vector<std::size_t>> adj(nodes);
    for (std::size_t e : chosen) {
      adj[all_edges[e].first].push_back(e);
      adj[all_edges[e].second].push_back(e);
    }
    std::vector<char> removed_edge(all_edges.size(), 0);
    std::vector<int> degree(nodes, 0);
    for (std::size_t v = 0; v < nodes; ++v) degree[v] = static_cast<int>(adj[v].size());
    std::vector<std::size_t> leaves;
    for (std::size_t v = 0; v < nodes; ++v)
      if (degree[v] == 1) leaves.push_back(v);
    double cost = 0.0;
    while (!leaves.empty()) {
      const std::size_t v = leaves.back();
      leaves.pop_back();
      std::size_t e = all_edges.size();
      for (std::size_t cand : adj[v])
        if (!removed_edge[cand]) e = cand;
      if (e == all_edges.size()) continue;  // last node
      const auto& [a, b] = all_edges[e];
      // Edges are oriented source -> sink; flow equals what v still owes.
      const double flow = (v == a) ? rem[v] : -rem[v];
      if (flow < -tol) return;
      cost += flow * edge_cost[e];
      const std::size_t other = (v == a) ? b : a;
      rem[other] += rem[v];
      rem[v] = 0.0;
      removed_edge[e] = 1;
      if (--degree[other] == 1) leaves.push_back(other);
      degree[v] = 0;
    }
    best = std::min(best, cost);
  }
};

}  // namespace

double w1_bruteforce_oracle(const TransportInstance& inst) {
  const std::size_t n = inst.size();
  double total = 0.0;
  double imbalance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += inst.mu[i] + inst.nu[i];
    imbalance += inst.mu[i] - inst.nu[i];
  }
  const double tol = 1e-11 * std::max(1.0, total);
  if (std::abs(imbalance) > tol) throw std::domain_error("oracle requires balanced masses");
  std::vector<std::size_t> sources, sinks;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = inst.mu[i] - inst.nu[i];
    if (b > tol) sources.push_back(i);
    else if (b < -tol) sinks.push_back(i);
  }
  if (sources.empty()) return 0.0;
  const std::size_t m = sources.size(), k = sinks.size();
  if (std::pow(static_cast<double>(m), static_cast<double>(k - 1)) *
          std::pow(static_cast<double>(k), static_cast<double>(m - 1)) >
      5e6)
    throw std::domain_error("support too large for the exhaustive oracle");
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (source node, sink node) local ids
  std::vector<double> costs;
  for (std::size_t s = 0; s < m; ++s)
    for (std::size_t t = 0; t < k; ++t) {
      edges.push_back({s, m + t});
      costs.push_back(inst.metric(sources[s], sinks[t]));
    }
  std::vector<double> b(m + k);
  for (std::size_t s = 0; s < m; ++s) b[s] = inst.mu[sources[s]] - inst.nu[sources[s]];
  for (std::size_t t = 0; t < k; ++t) b[m + t] = inst.mu[sinks[t]] - inst.nu[sinks[t]];
  TreeEnumerator en(m + k, edges, b, costs, tol);
  en.recurse(0, 0);
  if (!std::isfinite(en.best)) throw std::runtime_error("no feasible transport tree found");
  return en.best;
}

void dump_instance(const TransportInstance& inst, const std::string& path) {
  nlohmann::json j;
  j["support"] = nlohmann::json::array();
  for (std::size_t i = 0; i < inst.size(); ++i)
    j["support"].push_back({{"id", i},
                            {"mass_mu", inst.mu[i]},
                            {"mass_nu", inst.nu[i]},
                            {"cap", std::isfinite(inst.cap[i]) ? inst.cap[i] : -1.0}});
  j["edges"] = nlohmann::json::array();
  for (std::size_t i = 0; i < inst.size(); ++i)
    for (std::size_t k = i + 1; k < inst.size(); ++k)
      j["edges"].push_back({{"i", i}, {"j", k}, {"d", inst.metric(i, k)}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mmflat
