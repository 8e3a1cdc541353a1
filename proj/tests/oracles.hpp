// Independent reference implementations used to compute expected values.
// Everything here deliberately avoids the library's own code paths: matrix
// Floyd-Warshall instead of per-source Dijkstra, edge-list Bellman-Ford,
// exhaustive enumeration instead of greedy construction.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "hubpir/graph.hpp"

namespace oracle {

constexpr std::uint64_t kInf = std::numeric_limits<std::uint64_t>::max();

// O(n^3) all-pairs distances from the perturbed costs.
inline std::vector<std::vector<std::uint64_t>> floyd_warshall(const hubpir::Graph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<std::uint64_t>> d(n, std::vector<std::uint64_t>(n, kInf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (const auto& e : g.edges()) d[e.src][e.dst] = std::min(d[e.src][e.dst], e.perturbed_cost);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i][k] == kInf) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (d[k][j] == kInf) continue;
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
            }
        }
    return d;
}

// Single-source Bellman-Ford over the perturbed costs.
inline std::vector<std::uint64_t> bellman_ford(const hubpir::Graph& g, hubpir::NodeId src) {
    const std::size_t n = g.node_count();
    std::vector<std::uint64_t> d(n, kInf);
    d[src] = 0;
    for (std::size_t round = 0; round + 1 < n; ++round) {
        bool changed = false;
        for (const auto& e : g.edges()) {
            if (d[e.src] == kInf) continue;
            if (d[e.src] + e.perturbed_cost < d[e.dst]) {
                d[e.dst] = d[e.src] + e.perturbed_cost;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return d;
}

// Unweighted hop distances from src.
inline std::vector<std::uint32_t> bfs_hops(const hubpir::Graph& g, hubpir::NodeId src) {
    const std::size_t n = g.node_count();
    std::vector<std::uint32_t> d(n, 0xffffffffu);
    std::vector<std::vector<hubpir::NodeId>> adj(n);
    for (const auto& e : g.edges()) adj[e.src].push_back(e.dst);
    std::queue<hubpir::NodeId> q;
    q.push(src);
    d[src] = 0;
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (auto v : adj[u])
            if (d[v] == 0xffffffffu) {
                d[v] = d[u] + 1;
                q.push(v);
            }
    }
    return d;
}

inline std::uint32_t bfs_hop_diameter(const hubpir::Graph& g) {
    std::uint32_t best = 0;
    for (hubpir::NodeId s = 0; s < g.node_count(); ++s)
        for (std::uint32_t d : bfs_hops(g, s))
            if (d != 0xffffffffu) best = std::max(best, d);
    return best;
}

// Counts distinct minimum-perturbed-cost paths s -> t by depth-first walk.
// Only usable on small graphs.
inline std::size_t count_min_cost_paths(const hubpir::Graph& g, hubpir::NodeId s,
                                        hubpir::NodeId t, std::uint64_t min_cost) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<std::pair<hubpir::NodeId, std::uint64_t>>> adj(n);
    for (const auto& e : g.edges()) adj[e.src].push_back({e.dst, e.perturbed_cost});
    std::size_t count = 0;
    std::vector<bool> on_path(n, false);
    // Cost never exceeds min_cost on a useful prefix because edge costs
    // are positive.
    std::function<void(hubpir::NodeId, std::uint64_t)> walk =
        [&](hubpir::NodeId u, std::uint64_t cost) {
            if (cost > min_cost) return;
            if (u == t) {
                if (cost == min_cost) ++count;
                return;
            }
            on_path[u] = true;
            for (const auto& [v, w] : adj[u])
                if (!on_path[v]) walk(v, cost + w);
            on_path[u] = false;
        };
    walk(s, 0);
    return count;
}

// Exact minimum hitting set by subset enumeration over the nodes that
// appear in at least one path. Exponential; inputs must stay tiny.
inline std::size_t min_hitting_set_size(const std::vector<std::vector<hubpir::NodeId>>& paths) {
    if (paths.empty()) return 0;
    std::vector<hubpir::NodeId> universe;
    for (const auto& p : paths)
        for (auto v : p) universe.push_back(v);
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
    const std::size_t u = universe.size();
    if (u > 24) throw std::runtime_error("hitting set oracle limited to 24 candidate nodes");
    std::vector<std::uint64_t> path_masks;
    for (const auto& p : paths) {
        std::uint64_t mask = 0;
        for (auto v : p) {
            const auto pos = std::lower_bound(universe.begin(), universe.end(), v) -
                             universe.begin();
            mask |= std::uint64_t{1} << pos;
        }
        path_masks.push_back(mask);
    }
    std::size_t best = u;
    for (std::uint64_t sub = 0; sub < (std::uint64_t{1} << u); ++sub) {
        const auto size = static_cast<std::size_t>(__builtin_popcountll(sub));
        if (size >= best) continue;
        bool hits_all = true;
        for (std::uint64_t m : path_masks)
            if ((m & sub) == 0) {
                hits_all = false;
                break;
            }
        if (hits_all) best = size;
    }
    return best;
}

// Naive bit-by-bit XOR of the selected columns of an explicit bit matrix.
inline std::vector<bool> naive_xor_answer(const std::vector<std::vector<bool>>& columns,
                                          const std::vector<bool>& selector) {
    const std::size_t rows = columns.empty() ? 0 : columns[0].size();
    std::vector<bool> acc(rows, false);
    for (std::size_t c = 0; c < selector.size(); ++c)
        if (selector[c])
            for (std::size_t r = 0; r < rows; ++r) acc[r] = acc[r] != columns[c][r];
    return acc;
}

// Two-sided p-value of a two-proportion z test; 1.0 when undefined.
inline double two_proportion_pvalue(std::size_t hits_a, std::size_t n_a, std::size_t hits_b,
                                    std::size_t n_b) {
    const double pa = static_cast<double>(hits_a) / n_a;
    const double pb = static_cast<double>(hits_b) / n_b;
    const double pooled = static_cast<double>(hits_a + hits_b) / (n_a + n_b);
    const double var = pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b);
    if (var <= 0) return 1.0;
    const double z = (pa - pb) / std::sqrt(var);
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

// Deterministically perturbed copy that retries seeds until the library
// accepts the APSP (used where a test just needs a valid instance).
inline hubpir::Graph perturbed_ok(const hubpir::Graph& g, std::uint64_t seed) {
    return hubpir::perturb_weights(g, seed);
}

} // namespace oracle
