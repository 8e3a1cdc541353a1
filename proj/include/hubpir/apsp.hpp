#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

#include "hubpir/errors.hpp"
#include "hubpir/graph.hpp"

namespace hubpir {

constexpr std::uint64_t kInfDist = std::numeric_limits<std::uint64_t>::max();
constexpr NodeId kNoPred = 0xffffffffu;

// Row-major n x n matrices from per-source shortest path trees under the
// perturbed costs. base_dist accumulates the true fee units along the same
// tree, so both cost views describe the identical path set.
struct ApspResult {
    std::size_t n = 0;
    std::vector<std::uint64_t> dist;      // perturbed cost, kInfDist if unreachable
    std::vector<std::uint64_t> base_dist; // base cost along the chosen path
    std::vector<NodeId> pred;             // predecessor of column node, kNoPred at source
    std::vector<std::uint16_t> hop;       // edge count of the chosen path
    std::uint16_t max_hops = 0;           // hop diameter d

    std::uint64_t dist_at(NodeId u, NodeId v) const { return dist[std::size_t{u} * n + v]; }
    std::uint64_t base_dist_at(NodeId u, NodeId v) const {
        return base_dist[std::size_t{u} * n + v];
    }
    NodeId pred_at(NodeId u, NodeId v) const { return pred[std::size_t{u} * n + v]; }
    std::uint16_t hop_at(NodeId u, NodeId v) const { return hop[std::size_t{u} * n + v]; }
};

namespace detail {

// Runs fn(i) for i in [0, count) across up to `threads` workers. Output
// slots must be disjoint per i so the schedule cannot change results.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace detail

// All-pairs shortest paths by one Dijkstra run per source. Any relaxation
// that reproduces an already known distance means two distinct paths of
// equal perturbed cost exist, which violates the uniqueness precondition
// the hub construction depends on; that raises UniquenessFault so the
// caller can re-perturb and retry.
inline ApspResult compute_apsp(const Graph& g, unsigned threads = 0) {
    if (!g.perturbed()) throw ValidationError("graph must carry perturbed costs");
    const std::size_t n = g.node_count();
    ApspResult r;
    r.n = n;
    r.dist.assign(n * n, kInfDist);
    r.base_dist.assign(n * n, 0);
    r.pred.assign(n * n, kNoPred);
    r.hop.assign(n * n, 0);
    if (n == 0) return r;

    const auto& adj = g.adjacency();
    const auto& edges = g.edges();
    std::vector<std::uint16_t> per_source_max(n, 0);

    detail::parallel_for(n, [&](std::size_t s) {
        const std::size_t row = s * n;
        auto* dist = &r.dist[row];
        auto* base = &r.base_dist[row];
        auto* pred = &r.pred[row];
        auto* hop = &r.hop[row];
        using Item = std::pair<std::uint64_t, NodeId>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        std::vector<bool> done(n, false);
        dist[s] = 0;
        pq.emplace(0, static_cast<NodeId>(s));
        while (!pq.empty()) {
            const auto [du, u] = pq.top();
            pq.pop();
            if (done[u]) continue;
            done[u] = true;
            for (std::size_t k = adj.offsets[u]; k < adj.offsets[u + 1]; ++k) {
                const Edge& e = edges[adj.edge_index[k]];
                const std::uint64_t cand = du + e.perturbed_cost;
                if (cand == dist[e.dst])
                    throw UniquenessFault("equal-cost shortest paths to node " +
                                          std::to_string(e.dst));
                if (cand < dist[e.dst]) {
                    dist[e.dst] = cand;
                    base[e.dst] = base[u] + e.base_cost;
                    pred[e.dst] = u;
                    hop[e.dst] = static_cast<std::uint16_t>(hop[u] + 1);
                    pq.emplace(cand, e.dst);
                }
            }
        }
        std::uint16_t mx = 0;
        for (std::size_t v = 0; v < n; ++v)
            if (dist[v] != kInfDist) mx = std::max(mx, hop[v]);
        per_source_max[s] = mx;
    }, threads);

    for (std::uint16_t mx : per_source_max) r.max_hops = std::max(r.max_hops, mx);
    return r;
}

// Unique shortest path u -> v as a node sequence, endpoints included.
inline std::vector<NodeId> extract_path(const ApspResult& r, NodeId u, NodeId v) {
    if (u >= r.n || v >= r.n) throw ValidationError("node index out of range");
    if (r.dist_at(u, v) == kInfDist)
        throw NoPathError("no path between requested nodes");
    std::vector<NodeId> path;
    path.reserve(r.hop_at(u, v) + 1);
    NodeId cur = v;
    path.push_back(cur);
    while (cur != u) {
        cur = r.pred_at(u, cur);
        path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

inline std::uint16_t hop_diameter(const ApspResult& r) { return r.max_hops; }

} // namespace hubpir
