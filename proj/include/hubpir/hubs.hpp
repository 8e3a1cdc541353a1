#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "hubpir/apsp.hpp"
#include "hubpir/graph.hpp"

namespace hubpir {

// Power-of-two hop radii {2^i : 2^i <= hop diameter}. Empty for a
// single-node graph.
struct RadiiSet {
    std::vector<std::uint32_t> radii;

    static RadiiSet for_diameter(std::uint32_t diameter) {
        RadiiSet s;
        for (std::uint64_t r = 1; r <= diameter; r *= 2)
            s.radii.push_back(static_cast<std::uint32_t>(r));
        return s;
    }
};

struct CoverFamily {
    std::vector<NodeId> base;                            // sorted
    std::map<std::uint32_t, std::vector<NodeId>> cover;  // radius -> sorted node set
};

struct HubEntry {
    NodeId hub = 0;
    std::uint64_t out_perturbed = 0; // node -> hub
    std::uint64_t in_perturbed = 0;  // hub -> node
    std::uint64_t out_base = 0;
    std::uint64_t in_base = 0;
    std::vector<NodeId> out_path; // node ... hub, endpoints included
    std::vector<NodeId> in_path;  // hub ... node
};

struct HubLabeling {
    std::vector<std::vector<HubEntry>> hubs; // per node, sorted by hub index
    std::uint32_t hd_bound = 0;              // max |hubs_in_neighb(u, r)|
    std::uint32_t base_size = 0;
    std::uint32_t max_hub_size = 0;          // counting the self entry
    std::uint32_t max_hub_size_excl_self = 0;
    RadiiSet radii;
    CoverFamily covers;
};

// The l nodes of highest total (in + out) degree, ties to the smaller
// index. Returned sorted by index.
inline std::vector<NodeId> select_base(const Graph& g, std::size_t l) {
    const std::size_t n = g.node_count();
    if (l > n) throw ValidationError("base size exceeds node count");
    std::vector<NodeId> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        const auto da = g.total_degree(a), db = g.total_degree(b);
        return da != db ? da > db : a < b;
    });
    order.resize(l);
    std::sort(order.begin(), order.end());
    return order;
}

// A shortest path identified by its ordered endpoint pair; node sequences
// are materialized from the predecessor trees on demand.
using PathRef = std::pair<NodeId, NodeId>;

// Buckets every all-pairs shortest path with hop length in (r, 2r] that
// avoids the base set entirely. Power-of-two radii make the intervals
// disjoint, so each path lands in at most one bucket.
inline std::map<std::uint32_t, std::vector<PathRef>> partition_paths(
    const ApspResult& apsp, const RadiiSet& radii, const std::vector<NodeId>& base) {
    std::map<std::uint32_t, std::vector<PathRef>> buckets;
    for (std::uint32_t r : radii.radii) buckets[r];
    if (radii.radii.empty()) return buckets;
    std::vector<bool> in_base(apsp.n, false);
    for (NodeId b : base) in_base[b] = true;
    const std::size_t n = apsp.n;
    for (NodeId s = 0; s < n; ++s) {
        for (NodeId t = 0; t < n; ++t) {
            if (s == t || apsp.dist_at(s, t) == kInfDist) continue;
            const std::uint32_t h = apsp.hop_at(s, t);
            if (h < 2) continue; // single edges fall below every (r, 2r]
            std::uint32_t r = 1;
            while (2 * r < h) r *= 2;
            if (!buckets.count(r)) continue;
            bool touches_base = false;
            if (!base.empty()) {
                for (NodeId cur = t; ; cur = apsp.pred_at(s, cur)) {
                    if (in_base[cur]) {
                        touches_base = true;
                        break;
                    }
                    if (cur == s) break;
                }
            }
            if (!touches_base) buckets[r].emplace_back(s, t);
        }
    }
    return buckets;
}

// Greedy maximum-coverage hitting set: repeatedly take the node on the
// most unhit paths (ties to the smaller index) until every path is hit.
inline std::vector<NodeId> greedy_hitting_set(const std::vector<std::vector<NodeId>>& paths) {
    std::vector<NodeId> chosen;
    if (paths.empty()) return chosen;
    NodeId max_node = 0;
    for (const auto& p : paths)
        for (NodeId v : p) max_node = std::max(max_node, v);
    std::vector<std::uint32_t> count(max_node + 1, 0);
    std::vector<std::vector<std::uint32_t>> paths_of(max_node + 1);
    for (std::uint32_t i = 0; i < paths.size(); ++i)
        for (NodeId v : paths[i]) {
            ++count[v];
            paths_of[v].push_back(i);
        }
    std::vector<bool> alive(paths.size(), true);
    std::size_t remaining = paths.size();
    // Lazy max-heap keyed by (count, smaller index wins ties).
    using Item = std::pair<std::uint32_t, NodeId>;
    auto cmp = [](const Item& a, const Item& b) {
        return a.first != b.first ? a.first < b.first : a.second > b.second;
    };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
    for (NodeId v = 0; v <= max_node; ++v)
        if (count[v]) heap.emplace(count[v], v);
    while (remaining > 0) {
        auto [c, v] = heap.top();
        heap.pop();
        if (c != count[v]) {
            if (count[v]) heap.emplace(count[v], v);
            continue;
        }
        chosen.push_back(v);
        for (std::uint32_t pi : paths_of[v]) {
            if (!alive[pi]) continue;
            alive[pi] = false;
            --remaining;
            for (NodeId w : paths[pi]) --count[w];
        }
        count[v] = 0;
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

// G with the base nodes and their incident edges removed. The index space
// is preserved; removed nodes keep their ids but lose all adjacency.
struct ReducedGraph {
    std::size_t n = 0;
    std::vector<std::vector<NodeId>> fwd;
    std::vector<std::vector<NodeId>> bwd;
    std::vector<bool> removed;

    static ReducedGraph from(const Graph& g, const std::vector<NodeId>& base) {
        ReducedGraph rg;
        rg.n = g.node_count();
        rg.fwd.resize(rg.n);
        rg.bwd.resize(rg.n);
        rg.removed.assign(rg.n, false);
        for (NodeId b : base) rg.removed[b] = true;
        for (const Edge& e : g.edges()) {
            if (rg.removed[e.src] || rg.removed[e.dst]) continue;
            rg.fwd[e.src].push_back(e.dst);
            rg.bwd[e.dst].push_back(e.src);
        }
        return rg;
    }
};

// Union of the forward and backward hop balls of radius x around u,
// computed by breadth-first traversal. Sorted by node index.
inline std::vector<NodeId> neighborhood(const ReducedGraph& g_bar, NodeId u, std::uint32_t x) {
    if (u >= g_bar.n) throw ValidationError("node index out of range");
    if (g_bar.removed[u])
        throw ValidationError("base nodes have no neighborhood in the reduced graph");
    std::vector<bool> seen(g_bar.n, false);
    std::vector<NodeId> result{u};
    seen[u] = true;
    for (const auto* adj : {&g_bar.fwd, &g_bar.bwd}) {
        std::vector<bool> visited(g_bar.n, false);
        visited[u] = true;
        std::vector<NodeId> frontier{u};
        for (std::uint32_t depth = 0; depth < x && !frontier.empty(); ++depth) {
            std::vector<NodeId> next;
            for (NodeId a : frontier) {
                for (NodeId b : (*adj)[a]) {
                    if (visited[b]) continue;
                    visited[b] = true;
                    next.push_back(b);
                    if (!seen[b]) {
                        seen[b] = true;
                        result.push_back(b);
                    }
                }
            }
            frontier = std::move(next);
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

namespace detail {

inline std::vector<std::vector<NodeId>> materialize_paths(const ApspResult& apsp,
                                                          const std::vector<PathRef>& refs) {
    std::vector<std::vector<NodeId>> out;
    out.reserve(refs.size());
    for (const auto& [s, t] : refs) out.push_back(extract_path(apsp, s, t));
    return out;
}

} // namespace detail

// Full hub construction: radii, base, per-radius covers, base-removed
// neighborhoods, per-node hub sets with both-direction distances and
// paths, and the upper bound max |hubs_in_neighb(u, r)|.
//
// The smallest radius additionally covers hop-length-1 paths. The (r, 2r]
// buckets start at hop 2, so direct edges between non-base nodes would
// otherwise be covered by no radius and adjacent pairs could end up with
// an empty hub intersection (a two-node cycle is the smallest such case).
// Folding the hop-1 paths into the r = 1 hitting set restores the covering
// property for every ordered pair.
inline HubLabeling compute_hub_labeling(const Graph& g, const ApspResult& apsp, std::size_t l,
                                        unsigned threads = 0) {
    const std::size_t n = g.node_count();
    if (apsp.n != n) throw ValidationError("apsp result does not match graph");
    for (NodeId s = 0; s < n; ++s)
        for (NodeId t = 0; t < n; ++t)
            if (apsp.dist_at(s, t) == kInfDist)
                throw ValidationError("hub labeling requires a strongly connected graph");

    HubLabeling out;
    out.base_size = static_cast<std::uint32_t>(l);
    out.radii = RadiiSet::for_diameter(apsp.max_hops);
    const std::vector<NodeId> base = select_base(g, l);
    out.covers.base = base;
    std::vector<bool> in_base(n, false);
    for (NodeId b : base) in_base[b] = true;

    auto buckets = partition_paths(apsp, out.radii, base);

    // cover[r] = base ∪ hittingSet(bucket r); r = 1 also hits direct edges.
    for (std::uint32_t r : out.radii.radii) {
        auto paths = detail::materialize_paths(apsp, buckets[r]);
        if (r == out.radii.radii.front()) {
            for (NodeId s = 0; s < n; ++s)
                for (NodeId t = 0; t < n; ++t)
                    if (s != t && apsp.hop_at(s, t) == 1 && !in_base[s] && !in_base[t] &&
                        apsp.dist_at(s, t) != kInfDist)
                        paths.push_back({s, t});
        }
        auto hits = greedy_hitting_set(paths);
        std::vector<NodeId> cover(base);
        cover.insert(cover.end(), hits.begin(), hits.end());
        std::sort(cover.begin(), cover.end());
        cover.erase(std::unique(cover.begin(), cover.end()), cover.end());
        out.covers.cover[r] = std::move(cover);
    }

    const ReducedGraph g_bar = ReducedGraph::from(g, base);
    std::vector<bool> cover_mask;
    out.hubs.resize(n);
    std::vector<std::uint32_t> per_node_bound(n, 0);

    // hubs(u) = {u} ∪ ⋃_r base ∪ (N_{2r}(u) ∩ cover[r]); per-u work is
    // independent, so the loop is parallel with disjoint output slots.
    std::vector<std::vector<bool>> cover_masks;
    for (std::uint32_t r : out.radii.radii) {
        std::vector<bool> mask(n, false);
        for (NodeId c : out.covers.cover.at(r)) mask[c] = true;
        cover_masks.push_back(std::move(mask));
    }

    std::vector<std::uint32_t> per_node_size_excl(n, 0);

    hubpir::detail::parallel_for(n, [&](std::size_t ui) {
        const NodeId u = static_cast<NodeId>(ui);
        std::set<NodeId> hub_set(base.begin(), base.end());
        std::uint32_t bound = 0;
        for (std::size_t ri = 0; ri < out.radii.radii.size(); ++ri) {
            const std::uint32_t r = out.radii.radii[ri];
            std::uint32_t in_neighb = static_cast<std::uint32_t>(base.size());
            if (!in_base[u]) {
                for (NodeId v : neighborhood(g_bar, u, 2 * r)) {
                    if (cover_masks[ri][v]) {
                        hub_set.insert(v);
                        ++in_neighb; // cover nodes surviving in the reduced graph are never base
                    }
                }
            }
            bound = std::max(bound, in_neighb);
        }
        per_node_bound[ui] = bound;
        per_node_size_excl[ui] = static_cast<std::uint32_t>(hub_set.size());
        hub_set.insert(u);

        auto& entries = out.hubs[ui];
        entries.reserve(hub_set.size());
        for (NodeId w : hub_set) {
            HubEntry e;
            e.hub = w;
            e.out_perturbed = apsp.dist_at(u, w);
            e.in_perturbed = apsp.dist_at(w, u);
            e.out_base = apsp.base_dist_at(u, w);
            e.in_base = apsp.base_dist_at(w, u);
            e.out_path = extract_path(apsp, u, w);
            e.in_path = extract_path(apsp, w, u);
            entries.push_back(std::move(e));
        }
    }, threads);

    for (std::size_t u = 0; u < n; ++u) {
        out.hd_bound = std::max(out.hd_bound, per_node_bound[u]);
        out.max_hub_size = std::max(out.max_hub_size,
                                    static_cast<std::uint32_t>(out.hubs[u].size()));
        out.max_hub_size_excl_self = std::max(out.max_hub_size_excl_self,
                                              per_node_size_excl[u]);
    }
    return out;
}

struct OptimizeResult {
    std::size_t best_l = 0;
    HubLabeling labeling;
    std::vector<std::pair<std::size_t, std::uint32_t>> trace; // (l, hd_bound) in eval order
};

// Evaluates the HD bound on the geometric grid {0, 1, 2, 4, ...} capped at
// n, then refines around the best value by shrinking-step local search
// until the evaluation budget is spent. The grid always contains l = 0, so
// the trace reports the baseline. Ties prefer the smaller l.
inline OptimizeResult optimize_base_size(const Graph& g, const ApspResult& apsp,
                                         std::size_t budget, unsigned threads = 0) {
    if (budget < 3) throw ValidationError("optimizer budget must be at least 3");
    const std::size_t n = g.node_count();
    OptimizeResult result;
    std::map<std::size_t, std::uint32_t> seen;
    std::size_t best_l = 0;
    std::uint32_t best_bound = 0;
    HubLabeling best_labeling;
    bool have_best = false;

    auto evaluate = [&](std::size_t l) {
        if (seen.count(l)) return;
        if (result.trace.size() >= budget) return;
        HubLabeling lab = compute_hub_labeling(g, apsp, l, threads);
        seen[l] = lab.hd_bound;
        result.trace.emplace_back(l, lab.hd_bound);
        if (!have_best || lab.hd_bound < best_bound ||
            (lab.hd_bound == best_bound && l < best_l)) {
            have_best = true;
            best_bound = lab.hd_bound;
            best_l = l;
            best_labeling = std::move(lab);
        }
    };

    evaluate(0);
    for (std::size_t l = 1; l <= n && result.trace.size() < budget; l *= 2) evaluate(l);

    // Local refinement: probe best ± step with a halving step.
    std::size_t step = std::max<std::size_t>(1, best_l / 2);
    while (result.trace.size() < budget && step >= 1) {
        const std::size_t lo = best_l >= step ? best_l - step : 0;
        const std::size_t hi = std::min(n, best_l + step);
        evaluate(lo);
        evaluate(hi);
        if (step == 1) break;
        step /= 2;
    }

    result.best_l = best_l;
    result.labeling = std::move(best_labeling);
    return result;
}

} // namespace hubpir
