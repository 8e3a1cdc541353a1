#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hubpir/bits.hpp"
#include "hubpir/errors.hpp"

namespace hubpir {

using NodeId = std::uint32_t;

constexpr std::uint64_t kPerturbRange = std::uint64_t{1} << 20; // r(e) in [1, 2^20)
constexpr std::uint64_t kMaxBaseCost = std::uint64_t{1} << 30;  // keeps path sums in u64

// Maps opaque external labels to dense indices in [0, n). Index order is
// first appearance in the source, which downstream stages treat as part of
// the graph identity: rebuilding from the same input yields the same
// directory byte for byte.
class NodeDirectory {
public:
    explicit NodeDirectory(unsigned lambda = 32) : lambda_(lambda) {
        if (lambda_ == 0 || lambda_ > 32) throw ValidationError("label width must be in [1, 32]");
    }

    NodeId intern(const std::string& label) {
        auto it = index_.find(label);
        if (it != index_.end()) return it->second;
        if (labels_.size() >= capacity()) throw CapacityError("node count exceeds 2^lambda");
        const NodeId id = static_cast<NodeId>(labels_.size());
        labels_.push_back(label);
        index_.emplace(label, id);
        return id;
    }

    NodeId index_of(const std::string& label) const {
        auto it = index_.find(label);
        if (it == index_.end()) throw ValidationError("unknown node label: " + label);
        return it->second;
    }

    bool contains(const std::string& label) const { return index_.count(label) != 0; }
    const std::string& label_of(NodeId id) const { return labels_.at(id); }
    std::size_t size() const { return labels_.size(); }
    unsigned lambda() const { return lambda_; }
    std::uint64_t capacity() const { return std::uint64_t{1} << lambda_; }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    unsigned lambda_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeId> index_;
};

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    std::uint64_t base_cost = 0;
    std::uint64_t perturbed_cost = 0; // 0 until perturb_weights has run
};

// Directed graph with at most one edge per ordered pair and no self-loops.
// Edges are kept sorted by (src, dst); adjacency() exposes a CSR-style view.
class Graph {
public:
    Graph() : directory_(32) {}
    explicit Graph(NodeDirectory directory) : directory_(std::move(directory)) {}

    const NodeDirectory& directory() const { return directory_; }
    NodeDirectory& directory() { return directory_; }

    std::size_t node_count() const { return directory_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    double avg_degree() const {
        return node_count() ? static_cast<double>(edge_count()) / node_count() : 0.0;
    }

    const std::vector<Edge>& edges() const { return edges_; }
    bool perturbed() const { return perturbed_; }

    // Inserts or min-collapses an edge. Invalidates adjacency.
    void add_edge(NodeId src, NodeId dst, std::uint64_t base_cost) {
        if (src == dst) throw ValidationError("self-loop rejected");
        if (src >= node_count() || dst >= node_count())
            throw ValidationError("edge endpoint outside directory");
        if (base_cost > kMaxBaseCost)
            throw CapacityError("base cost exceeds supported range");
        auto key = std::make_pair(src, dst);
        auto it = edge_lookup_.find(pack(key));
        if (it != edge_lookup_.end()) {
            Edge& e = edges_[it->second];
            e.base_cost = std::min(e.base_cost, base_cost);
        } else {
            edge_lookup_.emplace(pack(key), edges_.size());
            edges_.push_back(Edge{src, dst, base_cost, 0});
        }
        adjacency_dirty_ = true;
    }

    // Sorts edges by (src, dst) and rebuilds lookup. Called by finalize().
    void canonicalize() {
        std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
            return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
        });
        edge_lookup_.clear();
        for (std::size_t i = 0; i < edges_.size(); ++i)
            edge_lookup_.emplace(pack({edges_[i].src, edges_[i].dst}), i);
        adjacency_dirty_ = true;
    }

    struct Adjacency {
        std::vector<std::size_t> offsets;     // n+1 entries
        std::vector<std::size_t> edge_index;  // into edges(), grouped by src
        std::vector<std::size_t> in_offsets;  // n+1 entries
        std::vector<std::size_t> in_edge_index;
    };

    const Adjacency& adjacency() const {
        if (adjacency_dirty_) rebuild_adjacency();
        return adj_;
    }

    std::size_t total_degree(NodeId u) const {
        const auto& a = adjacency();
        return (a.offsets[u + 1] - a.offsets[u]) + (a.in_offsets[u + 1] - a.in_offsets[u]);
    }

    const Edge* find_edge(NodeId src, NodeId dst) const {
        auto it = edge_lookup_.find(pack({src, dst}));
        return it == edge_lookup_.end() ? nullptr : &edges_[it->second];
    }

    void set_perturbed_costs(std::vector<std::uint64_t> costs) {
        if (costs.size() != edges_.size())
            throw ValidationError("perturbed cost count mismatch");
        for (std::size_t i = 0; i < edges_.size(); ++i) edges_[i].perturbed_cost = costs[i];
        perturbed_ = true;
    }

private:
    static std::uint64_t pack(std::pair<NodeId, NodeId> key) {
        return (std::uint64_t{key.first} << 32) | key.second;
    }

    void rebuild_adjacency() const {
        const std::size_t n = node_count();
        adj_.offsets.assign(n + 1, 0);
        adj_.in_offsets.assign(n + 1, 0);
        for (const Edge& e : edges_) {
            ++adj_.offsets[e.src + 1];
            ++adj_.in_offsets[e.dst + 1];
        }
        for (std::size_t i = 0; i < n; ++i) {
            adj_.offsets[i + 1] += adj_.offsets[i];
            adj_.in_offsets[i + 1] += adj_.in_offsets[i];
        }
        adj_.edge_index.assign(edges_.size(), 0);
        adj_.in_edge_index.assign(edges_.size(), 0);
        std::vector<std::size_t> cursor(adj_.offsets.begin(), adj_.offsets.end() - 1);
        std::vector<std::size_t> in_cursor(adj_.in_offsets.begin(), adj_.in_offsets.end() - 1);
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            adj_.edge_index[cursor[edges_[i].src]++] = i;
            adj_.in_edge_index[in_cursor[edges_[i].dst]++] = i;
        }
        adjacency_dirty_ = false;
    }

    NodeDirectory directory_;
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, std::size_t> edge_lookup_;
    bool perturbed_ = false;
    mutable bool adjacency_dirty_ = true;
    mutable Adjacency adj_;
};

struct SnapshotConfig {
    unsigned lambda = 32;
};

// Snapshot CSV: one `src_label,dst_label,base_cost` per line, `#` comments
// ignored, duplicate ordered pairs collapsed to the minimum base cost.
inline Graph load_snapshot_stream(std::istream& in, const SnapshotConfig& cfg = {}) {
    NodeDirectory directory(cfg.lambda);
    struct RawEdge {
        std::string src, dst;
        std::uint64_t cost;
    };
    std::vector<RawEdge> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError("expected src,dst,cost", lineno);
        RawEdge e;
        e.src = line.substr(0, c1);
        e.dst = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string cost_str = line.substr(c2 + 1);
        if (e.src.empty() || e.dst.empty()) throw ParseError("empty node label", lineno);
        if (cost_str.empty()) throw ParseError("empty cost", lineno);
        if (cost_str[0] == '-') throw ValidationError("line " + std::to_string(lineno) +
                                                      ": negative cost rejected");
        std::uint64_t cost = 0;
        for (char ch : cost_str) {
            if (ch < '0' || ch > '9') throw ParseError("cost is not a decimal integer", lineno);
            cost = cost * 10 + static_cast<std::uint64_t>(ch - '0');
            if (cost > kMaxBaseCost)
                throw CapacityError("line " + std::to_string(lineno) + ": cost exceeds range");
        }
        e.cost = cost;
        raw.push_back(std::move(e));
    }
    // Directory order = first appearance; capacity errors surface here.
    for (const RawEdge& e : raw) {
        directory.intern(e.src);
        directory.intern(e.dst);
    }
    Graph g(std::move(directory));
    for (const RawEdge& e : raw) {
        const NodeId s = g.directory().index_of(e.src);
        const NodeId d = g.directory().index_of(e.dst);
        if (s == d) throw ValidationError("self-loop rejected: " + e.src);
        g.add_edge(s, d, e.cost);
    }
    g.canonicalize();
    return g;
}

inline Graph load_snapshot(const std::string& path, const SnapshotConfig& cfg = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open snapshot file: " + path);
    return load_snapshot_stream(in, cfg);
}

// Canonical form: edges sorted by (src index, dst index), no comments.
// load(write(g)) is the identity for graphs already in canonical form.
inline void write_snapshot_stream(const Graph& g, std::ostream& out) {
    for (const Edge& e : g.edges())
        out << g.directory().label_of(e.src) << ',' << g.directory().label_of(e.dst) << ','
            << e.base_cost << '\n';
}

inline void write_snapshot(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    write_snapshot_stream(g, out);
}

struct SccReduction {
    std::vector<std::uint32_t> component_assignment; // node -> component id
    std::size_t component_count = 0;
    Graph largest_component;                    // re-indexed
    std::vector<NodeId> to_original;            // new index -> original index
};

// Iterative Tarjan; component ids follow discovery order. The largest
// component (ties: smallest minimum original index) is re-indexed with the
// relative order of original indices preserved.
inline SccReduction largest_scc(const Graph& g) {
    const std::size_t n = g.node_count();
    SccReduction result;
    result.component_assignment.assign(n, 0);
    if (n == 0) {
        result.largest_component = Graph(NodeDirectory(g.directory().lambda()));
        return result;
    }

    constexpr std::uint32_t kUnvisited = 0xffffffffu;
    std::vector<std::uint32_t> index(n, kUnvisited), lowlink(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<NodeId> stack;
    std::uint32_t next_index = 0;
    std::uint32_t component_count = 0;
    const auto& adj = g.adjacency();
    const auto& edges = g.edges();

    struct Frame {
        NodeId node;
        std::size_t edge_cursor;
    };
    std::vector<Frame> call;
    for (NodeId root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        call.push_back({root, adj.offsets[root]});
        index[root] = lowlink[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            const NodeId u = f.node;
            if (f.edge_cursor < adj.offsets[u + 1]) {
                const NodeId v = edges[adj.edge_index[f.edge_cursor++]].dst;
                if (index[v] == kUnvisited) {
                    index[v] = lowlink[v] = next_index++;
                    stack.push_back(v);
                    on_stack[v] = true;
                    call.push_back({v, adj.offsets[v]});
                } else if (on_stack[v]) {
                    lowlink[u] = std::min(lowlink[u], index[v]);
                }
            } else {
                call.pop_back();
                if (!call.empty())
                    lowlink[call.back().node] = std::min(lowlink[call.back().node], lowlink[u]);
                if (lowlink[u] == index[u]) {
                    for (;;) {
                        const NodeId w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        result.component_assignment[w] = component_count;
                        if (w == u) break;
                    }
                    ++component_count;
                }
            }
        }
    }
    result.component_count = component_count;

    std::vector<std::size_t> sizes(component_count, 0);
    std::vector<NodeId> min_member(component_count, static_cast<NodeId>(n));
    for (NodeId u = 0; u < n; ++u) {
        const auto c = result.component_assignment[u];
        ++sizes[c];
        min_member[c] = std::min(min_member[c], u);
    }
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < component_count; ++c) {
        if (sizes[c] > sizes[best] ||
            (sizes[c] == sizes[best] && min_member[c] < min_member[best]))
            best = c;
    }

    std::vector<NodeId> members;
    for (NodeId u = 0; u < n; ++u)
        if (result.component_assignment[u] == best) members.push_back(u);
    result.to_original = members;

    NodeDirectory sub_dir(g.directory().lambda());
    std::vector<NodeId> remap(n, 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
        sub_dir.intern(g.directory().label_of(members[i]));
        remap[members[i]] = static_cast<NodeId>(i);
    }
    Graph sub(std::move(sub_dir));
    for (const Edge& e : g.edges()) {
        if (result.component_assignment[e.src] == best &&
            result.component_assignment[e.dst] == best)
            sub.add_edge(remap[e.src], remap[e.dst], e.base_cost);
    }
    sub.canonicalize();
    result.largest_component = std::move(sub);
    return result;
}

// perturbed(e) = base(e) * 2^20 + r(e), r(e) pairwise distinct in [1, 2^20).
// Distinct r values make edge costs unique outright; the order embedding of
// base costs is preserved because r < 2^20. Path-sum uniqueness is checked
// downstream and re-seeded on collision.
inline Graph perturb_weights(const Graph& g, std::uint64_t seed) {
    const std::size_t m = g.edge_count();
    if (m >= kPerturbRange) throw CapacityError("edge count exceeds perturbation headroom");
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> used;
    used.reserve(m * 2);
    std::vector<std::uint64_t> costs;
    costs.reserve(m);
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < m; ++i) {
        std::uint64_t r;
        do {
            r = 1 + uniform_below(rng, kPerturbRange - 1);
        } while (!used.insert(r).second);
        costs.push_back(edges[i].base_cost * kPerturbRange + r);
    }
    Graph out = g;
    out.set_perturbed_costs(std::move(costs));
    return out;
}

// k star graphs with the centers forming a clique; every edge is a
// bidirectional pair with unit base cost. Centers take indices [0, k),
// the leaves of center c take indices [k + c*p, k + (c+1)*p).
inline Graph generate_star_clique(std::size_t k, std::size_t p, std::uint64_t /*seed*/ = 0) {
    if (k < 2) throw ValidationError("star count must be at least 2");
    if (p < 1) throw ValidationError("leaves per star must be at least 1");
    NodeDirectory dir(32);
    for (std::size_t c = 0; c < k; ++c) dir.intern("c" + std::to_string(c));
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < p; ++j)
            dir.intern("c" + std::to_string(c) + "_l" + std::to_string(j));
    Graph g(std::move(dir));
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            if (a != b) g.add_edge(static_cast<NodeId>(a), static_cast<NodeId>(b), 1);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < p; ++j) {
            const NodeId leaf = static_cast<NodeId>(k + c * p + j);
            g.add_edge(static_cast<NodeId>(c), leaf, 1);
            g.add_edge(leaf, static_cast<NodeId>(c), 1);
        }
    }
    g.canonicalize();
    return g;
}

// Directed Erdos-Renyi-style graph: round(n * avg_degree) distinct ordered
// pairs, base costs uniform in [1, 1000].
inline Graph generate_random(std::size_t n, double avg_degree, std::uint64_t seed) {
    if (n < 2) throw ValidationError("random graph needs at least 2 nodes");
    if (avg_degree < 0) throw ValidationError("average degree must be non-negative");
    NodeDirectory dir(32);
    for (std::size_t i = 0; i < n; ++i) dir.intern("v" + std::to_string(i));
    Graph g(std::move(dir));
    const std::uint64_t max_m = static_cast<std::uint64_t>(n) * (n - 1);
    std::uint64_t m = static_cast<std::uint64_t>(avg_degree * static_cast<double>(n) + 0.5);
    m = std::min(m, max_m);
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(m * 2);
    while (chosen.size() < m) {
        const NodeId u = static_cast<NodeId>(uniform_below(rng, n));
        const NodeId v = static_cast<NodeId>(uniform_below(rng, n));
        if (u == v) continue;
        if (!chosen.insert((std::uint64_t{u} << 32) | v).second) continue;
        g.add_edge(u, v, 1 + uniform_below(rng, 1000));
    }
    g.canonicalize();
    return g;
}

} // namespace hubpir
