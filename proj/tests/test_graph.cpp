#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "hubpir/graph.hpp"
#include "oracles.hpp"

using namespace hubpir;

TEST_CASE("snapshot loading transcribes edges") {
    std::istringstream in("a,b,10\nb,a,20\n");
    const Graph g = load_snapshot_stream(in);
    REQUIRE(g.node_count() == 2);
    REQUIRE(g.edge_count() == 2);
    const Edge* ab = g.find_edge(g.directory().index_of("a"), g.directory().index_of("b"));
    const Edge* ba = g.find_edge(g.directory().index_of("b"), g.directory().index_of("a"));
    REQUIRE(ab != nullptr);
    REQUIRE(ba != nullptr);
    CHECK(ab->base_cost == 10);
    CHECK(ba->base_cost == 20);
}

TEST_CASE("duplicate edges collapse to the minimum cost") {
    std::istringstream in("a,b,10\na,b,7\n");
    const Graph g = load_snapshot_stream(in);
    REQUIRE(g.edge_count() == 1);
    CHECK(g.edges()[0].base_cost == 7);
}

TEST_CASE("snapshot parser reports malformed input") {
    SECTION("missing column") {
        std::istringstream in("a,b,1\nbroken_line\n");
        CHECK_THROWS_AS(load_snapshot_stream(in), ParseError);
    }
    SECTION("line number in message") {
        std::istringstream in("a,b,1\nx,y\n");
        try {
            load_snapshot_stream(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    SECTION("negative cost") {
        std::istringstream in("a,b,-5\n");
        CHECK_THROWS_AS(load_snapshot_stream(in), ValidationError);
    }
    SECTION("non-numeric cost") {
        std::istringstream in("a,b,zzz\n");
        CHECK_THROWS_AS(load_snapshot_stream(in), ParseError);
    }
    SECTION("comments and blank lines are skipped") {
        std::istringstream in("# header\n\na,b,3\n");
        CHECK(load_snapshot_stream(in).edge_count() == 1);
    }
    SECTION("node capacity") {
        std::istringstream in("a,b,1\nb,c,1\nc,d,1\nd,e,1\n");
        SnapshotConfig cfg;
        cfg.lambda = 2; // 2^2 = 4 < 5 nodes
        CHECK_THROWS_AS(load_snapshot_stream(in, cfg), CapacityError);
    }
}

TEST_CASE("largest scc on two disjoint 2-cycles picks the smaller index pair") {
    std::istringstream in("c,d,1\nd,c,1\na,b,1\nb,a,1\n");
    const Graph g = load_snapshot_stream(in);
    const SccReduction r = largest_scc(g);
    CHECK(r.component_count == 2);
    REQUIRE(r.largest_component.node_count() == 2);
    // Tie on size 2: the component containing the smaller original index
    // wins. "c" was interned first, so it is index 0.
    CHECK(r.largest_component.directory().contains("c"));
    CHECK(r.largest_component.directory().contains("d"));
}

TEST_CASE("one-way edge yields singleton components") {
    std::istringstream in("a,b,1\n");
    const SccReduction r = largest_scc(load_snapshot_stream(in));
    CHECK(r.component_count == 2);
    CHECK(r.largest_component.node_count() == 1);
}

TEST_CASE("empty graph reduces to empty component") {
    std::istringstream in("");
    const SccReduction r = largest_scc(load_snapshot_stream(in));
    CHECK(r.component_count == 0);
    CHECK(r.largest_component.node_count() == 0);
}

TEST_CASE("largest scc members are mutually reachable") {
    const Graph g = generate_random(120, 3.0, 99);
    const SccReduction r = largest_scc(g);
    const Graph& c = r.largest_component;
    REQUIRE(c.node_count() >= 2);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = static_cast<NodeId>(uniform_below(rng, c.node_count()));
        const auto v = static_cast<NodeId>(uniform_below(rng, c.node_count()));
        const auto hops = oracle::bfs_hops(c, u);
        REQUIRE(hops[v] != 0xffffffffu);
    }
}

TEST_CASE("scc component assignment is consistent with sizes") {
    const Graph g = generate_random(80, 2.5, 7);
    const SccReduction r = largest_scc(g);
    std::vector<std::size_t> sizes(r.component_count, 0);
    for (auto c : r.component_assignment) {
        REQUIRE(c < r.component_count);
        ++sizes[c];
    }
    std::size_t total = 0;
    for (auto s : sizes) {
        CHECK(s >= 1);
        total += s;
    }
    CHECK(total == g.node_count());
    CHECK(*std::max_element(sizes.begin(), sizes.end()) == r.largest_component.node_count());
}

TEST_CASE("perturbation produces distinct positive costs below the headroom") {
    std::istringstream in("a,b,0\nb,c,0\nc,a,0\n");
    const Graph g = perturb_weights(load_snapshot_stream(in), 42);
    std::set<std::uint64_t> costs;
    for (const auto& e : g.edges()) {
        CHECK(e.perturbed_cost > 0);
        CHECK(e.perturbed_cost < kPerturbRange); // base 0 keeps r(e) alone
        costs.insert(e.perturbed_cost);
    }
    CHECK(costs.size() == 3);
}

TEST_CASE("perturbation embeds the base-cost order") {
    std::istringstream in("a,b,1\nb,c,2\nc,a,1\n");
    const Graph g = perturb_weights(load_snapshot_stream(in), 7);
    for (const auto& e : g.edges()) {
        if (e.base_cost == 1) {
            CHECK(e.perturbed_cost >= kPerturbRange + 1);
            CHECK(e.perturbed_cost < 2 * kPerturbRange);
        } else {
            CHECK(e.perturbed_cost >= 2 * kPerturbRange + 1);
            CHECK(e.perturbed_cost < 3 * kPerturbRange);
        }
    }
}

TEST_CASE("perturbation is deterministic per seed") {
    const Graph base = generate_random(50, 3.0, 11);
    const Graph a = perturb_weights(base, 1234);
    const Graph b = perturb_weights(base, 1234);
    const Graph c = perturb_weights(base, 1235);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.edge_count(); ++i) {
        same = same && a.edges()[i].perturbed_cost == b.edges()[i].perturbed_cost;
        differs = differs || a.edges()[i].perturbed_cost != c.edges()[i].perturbed_cost;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("perturbed costs are pairwise distinct and order-preserving on random graphs") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const Graph g = perturb_weights(generate_random(60, 4.0, seed), seed * 17);
        std::set<std::uint64_t> seen;
        for (const auto& e : g.edges()) REQUIRE(seen.insert(e.perturbed_cost).second);
        for (const auto& e1 : g.edges())
            for (const auto& e2 : g.edges())
                if (e1.base_cost < e2.base_cost)
                    REQUIRE(e1.perturbed_cost < e2.perturbed_cost);
    }
}

TEST_CASE("star clique shape and counts") {
    SECTION("k=2 p=1") {
        const Graph g = generate_star_clique(2, 1);
        CHECK(g.node_count() == 4);
        CHECK(g.edge_count() == 6);
    }
    SECTION("k=3 p=2") {
        const Graph g = generate_star_clique(3, 2);
        CHECK(g.node_count() == 9);
        CHECK(g.edge_count() == 18);
    }
    SECTION("hop diameter is 3 for several shapes") {
        for (auto [k, p] : std::vector<std::pair<std::size_t, std::size_t>>{
                 {2, 1}, {3, 2}, {4, 10}, {5, 3}}) {
            const Graph g = generate_star_clique(k, p);
            CHECK(oracle::bfs_hop_diameter(g) == 3);
        }
    }
}

TEST_CASE("random generator is reproducible and bounded") {
    const Graph a = generate_random(2, 1.0, 77);
    const Graph b = generate_random(2, 1.0, 77);
    REQUIRE(a.edge_count() == b.edge_count());
    for (std::size_t i = 0; i < a.edge_count(); ++i) {
        CHECK(a.edges()[i].src == b.edges()[i].src);
        CHECK(a.edges()[i].dst == b.edges()[i].dst);
        CHECK(a.edges()[i].base_cost == b.edges()[i].base_cost);
    }

    const Graph g = generate_random(100, 5.0, 3);
    CHECK(g.edge_count() >= 300);
    CHECK(g.edge_count() <= 700);

    CHECK_THROWS_AS(generate_random(0, 1.0, 1), ValidationError);
    CHECK_THROWS_AS(generate_random(1, 1.0, 1), ValidationError);
}

TEST_CASE("snapshot write then load is a fixpoint") {
    const Graph g = generate_random(40, 3.0, 21);
    std::ostringstream first;
    write_snapshot_stream(g, first);
    std::istringstream back(first.str());
    const Graph reloaded = load_snapshot_stream(back);
    std::ostringstream second;
    write_snapshot_stream(reloaded, second);
    CHECK(first.str() == second.str());
    REQUIRE(reloaded.node_count() == g.node_count());
    REQUIRE(reloaded.edge_count() == g.edge_count());
}
