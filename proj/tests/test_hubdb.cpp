#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "hubpir/hubdb.hpp"
#include "oracles.hpp"

using namespace hubpir;

namespace {

struct BuiltInstance {
    Graph graph;
    ApspResult apsp;
    HubLabeling labeling;
};

BuiltInstance small_instance(std::size_t n, double deg, std::uint64_t seed, std::size_t l) {
    BuiltInstance inst;
    const Graph raw = largest_scc(generate_random(n, deg, seed)).largest_component;
    for (std::uint64_t attempt = 0;; ++attempt) {
        inst.graph = perturb_weights(raw, seed * 100 + attempt);
        try {
            inst.apsp = compute_apsp(inst.graph);
            break;
        } catch (const UniquenessFault&) {
            REQUIRE(attempt < 5);
        }
    }
    inst.labeling = compute_hub_labeling(inst.graph, inst.apsp, std::min(l, raw.node_count()));
    return inst;
}

void require_entries_equal(const std::vector<HubEntry>& decoded,
                           const std::vector<HubEntry>& expected) {
    REQUIRE(decoded.size() == expected.size());
    for (std::size_t k = 0; k < decoded.size(); ++k) {
        CHECK(decoded[k].hub == expected[k].hub);
        CHECK(decoded[k].out_base == expected[k].out_base);
        CHECK(decoded[k].in_base == expected[k].in_base);
        CHECK(decoded[k].out_path == expected[k].out_path);
        CHECK(decoded[k].in_path == expected[k].in_path);
    }
}

} // namespace

TEST_CASE("single-node labeling encodes to one self slot") {
    NodeDirectory dir(8);
    dir.intern("solo");
    Graph g(std::move(dir));
    g.set_perturbed_costs({});
    const ApspResult apsp = compute_apsp(g);
    const HubLabeling lab = compute_hub_labeling(g, apsp, 0);
    const HubDatabase db = encode(lab, g.directory(), 8);
    CHECK(db.header.record_count == 1);
    CHECK(db.header.h_max == 1);
    CHECK(db.header.d_max == 0);
    const auto entries = decode_record(db, 0);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].hub == 0);
    CHECK(entries[0].out_base == 0);
    CHECK(entries[0].in_base == 0);
    CHECK(entries[0].out_path == std::vector<NodeId>{0});
}

TEST_CASE("decode(encode(x)) round-trips 50 small labelings") {
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto inst = small_instance(10 + seed % 8, 2.5, seed, seed % 4);
        if (inst.graph.node_count() < 2) continue;
        for (unsigned lambda : {32u, 20u}) {
            const HubDatabase db = encode(inst.labeling, inst.graph.directory(), lambda);
            for (NodeId u = 0; u < inst.graph.node_count(); ++u)
                require_entries_equal(decode_record(db, u), inst.labeling.hubs[u]);
        }
        ++checked;
    }
    CHECK(checked >= 40);
}

TEST_CASE("every record carries a zero-distance self slot") {
    const auto inst = small_instance(20, 3.0, 9, 3);
    const HubDatabase db = encode(inst.labeling, inst.graph.directory(), 16);
    for (NodeId u = 0; u < inst.graph.node_count(); ++u) {
        const auto entries = decode_record(db, u);
        const auto self = std::find_if(entries.begin(), entries.end(),
                                       [&](const HubEntry& e) { return e.hub == u; });
        REQUIRE(self != entries.end());
        CHECK(self->out_base == 0);
        CHECK(self->in_base == 0);
        CHECK(self->out_path == std::vector<NodeId>{u});
        CHECK(self->in_path == std::vector<NodeId>{u});
    }
}

TEST_CASE("file bytes follow the header + directory + records identity") {
    const auto inst = small_instance(25, 3.0, 4, 2);
    const HubDatabase db = encode(inst.labeling, inst.graph.directory(), 32);
    const auto bytes = db.serialize();
    std::size_t dir_bytes = 0;
    for (const auto& l : db.labels) dir_bytes += 2 + l.size();
    CHECK(bytes.size() == kDbHeaderBytes + dir_bytes +
                              std::size_t{db.header.record_count} * db.header.record_bytes());
    CHECK(db.total_bytes() == bytes.size());

    const HubDatabase back = HubDatabase::deserialize(bytes);
    CHECK(back.labels == db.labels);
    CHECK(back.payload == db.payload);
    CHECK(back.serialize() == bytes);
}

TEST_CASE("record payload stays within a factor 4 of the h*lambda*d accounting") {
    const auto inst = small_instance(40, 3.5, 6, 4);
    const unsigned lambda = 20;
    const HubDatabase db = encode(inst.labeling, inst.graph.directory(), lambda);
    const std::uint64_t formula_bits =
        std::uint64_t{db.header.h_max} * lambda * std::max<std::uint16_t>(db.header.d_max, 1);
    CHECK(db.header.record_bits >= formula_bits);
    CHECK(db.header.record_bits <= 4 * formula_bits);
}

TEST_CASE("flipping bits in one record never changes another") {
    const auto inst = small_instance(15, 3.0, 12, 2);
    HubDatabase db = encode(inst.labeling, inst.graph.directory(), 16);
    REQUIRE(db.header.record_count >= 3);
    const auto before = decode_record(db, 2);
    std::mt19937_64 rng(77);
    for (int flips = 0; flips < 50; ++flips) {
        const std::size_t bit = uniform_below(rng, db.header.record_bytes() * 8);
        db.payload[0 * db.header.record_bytes() + bit / 8] ^=
            static_cast<std::uint8_t>(1u << (bit % 8));
        require_entries_equal(decode_record(db, 2), before);
    }
}

TEST_CASE("padding slots terminate the record") {
    const auto inst = small_instance(12, 3.0, 15, 1);
    HubDatabase db = encode(inst.labeling, inst.graph.directory(), 16);
    // Find a record with padding and fabricate a real slot after the pad.
    for (NodeId u = 0; u < db.header.record_count; ++u) {
        const auto entries = decode_record(db, u);
        if (entries.size() + 2 <= db.header.h_max) {
            std::vector<std::uint8_t> rec(db.record(u), db.record(u) + db.header.record_bytes());
            BitWriter w(rec);
            w.seek((entries.size() + 1) * db.header.slot_bits());
            w.write(0, db.header.lambda); // valid-looking hub index after a pad
            std::copy(rec.begin(), rec.end(),
                      db.payload.begin() + u * db.header.record_bytes());
            CHECK_THROWS_AS(decode_record(db, u), FormatError);
            return;
        }
    }
    FAIL("no record with two padding slots found");
}

TEST_CASE("corrupt hub index is rejected") {
    const auto inst = small_instance(10, 3.0, 18, 0);
    HubDatabase db = encode(inst.labeling, inst.graph.directory(), 16);
    std::vector<std::uint8_t> rec(db.record(0), db.record(0) + db.header.record_bytes());
    BitWriter w(rec);
    w.seek(0);
    w.write(db.header.record_count + 5, db.header.lambda); // >= n but not the pad value
    std::copy(rec.begin(), rec.end(), db.payload.begin());
    CHECK_THROWS_AS(decode_record(db, 0), FormatError);
    CHECK_THROWS_AS(decode_record(db, db.header.record_count), ValidationError);
}

TEST_CASE("lambda capacity is enforced strictly") {
    const auto inst = small_instance(40, 3.0, 20, 0);
    const std::size_t n = inst.graph.node_count();
    unsigned lambda_exact = 1;
    while ((std::size_t{1} << lambda_exact) < n) ++lambda_exact;
    if ((std::size_t{1} << lambda_exact) == n) {
        // n == 2^lambda leaves no room for the padding sentinel.
        CHECK_THROWS_AS(encode(inst.labeling, inst.graph.directory(), lambda_exact),
                        CapacityError);
    }
    CHECK_THROWS_AS(encode(inst.labeling, inst.graph.directory(), 3), CapacityError);
    CHECK_NOTHROW(encode(inst.labeling, inst.graph.directory(), lambda_exact + 1));
}

TEST_CASE("inconsistent labelings are rejected") {
    auto inst = small_instance(10, 3.0, 22, 0);
    REQUIRE(inst.labeling.hubs.size() >= 2);
    SECTION("path does not reach the hub") {
        auto broken = inst.labeling;
        auto& entry = broken.hubs[0].back();
        entry.out_path.push_back(entry.out_path.front());
        CHECK_THROWS_AS(encode(broken, inst.graph.directory(), 16), ValidationError);
    }
    SECTION("directory size mismatch") {
        NodeDirectory small(16);
        small.intern("only");
        CHECK_THROWS_AS(encode(inst.labeling, small, 16), ValidationError);
    }
}

TEST_CASE("db_stats histogram sums to the record count") {
    const auto inst = small_instance(30, 3.0, 25, 3);
    const HubDatabase db = encode(inst.labeling, inst.graph.directory(), 32);
    const DbStats s = db_stats(db);
    std::size_t total = 0;
    for (const auto& [size, count] : s.real_slot_histogram) total += count;
    CHECK(total == s.record_count);
    CHECK(s.total_bytes == db.serialize().size());
    CHECK(s.record_bits == db.header.record_bits);
}

TEST_CASE("star-clique records hold at least base plus self") {
    Graph g = perturb_weights(generate_star_clique(4, 6), 2);
    const ApspResult apsp = compute_apsp(g);
    const std::size_t l = 4;
    const HubLabeling lab = compute_hub_labeling(g, apsp, l);
    const HubDatabase db = encode(lab, g.directory(), 16);
    const DbStats s = db_stats(db);
    for (const auto& [size, count] : s.real_slot_histogram) CHECK(size >= l + 1);
}

TEST_CASE("database file write and read round-trip") {
    const auto inst = small_instance(18, 3.0, 28, 2);
    const HubDatabase db = encode(inst.labeling, inst.graph.directory(), 32);
    const auto path = std::filesystem::temp_directory_path() / "hubpir_test_roundtrip.db";
    write_db_file(db, path.string());
    const HubDatabase back = read_db_file(path.string());
    CHECK(back.serialize() == db.serialize());
    std::filesystem::remove(path);
}

TEST_CASE("directory-only files carry no records") {
    const auto inst = small_instance(12, 3.0, 31, 1);
    const HubDatabase db = encode(inst.labeling, inst.graph.directory(), 32);
    HubDatabase dir_only;
    dir_only.header = db.header;
    dir_only.labels = db.labels;
    const auto bytes = dir_only.serialize();
    const HubDatabase back = HubDatabase::deserialize(bytes);
    CHECK_FALSE(back.has_records());
    CHECK(back.labels == db.labels);
    CHECK(back.directory_digest() == db.directory_digest());
    CHECK_THROWS_AS(decode_record(back, 0), FormatError);
}
