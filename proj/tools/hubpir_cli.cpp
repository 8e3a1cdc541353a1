// Command-line front end: generate test graphs, build hub databases, run
// PIR servers, publish replicas, and issue private route queries.

#include <chrono>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "hubpir/pipeline.hpp"
#include "hubpir/transport.hpp"

namespace {

int cmd_gen(const std::string& family, std::size_t k, std::size_t p, std::size_t n,
            double avg_degree, std::uint64_t seed, const std::string& output) {
    hubpir::Graph g;
    if (family == "star-clique") {
        g = hubpir::generate_star_clique(k, p, seed);
    } else if (family == "random") {
        g = hubpir::generate_random(n, avg_degree, seed);
    } else {
        std::cerr << "gen: unknown family '" << family << "'\n";
        return 2;
    }
    hubpir::write_snapshot(g, output);
    std::cout << "gen: wrote " << g.node_count() << " nodes, " << g.edge_count()
              << " directed edges to " << output << "\n";
    return 0;
}

int cmd_build(const hubpir::BuildConfig& cfg) {
    const auto art = hubpir::run_build(cfg);
    if (!cfg.stats_dir.empty()) hubpir::write_stats_csvs(art.stats, cfg.stats_dir);
    const auto& r = art.stats.summary;
    const auto& t = art.stats.timings;
    std::cout << "build: n=" << r.nodes << " m=" << r.edges << " scc=" << r.scc_count
              << " largest_scc=" << r.largest_scc_nodes << "/" << r.largest_scc_edges
              << " D=" << r.hop_diameter << "\n"
              << "build: baseline_hd=" << r.baseline_hd_bound
              << " heuristic_hd=" << r.heuristic_hd_bound << " ell=" << r.base_size
              << " h_max=" << r.max_hub_set_size << " db_bytes=" << r.hub_db_bytes << "\n"
              << "build: seed_used=" << art.seed_used << "\n"
              << "build: stages load=" << t.load_seconds << "s scc=" << t.scc_seconds
              << "s apsp=" << t.apsp_seconds << "s covers=" << t.covers_seconds
              << "s encode=" << t.encode_seconds << "s total=" << t.total_seconds << "s\n";
    if (!cfg.output_db.empty())
        std::cout << "build: wrote " << cfg.output_db << " and " << cfg.output_db << ".dir\n";
    return 0;
}

int cmd_stats_db(const std::string& db_path) {
    const auto db = hubpir::read_db_file(db_path);
    if (!db.has_records()) {
        std::cout << "stats: directory-only file, N=" << db.header.record_count
                  << " lambda=" << db.header.lambda << "\n";
        return 0;
    }
    const auto s = hubpir::db_stats(db);
    std::cout << "stats: N=" << s.record_count << " L_bits=" << s.record_bits
              << " h_max=" << s.h_max << " d_max=" << db.header.d_max
              << " lambda=" << db.header.lambda << " total_bytes=" << s.total_bytes << "\n";
    std::cout << "hub_set_size,record_count\n";
    for (const auto& [size, count] : s.real_slot_histogram)
        std::cout << size << ',' << count << '\n';
    return 0;
}

int cmd_serve(const std::string& db_path, const std::string& listen) {
    const auto hp = hubpir::HostPort::parse(listen);
    hubpir::Server server(db_path, hp.host, hp.port);
    std::cout << "LISTENING " << hp.host << ":" << server.port() << std::endl;
    server.run();
    return 0;
}

int cmd_publish(const std::string& db_path, const std::vector<std::string>& targets) {
    const auto receipt = hubpir::publish(db_path, targets);
    std::cout << "publish: version=" << receipt.version.counter << " digest=" << std::hex
              << receipt.version.digest << std::dec << "\n";
    for (const auto& p : receipt.paths) std::cout << "publish: replica at " << p << "\n";
    return 0;
}

int cmd_query(const std::string& server1, const std::string& server2,
              const std::string& dir_path, const std::string& s, const std::string& t) {
    const auto directory = hubpir::read_db_file(dir_path);
    std::random_device rd;
    std::mt19937_64 rng((std::uint64_t{rd()} << 32) | rd());
    const auto result = hubpir::client_route_query(hubpir::HostPort::parse(server1),
                                                   hubpir::HostPort::parse(server2), directory,
                                                   s, t, rng);
    std::cout << "path:";
    for (const auto& label : result.path) std::cout << ' ' << label;
    std::cout << "\ncost=" << result.total_base_cost << "\n";
    for (std::size_t i = 0; i < result.retrievals.size(); ++i)
        std::cout << "retrieval " << i << ": sent " << result.retrievals[i].sent_per_server
                  << " B/server, received " << result.retrievals[i].received_per_server
                  << " B/server\n";
    return 0;
}

int cmd_bench(const std::string& server1, const std::string& server2,
              const std::string& dir_path, std::size_t count, std::uint64_t seed) {
    const auto directory = hubpir::read_db_file(dir_path);
    const auto hp1 = hubpir::HostPort::parse(server1);
    const auto hp2 = hubpir::HostPort::parse(server2);
    hubpir::ServerSession s1(hp1.host, hp1.port);
    hubpir::ServerSession s2(hp2.host, hp2.port);
    if (s1.meta().version.digest != s2.meta().version.digest)
        throw hubpir::ReplicaMismatchError("servers hold different database contents");
    const auto& meta = s1.meta();
    const hubpir::DbShape shape{meta.header.record_count, meta.header.record_bits};
    auto e1 = s1.endpoint();
    auto e2 = s2.endpoint();
    std::mt19937_64 rng(seed);

    std::vector<double> latencies_ms;
    latencies_ms.reserve(count);
    s1.mark_bytes();
    std::uint64_t xor_words = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t target = hubpir::uniform_below(rng, shape.record_count);
        const auto start = std::chrono::steady_clock::now();
        hubpir::retrieve_record(e1, e2, shape, target, rng);
        latencies_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count());
        // Each server XORs roughly half the columns into an L-bit accumulator.
        xor_words += (shape.record_count / 2) * ((shape.record_bits + 63) / 64);
    }
    std::sort(latencies_ms.begin(), latencies_ms.end());
    double mean = 0;
    for (double v : latencies_ms) mean += v;
    mean /= static_cast<double>(count);
    const double p95 = latencies_ms[static_cast<std::size_t>(0.95 * (count - 1))];
    const double measured_per_server =
        static_cast<double>(s1.bytes_sent_since_mark() + s1.bytes_received_since_mark()) /
        static_cast<double>(count);
    const double formula_bytes =
        static_cast<double>(hubpir::column_mode_comm_bits(shape.record_count,
                                                          shape.record_bits)) /
        8.0 / 2.0; // per server
    std::cout << "bench: retrievals=" << count << " mean=" << mean << "ms p95=" << p95
              << "ms\n"
              << "bench: measured " << measured_per_server
              << " B/server/retrieval (frames included); query+answer payload formula "
              << formula_bytes << " B\n"
              << "bench: approx XOR volume " << xor_words * 8 << " B total across queries\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Private shortest-path discovery over hub-labeled payment graphs"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic snapshot CSV");
    std::string gen_family = "random", gen_out;
    std::size_t gen_k = 4, gen_p = 10, gen_n = 100;
    double gen_deg = 4.0;
    std::uint64_t gen_seed = 1;
    gen->add_option("--family", gen_family, "star-clique or random")->required();
    gen->add_option("--stars", gen_k, "star count (star-clique)");
    gen->add_option("--leaves", gen_p, "leaves per star (star-clique)");
    gen->add_option("--nodes", gen_n, "node count (random)");
    gen->add_option("--avg-degree", gen_deg, "average out-degree (random)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("-o,--output", gen_out, "output snapshot path")->required();

    // build
    auto* build = app.add_subcommand("build", "Build a hub database from a snapshot");
    hubpir::BuildConfig cfg;
    long long build_ell = -1;
    build->add_option("-i,--input", cfg.input_path, "snapshot CSV")->required();
    build->add_option("-o,--output", cfg.output_db, "output database path")->required();
    build->add_option("--seed", cfg.seed, "perturbation seed");
    build->add_option("--lambda", cfg.lambda, "label width in bits (default 32)");
    build->add_option("--ell", build_ell, "fixed base set size");
    build->add_flag("--optimize", cfg.optimize, "search for the base size minimizing the bound");
    build->add_option("--budget", cfg.optimizer_budget, "optimizer evaluation budget");
    build->add_option("--stats-dir", cfg.stats_dir, "directory for CSV stats output");
    build->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");

    // stats
    auto* stats = app.add_subcommand("stats", "Inspect a database or analyze a snapshot");
    std::string stats_db, stats_graph, stats_dir_out;
    std::uint64_t stats_seed = 1;
    long long stats_ell = -1;
    bool stats_optimize = false;
    std::size_t stats_budget = 12;
    stats->add_option("--db", stats_db, "hub database or directory file");
    stats->add_option("--graph", stats_graph, "snapshot CSV to analyze end to end");
    stats->add_option("--ell", stats_ell, "fixed base size for --graph analysis");
    stats->add_flag("--optimize", stats_optimize, "optimize base size for --graph analysis");
    stats->add_option("--budget", stats_budget, "optimizer budget for --graph analysis");
    stats->add_option("--seed", stats_seed, "perturbation seed for --graph analysis");
    stats->add_option("--stats-dir", stats_dir_out, "directory for CSV output (--graph)");

    // serve
    auto* serve = app.add_subcommand("serve", "Run a PIR server for a database");
    std::string serve_db, serve_listen = "127.0.0.1:0";
    serve->add_option("--db", serve_db, "database file to serve")->required();
    serve->add_option("--listen", serve_listen, "host:port (port 0 = ephemeral)");

    // publish
    auto* publish = app.add_subcommand("publish", "Distribute a database to two replicas");
    std::string pub_db;
    std::vector<std::string> pub_targets;
    publish->add_option("--db", pub_db, "database file")->required();
    publish->add_option("--to", pub_targets, "target directory (exactly twice)")
        ->expected(2)
        ->required();

    // query
    auto* query = app.add_subcommand("query", "Privately discover a route");
    std::string q_s1, q_s2, q_dir, q_src, q_dst;
    query->add_option("--server1", q_s1, "first server host:port")->required();
    query->add_option("--server2", q_s2, "second server host:port")->required();
    query->add_option("--dir", q_dir, "public directory file (.dir)")->required();
    query->add_option("-s,--source", q_src, "source node label")->required();
    query->add_option("-t,--target", q_dst, "target node label")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Measure retrieval latency and bytes");
    std::string b_s1, b_s2, b_dir;
    std::size_t b_count = 100;
    std::uint64_t b_seed = 1;
    bench->add_option("--server1", b_s1, "first server host:port")->required();
    bench->add_option("--server2", b_s2, "second server host:port")->required();
    bench->add_option("--dir", b_dir, "public directory file (.dir)")->required();
    bench->add_option("--count", b_count, "number of retrievals");
    bench->add_option("--seed", b_seed, "target selection seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_family, gen_k, gen_p, gen_n, gen_deg, gen_seed,
                                          gen_out);
        if (build->parsed()) {
            if (build_ell >= 0) cfg.fixed_l = static_cast<std::size_t>(build_ell);
            return cmd_build(cfg);
        }
        if (stats->parsed()) {
            if (!stats_db.empty()) return cmd_stats_db(stats_db);
            if (!stats_graph.empty()) {
                hubpir::BuildConfig scfg;
                scfg.input_path = stats_graph;
                scfg.seed = stats_seed;
                scfg.optimize = stats_optimize;
                scfg.optimizer_budget = stats_budget;
                if (stats_ell >= 0) scfg.fixed_l = static_cast<std::size_t>(stats_ell);
                if (!scfg.optimize && !scfg.fixed_l) scfg.fixed_l = 0;
                scfg.stats_dir = stats_dir_out;
                return cmd_build(scfg);
            }
            std::cerr << "stats: pass --db or --graph\n";
            return 2;
        }
        if (serve->parsed()) return cmd_serve(serve_db, serve_listen);
        if (publish->parsed()) return cmd_publish(pub_db, pub_targets);
        if (query->parsed()) return cmd_query(q_s1, q_s2, q_dir, q_src, q_dst);
        if (bench->parsed()) return cmd_bench(b_s1, b_s2, b_dir, b_count, b_seed);
    } catch (const hubpir::Error& e) {
        std::cerr << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
