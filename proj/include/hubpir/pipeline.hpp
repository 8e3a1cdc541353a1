#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hubpir/apsp.hpp"
#include "hubpir/graph.hpp"
#include "hubpir/hubdb.hpp"
#include "hubpir/hubs.hpp"

namespace hubpir {

struct BuildConfig {
    std::string input_path;              // snapshot CSV
    std::uint64_t seed = 1;
    unsigned lambda = 32;
    std::optional<std::size_t> fixed_l;  // exactly one of fixed_l / optimize
    bool optimize = false;
    std::size_t optimizer_budget = 12;
    std::string output_db;               // empty: keep in memory only
    std::string stats_dir;               // empty: no CSV emission
    unsigned threads = 0;
    unsigned max_perturb_retries = 5;

    void validate() const {
        if (fixed_l.has_value() == optimize)
            throw ValidationError("exactly one of a fixed base size or --optimize is required");
    }
};

struct SummaryRow {
    std::string input;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t scc_count = 0;
    std::size_t largest_scc_nodes = 0;
    std::size_t largest_scc_edges = 0;
    std::uint16_t hop_diameter = 0;
    std::uint32_t baseline_hd_bound = 0;
    std::uint32_t heuristic_hd_bound = 0;
    std::uint32_t base_size = 0;
    std::uint32_t max_hub_set_size = 0;
    std::uint32_t max_hub_set_size_excl_self = 0;
    std::size_t hub_db_bytes = 0;
    double build_seconds = 0;
};

struct StageTimings {
    double load_seconds = 0;
    double scc_seconds = 0;
    double apsp_seconds = 0;
    double covers_seconds = 0;
    double encode_seconds = 0;
    double total_seconds = 0;
};

// The data behind the degree-distribution, optimizer-trace and hub-size
// figures plus the one-row summary table. Values are recomputed from the
// build artifacts on every run, never cached.
struct StatsBundle {
    std::map<std::size_t, std::size_t> degree_distribution; // total degree -> node count
    std::vector<std::pair<std::size_t, std::uint32_t>> optimizer_trace;
    std::vector<std::uint32_t> hub_sizes; // per node of the largest SCC
    SummaryRow summary;
    StageTimings timings;
};

struct BuildArtifacts {
    SccReduction scc;
    Graph perturbed;     // largest SCC with perturbed costs
    ApspResult apsp;
    HubLabeling labeling;
    HubDatabase db;
    std::vector<std::uint8_t> db_bytes;
    StatsBundle stats;
    std::uint64_t seed_used = 0; // after uniqueness retries
};

namespace pipedetail {

class StageClock {
public:
    StageClock() : start_(std::chrono::steady_clock::now()) {}
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace pipedetail

// load -> largest SCC -> perturb (re-seeding on path-cost ties) -> APSP ->
// hub labeling (fixed l or optimizer) -> encode. The baseline l = 0 bound
// is always computed so the summary can report it next to the heuristic.
inline BuildArtifacts run_build(const BuildConfig& cfg, const Graph* preloaded = nullptr) {
    cfg.validate();
    pipedetail::StageClock clock;
    BuildArtifacts art;
    StageTimings& t = art.stats.timings;

    Graph input = preloaded ? *preloaded : load_snapshot(cfg.input_path, {cfg.lambda});
    t.load_seconds = clock.lap();

    art.scc = largest_scc(input);
    const Graph& core = art.scc.largest_component;
    t.scc_seconds = clock.lap();

    bool solved = false;
    for (unsigned attempt = 0; attempt < cfg.max_perturb_retries && !solved; ++attempt) {
        art.seed_used = cfg.seed + attempt;
        art.perturbed = perturb_weights(core, art.seed_used);
        try {
            art.apsp = compute_apsp(art.perturbed, cfg.threads);
            solved = true;
        } catch (const UniquenessFault&) {
            if (attempt + 1 == cfg.max_perturb_retries)
                throw UniquenessFault("apsp: path-cost ties persisted through " +
                                      std::to_string(cfg.max_perturb_retries) + " reseeds");
        }
    }
    t.apsp_seconds = clock.lap();

    if (cfg.optimize) {
        OptimizeResult opt = optimize_base_size(art.perturbed, art.apsp,
                                                cfg.optimizer_budget, cfg.threads);
        art.labeling = std::move(opt.labeling);
        art.stats.optimizer_trace = std::move(opt.trace);
        art.stats.summary.base_size = static_cast<std::uint32_t>(opt.best_l);
    } else {
        const std::size_t l = *cfg.fixed_l;
        art.labeling = compute_hub_labeling(art.perturbed, art.apsp, l, cfg.threads);
        art.stats.summary.base_size = static_cast<std::uint32_t>(l);
        art.stats.optimizer_trace.emplace_back(l, art.labeling.hd_bound);
    }
    // Baseline bound for the summary; the optimizer grid already starts at 0.
    std::uint32_t baseline = 0;
    bool have_baseline = false;
    for (const auto& [l, bound] : art.stats.optimizer_trace) {
        if (l == 0) {
            baseline = bound;
            have_baseline = true;
            break;
        }
    }
    if (!have_baseline) {
        baseline = art.labeling.base_size == 0
                       ? art.labeling.hd_bound
                       : compute_hub_labeling(art.perturbed, art.apsp, 0, cfg.threads).hd_bound;
    }
    t.covers_seconds = clock.lap();

    art.db = encode(art.labeling, art.perturbed.directory(), cfg.lambda);
    art.db_bytes = art.db.serialize();
    t.encode_seconds = clock.lap();
    t.total_seconds = t.load_seconds + t.scc_seconds + t.apsp_seconds + t.covers_seconds +
                      t.encode_seconds;

    for (NodeId u = 0; u < core.node_count(); ++u)
        ++art.stats.degree_distribution[core.total_degree(u)];
    art.stats.hub_sizes.reserve(art.labeling.hubs.size());
    for (const auto& entries : art.labeling.hubs)
        art.stats.hub_sizes.push_back(static_cast<std::uint32_t>(entries.size()));

    SummaryRow& row = art.stats.summary;
    row.input = cfg.input_path.empty() ? "<memory>" : cfg.input_path;
    row.nodes = input.node_count();
    row.edges = input.edge_count();
    row.scc_count = art.scc.component_count;
    row.largest_scc_nodes = core.node_count();
    row.largest_scc_edges = core.edge_count();
    row.hop_diameter = art.apsp.max_hops;
    row.baseline_hd_bound = baseline;
    row.heuristic_hd_bound = art.labeling.hd_bound;
    row.base_size = art.labeling.base_size;
    row.max_hub_set_size = art.labeling.max_hub_size;
    row.max_hub_set_size_excl_self = art.labeling.max_hub_size_excl_self;
    row.hub_db_bytes = art.db_bytes.size();
    row.build_seconds = t.total_seconds;

    if (!cfg.output_db.empty()) {
        std::ofstream out(cfg.output_db, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write database: " + cfg.output_db);
        out.write(reinterpret_cast<const char*>(art.db_bytes.data()),
                  static_cast<std::streamsize>(art.db_bytes.size()));
        if (!out) throw Error("short write: " + cfg.output_db);
        // Directory sidecar: header + directory sections, no records. This
        // is the public metadata clients load out of band.
        HubDatabase dir_only;
        dir_only.header = art.db.header;
        dir_only.labels = art.db.labels;
        const auto dir_bytes = dir_only.serialize();
        std::ofstream dout(cfg.output_db + ".dir", std::ios::binary | std::ios::trunc);
        dout.write(reinterpret_cast<const char*>(dir_bytes.data()),
                   static_cast<std::streamsize>(dir_bytes.size()));
        if (!dout) throw Error("short write: " + cfg.output_db + ".dir");
    }
    return art;
}

inline void write_stats_csvs(const StatsBundle& stats, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "degree_distribution.csv");
        out << "degree,count\n";
        for (const auto& [deg, cnt] : stats.degree_distribution) out << deg << ',' << cnt << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "optimizer_trace.csv");
        out << "ell,hd_bound\n";
        for (const auto& [l, bound] : stats.optimizer_trace) out << l << ',' << bound << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "hub_sizes.csv");
        out << "node_index,hub_set_size\n";
        for (std::size_t i = 0; i < stats.hub_sizes.size(); ++i)
            out << i << ',' << stats.hub_sizes[i] << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "summary.csv");
        const SummaryRow& r = stats.summary;
        out << "input,nodes,edges,scc_count,largest_scc_nodes,largest_scc_edges,"
               "hop_diameter,baseline_hd_bound,heuristic_hd_bound,base_size,"
               "max_hub_set_size,max_hub_set_size_excl_self,hub_db_bytes,build_seconds\n";
        out << r.input << ',' << r.nodes << ',' << r.edges << ',' << r.scc_count << ','
            << r.largest_scc_nodes << ',' << r.largest_scc_edges << ',' << r.hop_diameter << ','
            << r.baseline_hd_bound << ',' << r.heuristic_hd_bound << ',' << r.base_size << ','
            << r.max_hub_set_size << ',' << r.max_hub_set_size_excl_self << ','
            << r.hub_db_bytes << ',' << r.build_seconds << '\n';
    }
}

} // namespace hubpir
