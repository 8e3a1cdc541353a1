#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <vector>

#include "hubpir/hubdb.hpp"
#include "hubpir/pir.hpp"
#include "hubpir/wire.hpp"

namespace hubpir {

// The client saw an intersection the database cannot produce for a healthy
// strongly connected snapshot; points at a stale or corrupt replica.
class StaleDatabaseError : public Error {
public:
    using Error::Error;
};

struct DbVersion {
    std::uint64_t counter = 1;   // publish sequence number
    std::uint64_t digest = 0;    // FNV-1a over the whole database file
};

struct MetaInfo {
    DbVersion version;
    DbHeader header;
    std::uint64_t directory_digest = 0;
};

namespace wiredetail {

inline std::vector<std::uint8_t> encode_meta(const MetaInfo& m) {
    std::vector<std::uint8_t> body;
    put64(body, m.version.counter);
    put64(body, m.version.digest);
    body.insert(body.end(), kDbMagic, kDbMagic + 4);
    put16(body, m.header.version);
    put16(body, m.header.lambda);
    put32(body, m.header.record_count);
    put32(body, m.header.h_max);
    put16(body, m.header.d_max);
    put64(body, m.header.record_bits);
    put64(body, m.directory_digest);
    return body;
}

inline MetaInfo decode_meta(const std::vector<std::uint8_t>& body) {
    Cursor c(body);
    MetaInfo m;
    m.version.counter = c.get64();
    m.version.digest = c.get64();
    const auto magic = c.bytes(4);
    if (!std::equal(kDbMagic, kDbMagic + 4, magic.begin()))
        throw ProtocolError("META carries foreign header");
    m.header.version = c.get16();
    m.header.lambda = c.get16();
    m.header.record_count = c.get32();
    m.header.h_max = c.get32();
    m.header.d_max = c.get16();
    m.header.record_bits = c.get64();
    m.directory_digest = c.get64();
    return m;
}

inline std::vector<std::uint8_t> encode_bitvec(const BitVec& v) {
    std::vector<std::uint8_t> out;
    put32(out, static_cast<std::uint32_t>(v.size()));
    const auto bytes = v.to_bytes();
    out.insert(out.end(), bytes.begin(), bytes.end());
    return out;
}

inline BitVec decode_bitvec(Cursor& c) {
    const std::uint32_t bits = c.get32();
    const auto bytes = c.bytes((bits + 7) / 8);
    return BitVec::from_bytes(bytes.data(), bits);
}

} // namespace wiredetail

// One database snapshot loaded into memory with the matrix views the
// query path needs. Immutable after construction; safe to share across
// connection handlers.
class ServedDatabase {
public:
    explicit ServedDatabase(const std::string& path) {
        const auto bytes = read_file_bytes(path);
        db_ = HubDatabase::deserialize(bytes);
        if (!db_.has_records()) throw FormatError("directory-only file cannot be served");
        meta_.version.digest = fnv1a64(bytes);
        meta_.version.counter = read_version_counter(path).value_or(1);
        meta_.header = db_.header;
        meta_.directory_digest = db_.directory_digest();
        column_view_ = std::make_unique<PirMatrixView>(
            db_.payload.data(), db_.header.record_count, db_.header.record_bits,
            PirMode::kColumnAligned);
    }

    const MetaInfo& meta() const { return meta_; }
    const HubDatabase& db() const { return db_; }

    const PirMatrixView& view(PirMode mode) const {
        if (mode == PirMode::kColumnAligned) return *column_view_;
        // The balanced view is rarely requested for hub databases; build
        // it on first use.
        std::call_once(balanced_once_, [&] {
            balanced_view_ = std::make_unique<PirMatrixView>(
                db_.payload.data(), db_.header.record_count, db_.header.record_bits,
                PirMode::kBalanced);
        });
        return *balanced_view_;
    }

    static std::optional<std::uint64_t> read_version_counter(const std::string& db_path) {
        std::ifstream in(db_path + ".version");
        std::uint64_t c = 0;
        if (in >> c) return c;
        return std::nullopt;
    }

private:
    HubDatabase db_;
    MetaInfo meta_;
    std::unique_ptr<PirMatrixView> column_view_;
    mutable std::unique_ptr<PirMatrixView> balanced_view_;
    mutable std::once_flag balanced_once_;
};

// PIR server daemon: loads the database once, then answers HELLO with META
// and QUERY with one XOR aggregation pass. Every QUERY gets exactly one
// ANSWER or ERROR.
class Server {
public:
    Server(std::shared_ptr<const ServedDatabase> db, const std::string& host,
           std::uint16_t port)
        : db_(std::move(db)), listener_(host, port) {}

    explicit Server(const std::string& db_path, const std::string& host = "127.0.0.1",
                    std::uint16_t port = 0)
        : Server(std::make_shared<const ServedDatabase>(db_path), host, port) {}

    ~Server() { stop(); }

    std::uint16_t port() const { return listener_.port(); }

    void start() {
        running_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    // Blocks until stop() is called from another thread or the process dies.
    void run() {
        running_ = true;
        accept_loop();
    }

    void stop() {
        if (!running_.exchange(false)) return;
        listener_.close_now();
        {
            std::lock_guard<std::mutex> lock(conn_mutex_);
            for (auto& s : connections_)
                if (s) s->shutdown_both();
        }
        if (accept_thread_.joinable()) accept_thread_.join();
        for (auto& t : workers_)
            if (t.joinable()) t.join();
    }

private:
    void accept_loop() {
        while (running_) {
            Socket conn = listener_.accept_connection();
            if (!conn.valid()) break;
            auto shared_conn = std::make_shared<Socket>(std::move(conn));
            {
                std::lock_guard<std::mutex> lock(conn_mutex_);
                connections_.push_back(shared_conn);
            }
            workers_.emplace_back([this, shared_conn] { handle(*shared_conn); });
        }
    }

    void handle(Socket& conn) {
        try {
            Frame frame;
            while (running_ && conn.recv_frame(frame)) {
                switch (frame.type) {
                    case FrameType::kHello:
                        conn.send_frame(FrameType::kMeta, wiredetail::encode_meta(db_->meta()));
                        break;
                    case FrameType::kQuery:
                        if (!handle_query(conn, frame.body)) return;
                        break;
                    default:
                        send_error(conn, WireError::kBadFrame, "unexpected frame type");
                        return; // protocol violation: close
                }
            }
        } catch (const ProtocolError&) {
            send_error(conn, WireError::kBadFrame, "malformed frame");
        } catch (const std::exception&) {
            // Dead peer; nothing to answer.
        }
    }

    bool handle_query(Socket& conn, const std::vector<std::uint8_t>& body) {
        std::uint64_t version = 0;
        std::uint8_t mode_byte = 0;
        BitVec q;
        try {
            wiredetail::Cursor c(body);
            version = c.get64();
            mode_byte = c.get8();
            q = wiredetail::decode_bitvec(c);
        } catch (const std::exception&) {
            send_error(conn, WireError::kBadFrame, "malformed QUERY body");
            return false;
        }
        if (version != db_->meta().version.digest) {
            send_error(conn, WireError::kVersionMismatch, "db version not held");
            return true;
        }
        if (mode_byte > 1) {
            send_error(conn, WireError::kBadMode, "unknown matrix mode");
            return true;
        }
        const PirMode mode = static_cast<PirMode>(mode_byte);
        const auto& view = db_->view(mode);
        if (q.size() != view.shape().cols) {
            send_error(conn, WireError::kLengthMismatch, "query vector length mismatch");
            return true;
        }
        const BitVec a = view.answer(q);
        std::vector<std::uint8_t> reply;
        wiredetail::put64(reply, version);
        const auto encoded = wiredetail::encode_bitvec(a);
        reply.insert(reply.end(), encoded.begin(), encoded.end());
        conn.send_frame(FrameType::kAnswer, reply);
        return true;
    }

    static void send_error(Socket& conn, WireError code, const std::string& msg) {
        std::vector<std::uint8_t> body;
        wiredetail::put16(body, static_cast<std::uint16_t>(code));
        body.insert(body.end(), msg.begin(), msg.end());
        try {
            conn.send_frame(FrameType::kError, body);
        } catch (const std::exception&) {
        }
    }

    std::shared_ptr<const ServedDatabase> db_;
    Listener listener_;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::vector<std::thread> workers_;
    std::mutex conn_mutex_;
    std::vector<std::shared_ptr<Socket>> connections_;
};

// Client end of one server connection: HELLO handshake up front, then any
// number of PIR queries. Byte counters cover everything on the wire and
// can be marked to measure a single retrieval.
class ServerSession {
public:
    ServerSession(const std::string& host, std::uint16_t port)
        : socket_(Socket::connect_to(host, port)) {
        socket_.send_frame(FrameType::kHello, {});
        Frame frame;
        if (!socket_.recv_frame(frame)) throw TransportError("server closed during handshake");
        if (frame.type == FrameType::kError) throw_error(frame);
        if (frame.type != FrameType::kMeta) throw ProtocolError("expected META");
        meta_ = wiredetail::decode_meta(frame.body);
    }

    const MetaInfo& meta() const { return meta_; }

    BitVec pir_query(PirMode mode, const BitVec& q) {
        std::vector<std::uint8_t> body;
        wiredetail::put64(body, meta_.version.digest);
        body.push_back(static_cast<std::uint8_t>(mode));
        const auto encoded = wiredetail::encode_bitvec(q);
        body.insert(body.end(), encoded.begin(), encoded.end());
        socket_.send_frame(FrameType::kQuery, body);
        Frame frame;
        if (!socket_.recv_frame(frame)) throw TransportError("server closed mid-query");
        if (frame.type == FrameType::kError) throw_error(frame);
        if (frame.type != FrameType::kAnswer) throw ProtocolError("expected ANSWER");
        wiredetail::Cursor c(frame.body);
        const std::uint64_t version = c.get64();
        if (version != meta_.version.digest)
            throw ProtocolError("ANSWER version does not match QUERY");
        return wiredetail::decode_bitvec(c);
    }

    void mark_bytes() {
        sent_mark_ = socket_.bytes_sent();
        recv_mark_ = socket_.bytes_received();
    }
    std::uint64_t bytes_sent_since_mark() const { return socket_.bytes_sent() - sent_mark_; }
    std::uint64_t bytes_received_since_mark() const {
        return socket_.bytes_received() - recv_mark_;
    }

    AnswerEndpoint endpoint() {
        return AnswerEndpoint{meta_.version.digest,
                              [this](PirMode mode, const BitVec& q) {
                                  return pir_query(mode, q);
                              }};
    }

private:
    [[noreturn]] static void throw_error(const Frame& frame) {
        wiredetail::Cursor c(frame.body);
        const std::uint16_t code = c.get16();
        const auto rest = c.bytes(c.remaining());
        const std::string msg(rest.begin(), rest.end());
        if (code == static_cast<std::uint16_t>(WireError::kVersionMismatch))
            throw ReplicaMismatchError("server: " + msg);
        throw ProtocolError("server error " + std::to_string(code) + ": " + msg);
    }

    Socket socket_;
    MetaInfo meta_;
    std::uint64_t sent_mark_ = 0;
    std::uint64_t recv_mark_ = 0;
};

struct HostPort {
    std::string host;
    std::uint16_t port = 0;

    static HostPort parse(const std::string& s) {
        const auto colon = s.rfind(':');
        if (colon == std::string::npos) throw ValidationError("expected host:port, got " + s);
        HostPort hp;
        hp.host = s.substr(0, colon);
        const auto p = std::stoul(s.substr(colon + 1));
        if (p > 0xffff) throw ValidationError("port out of range in " + s);
        hp.port = static_cast<std::uint16_t>(p);
        return hp;
    }
};

struct RetrievalBytes {
    std::uint64_t sent_per_server = 0;
    std::uint64_t received_per_server = 0;
};

struct RouteResult {
    std::vector<std::string> path;    // external labels, source first
    std::uint64_t total_base_cost = 0;
    NodeId via_hub = 0;
    std::vector<RetrievalBytes> retrievals; // one entry per private retrieval
};

// Fixed wire cost of one retrieval beyond the two bit vectors: the QUERY
// frame adds length prefix 4 + type 1 + version 8 + mode 1 + bit count 4,
// and the ANSWER frame adds 4 + 1 + 8 + 4.
constexpr std::uint64_t kQueryFrameOverhead = 18;
constexpr std::uint64_t kAnswerFrameOverhead = 17;
constexpr std::uint64_t kRetrievalFrameOverhead = kQueryFrameOverhead + kAnswerFrameOverhead;

// Intersects two decoded hub entry lists (sorted by hub index) and picks
// the hub minimizing out-distance plus in-distance in base-cost units,
// ties to the smaller hub index.
inline std::pair<HubEntry, HubEntry> best_common_hub(const std::vector<HubEntry>& from_s,
                                                     const std::vector<HubEntry>& from_t) {
    const HubEntry* best_out = nullptr;
    const HubEntry* best_in = nullptr;
    std::size_t i = 0, j = 0;
    while (i < from_s.size() && j < from_t.size()) {
        if (from_s[i].hub < from_t[j].hub) {
            ++i;
        } else if (from_s[i].hub > from_t[j].hub) {
            ++j;
        } else {
            const std::uint64_t cost = from_s[i].out_base + from_t[j].in_base;
            if (!best_out || cost < best_out->out_base + best_in->in_base) {
                best_out = &from_s[i];
                best_in = &from_t[j];
            }
            ++i;
            ++j;
        }
    }
    if (!best_out)
        throw StaleDatabaseError(
            "hub sets do not intersect; replicas are stale or corrupt");
    return {*best_out, *best_in};
}

// Private route discovery: two independent record retrievals (source and
// target), hub set intersection, argmin over summed base costs, path
// concatenation through the chosen hub.
template <typename Rng>
RouteResult client_route_query(const HostPort& server1, const HostPort& server2,
                               const HubDatabase& directory, const std::string& s_label,
                               const std::string& t_label, Rng& rng,
                               PirMode mode = PirMode::kColumnAligned) {
    std::unordered_map<std::string, NodeId> index;
    index.reserve(directory.labels.size());
    for (std::size_t i = 0; i < directory.labels.size(); ++i)
        index.emplace(directory.labels[i], static_cast<NodeId>(i));
    const auto s_it = index.find(s_label);
    const auto t_it = index.find(t_label);
    if (s_it == index.end()) throw ValidationError("unknown source label: " + s_label);
    if (t_it == index.end()) throw ValidationError("unknown target label: " + t_label);

    RouteResult result;
    if (s_label == t_label) {
        result.path = {s_label};
        return result;
    }

    ServerSession session1(server1.host, server1.port);
    ServerSession session2(server2.host, server2.port);
    if (session1.meta().version.digest != session2.meta().version.digest)
        throw ReplicaMismatchError("servers hold different database contents");
    const MetaInfo& meta = session1.meta();
    if (meta.directory_digest != directory.directory_digest())
        throw ReplicaMismatchError("local directory does not match served database");

    const DbShape shape{meta.header.record_count, meta.header.record_bits};
    AnswerEndpoint e1 = session1.endpoint();
    AnswerEndpoint e2 = session2.endpoint();

    auto retrieve = [&](NodeId node) {
        session1.mark_bytes();
        session2.mark_bytes();
        const BitVec bits = retrieve_record(e1, e2, shape, node, rng, mode);
        RetrievalBytes rb;
        rb.sent_per_server = session1.bytes_sent_since_mark();
        rb.received_per_server = session1.bytes_received_since_mark();
        if (session2.bytes_sent_since_mark() != rb.sent_per_server ||
            session2.bytes_received_since_mark() != rb.received_per_server)
            throw ProtocolError("asymmetric traffic between replicas");
        result.retrievals.push_back(rb);
        const auto bytes = bits.to_bytes();
        return decode_record_bytes(meta.header, bytes.data(), node);
    };

    const auto hubs_s = retrieve(s_it->second);
    const auto hubs_t = retrieve(t_it->second);
    const auto [out_leg, in_leg] = best_common_hub(hubs_s, hubs_t);

    result.via_hub = out_leg.hub;
    result.total_base_cost = out_leg.out_base + in_leg.in_base;
    std::vector<NodeId> nodes(out_leg.out_path);
    nodes.insert(nodes.end(), in_leg.in_path.begin() + 1, in_leg.in_path.end());
    result.path.reserve(nodes.size());
    for (NodeId v : nodes) result.path.push_back(directory.labels.at(v));
    return result;
}

struct PublishReceipt {
    DbVersion version;
    std::vector<std::string> paths; // final database path per target
};

// Distributes a database file to two server directories. Both targets are
// staged before either is committed; failure during staging rolls back and
// leaves previously published content untouched.
inline PublishReceipt publish(const std::string& db_file,
                              const std::vector<std::string>& target_dirs) {
    namespace fs = std::filesystem;
    if (target_dirs.size() != 2) throw ValidationError("publish expects exactly two targets");
    const auto bytes = read_file_bytes(db_file);
    HubDatabase::deserialize(bytes); // verify before distributing

    PublishReceipt receipt;
    receipt.version.digest = fnv1a64(bytes);
    std::uint64_t counter = 0;
    for (const auto& dir : target_dirs) {
        const auto existing = ServedDatabase::read_version_counter(
            (fs::path(dir) / "hub.db").string());
        counter = std::max(counter, existing.value_or(0));
    }
    receipt.version.counter = counter + 1;

    std::vector<fs::path> staged;
    auto rollback = [&] {
        std::error_code ec;
        for (const auto& p : staged) fs::remove(p, ec);
    };
    try {
        for (const auto& dir : target_dirs) {
            if (!fs::is_directory(dir))
                throw TransportError("publish target is not a directory: " + dir);
            const fs::path tmp = fs::path(dir) / ".hub.db.staging";
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw TransportError("cannot stage into " + dir);
            out.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
            out.flush();
            if (!out) throw TransportError("short staging write in " + dir);
            staged.push_back(tmp);
            const fs::path vtmp = fs::path(dir) / ".hub.db.version.staging";
            std::ofstream vout(vtmp);
            vout << receipt.version.counter << '\n';
            vout.flush();
            if (!vout) throw TransportError("cannot stage version file in " + dir);
            staged.push_back(vtmp);
        }
    } catch (...) {
        rollback();
        throw;
    }
    // Both replicas staged; commit. Renames within a directory are the
    // closest this gets to atomic on a plain filesystem.
    for (const auto& dir : target_dirs) {
        fs::rename(fs::path(dir) / ".hub.db.staging", fs::path(dir) / "hub.db");
        fs::rename(fs::path(dir) / ".hub.db.version.staging",
                   fs::path(dir) / "hub.db.version");
        receipt.paths.push_back((fs::path(dir) / "hub.db").string());
    }
    return receipt;
}

} // namespace hubpir
