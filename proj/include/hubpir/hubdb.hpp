#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "hubpir/bits.hpp"
#include "hubpir/errors.hpp"
#include "hubpir/graph.hpp"
#include "hubpir/hubs.hpp"

namespace hubpir {

// On-disk layout, little-endian throughout:
//
//   magic "LPIR" | version u16 | lambda u16 | N u32 | h_max u32 |
//   d_max u16 | L_bits u64                              (26-byte header)
//   directory: N x (u16 length + label bytes)
//   records:   N x ceil(L_bits / 8) bytes, zero-padded in the last byte
//
// Every record is h_max fixed-width slots. Slot fields in order: hub index
// (lambda bits), out hop count (8), in hop count (8), out base-cost
// distance (64), in base-cost distance (64), out path intermediate nodes
// (d_max * lambda bits, zero-padded), in path likewise. Fixed slots keep
// every record the same length, which the PIR layer requires; a padding
// slot carries hub index 2^lambda - 1, which cannot collide with a real
// node because encode enforces n < 2^lambda strictly.

constexpr char kDbMagic[4] = {'L', 'P', 'I', 'R'};
constexpr std::uint16_t kDbVersion = 1;
constexpr std::size_t kDbHeaderBytes = 26;

struct DbHeader {
    std::uint16_t version = kDbVersion;
    std::uint16_t lambda = 32;
    std::uint32_t record_count = 0; // N, one record per node
    std::uint32_t h_max = 0;
    std::uint16_t d_max = 0;
    std::uint64_t record_bits = 0; // L

    std::size_t record_bytes() const { return (record_bits + 7) / 8; }
    std::size_t slot_bits() const {
        return lambda + 8 + 8 + 64 + 64 + 2 * std::size_t{d_max} * lambda;
    }
    std::uint64_t pad_hub_index() const { return (std::uint64_t{1} << lambda) - 1; }
};

class HubDatabase {
public:
    DbHeader header;
    std::vector<std::string> labels;   // directory, index order
    std::vector<std::uint8_t> payload; // N * record_bytes

    const std::uint8_t* record(std::size_t i) const {
        return payload.data() + i * header.record_bytes();
    }

    std::size_t directory_bytes() const {
        std::size_t s = 0;
        for (const auto& l : labels) s += 2 + l.size();
        return s;
    }

    std::size_t total_bytes() const {
        return kDbHeaderBytes + directory_bytes() + payload.size();
    }

    std::vector<std::uint8_t> serialize() const {
        std::vector<std::uint8_t> out;
        out.reserve(total_bytes());
        auto put16 = [&](std::uint16_t v) {
            out.push_back(v & 0xff);
            out.push_back(v >> 8);
        };
        auto put32 = [&](std::uint32_t v) {
            for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
        };
        auto put64 = [&](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
        };
        out.insert(out.end(), kDbMagic, kDbMagic + 4);
        put16(header.version);
        put16(header.lambda);
        put32(header.record_count);
        put32(header.h_max);
        put16(header.d_max);
        put64(header.record_bits);
        for (const auto& l : labels) {
            if (l.size() > 0xffff) throw CapacityError("node label longer than 65535 bytes");
            put16(static_cast<std::uint16_t>(l.size()));
            out.insert(out.end(), l.begin(), l.end());
        }
        out.insert(out.end(), payload.begin(), payload.end());
        return out;
    }

    // Accepts either a full database or a directory-only file (header +
    // directory with no record section).
    static HubDatabase deserialize(const std::vector<std::uint8_t>& bytes) {
        HubDatabase db;
        std::size_t pos = 0;
        auto need = [&](std::size_t k) {
            if (pos + k > bytes.size()) throw FormatError("database file truncated");
        };
        need(kDbHeaderBytes);
        if (!std::equal(kDbMagic, kDbMagic + 4, bytes.begin()))
            throw FormatError("bad magic, not a hub database");
        auto get16 = [&]() {
            std::uint16_t v = bytes[pos] | (std::uint16_t{bytes[pos + 1]} << 8);
            pos += 2;
            return v;
        };
        auto get32 = [&]() {
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[pos + i]} << (8 * i);
            pos += 4;
            return v;
        };
        auto get64 = [&]() {
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[pos + i]} << (8 * i);
            pos += 8;
            return v;
        };
        pos = 4;
        db.header.version = get16();
        if (db.header.version != kDbVersion) throw FormatError("unsupported database version");
        db.header.lambda = get16();
        db.header.record_count = get32();
        db.header.h_max = get32();
        db.header.d_max = get16();
        db.header.record_bits = get64();
        if (db.header.lambda == 0 || db.header.lambda > 32)
            throw FormatError("label width out of range");
        if (db.header.record_bits !=
            std::uint64_t{db.header.h_max} * db.header.slot_bits())
            throw FormatError("record length inconsistent with slot layout");
        db.labels.reserve(db.header.record_count);
        for (std::uint32_t i = 0; i < db.header.record_count; ++i) {
            need(2);
            const std::uint16_t len = get16();
            need(len);
            db.labels.emplace_back(bytes.begin() + pos, bytes.begin() + pos + len);
            pos += len;
        }
        const std::size_t payload_bytes =
            std::size_t{db.header.record_count} * db.header.record_bytes();
        if (pos == bytes.size()) return db; // directory-only file
        need(payload_bytes);
        if (bytes.size() - pos != payload_bytes)
            throw FormatError("record section has unexpected size");
        db.payload.assign(bytes.begin() + pos, bytes.end());
        return db;
    }

    bool has_records() const { return !payload.empty() || header.record_count == 0; }

    // Digest over the directory section bytes only; servers publish it in
    // META so a client can check its out-of-band directory copy.
    std::uint64_t directory_digest() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& l : labels) {
            const std::uint8_t len[2] = {static_cast<std::uint8_t>(l.size() & 0xff),
                                         static_cast<std::uint8_t>(l.size() >> 8)};
            h = fnv1a64(len, 2, h);
            h = fnv1a64(reinterpret_cast<const std::uint8_t*>(l.data()), l.size(), h);
        }
        return h;
    }
};

inline void write_db_file(const HubDatabase& db, const std::string& path) {
    const auto bytes = db.serialize();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write: " + path);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error("cannot open: " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw Error("short read: " + path);
    return bytes;
}

inline HubDatabase read_db_file(const std::string& path) {
    return HubDatabase::deserialize(read_file_bytes(path));
}

// Serializes a labeling into the fixed-record format. h_max and d_max are
// taken from the labeling content so the encoding is minimal for the
// input; slots are sorted by hub index, making the output a pure function
// of the labeling.
inline HubDatabase encode(const HubLabeling& labeling, const NodeDirectory& directory,
                          unsigned lambda) {
    const std::size_t n = labeling.hubs.size();
    if (directory.size() != n) throw ValidationError("directory does not match labeling");
    if (lambda == 0 || lambda > 32) throw ValidationError("label width must be in [1, 32]");
    if (n >= (std::uint64_t{1} << lambda))
        throw CapacityError("lambda too small: need n < 2^lambda for the padding sentinel");

    HubDatabase db;
    db.header.lambda = static_cast<std::uint16_t>(lambda);
    db.header.record_count = static_cast<std::uint32_t>(n);

    std::size_t h_max = 0, d_max = 0;
    for (std::size_t u = 0; u < n; ++u) {
        h_max = std::max(h_max, labeling.hubs[u].size());
        for (const HubEntry& e : labeling.hubs[u]) {
            if (e.out_path.empty() || e.in_path.empty() ||
                e.out_path.front() != u || e.out_path.back() != e.hub ||
                e.in_path.front() != e.hub || e.in_path.back() != u)
                throw ValidationError("hub entry paths do not connect node and hub");
            d_max = std::max({d_max, e.out_path.size() - 1, e.in_path.size() - 1});
        }
    }
    if (d_max > 255) throw CapacityError("path hop count exceeds 255");
    db.header.h_max = static_cast<std::uint32_t>(h_max);
    db.header.d_max = static_cast<std::uint16_t>(d_max);
    db.header.record_bits = std::uint64_t{db.header.h_max} * db.header.slot_bits();

    db.labels = directory.labels();
    const std::size_t rec_bytes = db.header.record_bytes();
    db.payload.assign(n * rec_bytes, 0);

    const std::size_t slot_bits = db.header.slot_bits();
    const unsigned path_field_bits = static_cast<unsigned>(db.header.d_max) * lambda;
    for (std::size_t u = 0; u < n; ++u) {
        std::vector<std::uint8_t> rec(rec_bytes, 0);
        BitWriter w(rec);
        std::size_t slot = 0;
        for (const HubEntry& e : labeling.hubs[u]) {
            if (e.hub >= n) throw ValidationError("hub index outside directory");
            w.seek(slot * slot_bits);
            w.write(e.hub, lambda);
            const std::size_t out_hops = e.out_path.size() - 1;
            const std::size_t in_hops = e.in_path.size() - 1;
            w.write(out_hops, 8);
            w.write(in_hops, 8);
            w.write(e.out_base, 64);
            w.write(e.in_base, 64);
            const std::size_t path_base = w.bit_position();
            for (std::size_t i = 1; i + 1 < e.out_path.size(); ++i)
                w.write(e.out_path[i], lambda);
            w.seek(path_base + path_field_bits);
            for (std::size_t i = 1; i + 1 < e.in_path.size(); ++i)
                w.write(e.in_path[i], lambda);
            ++slot;
        }
        for (; slot < h_max; ++slot) {
            w.seek(slot * slot_bits);
            w.write(db.header.pad_hub_index(), lambda);
        }
        if (rec.size() > rec_bytes) throw ValidationError("record overflow");
        rec.resize(rec_bytes, 0);
        std::copy(rec.begin(), rec.end(), db.payload.begin() + u * rec_bytes);
    }
    return db;
}

// Inverse of encode for one record; padding slots are dropped. Real slots
// after a padding slot mean the record bytes are corrupt. The record bytes
// can come from the local payload or from a PIR retrieval.
inline std::vector<HubEntry> decode_record_bytes(const DbHeader& header,
                                                 const std::uint8_t* record_bytes,
                                                 std::size_t node_index) {
    const unsigned lambda = header.lambda;
    const std::size_t slot_bits = header.slot_bits();
    const unsigned path_field_bits = static_cast<unsigned>(header.d_max) * lambda;
    BitReader r(record_bytes, header.record_bytes() * 8);
    std::vector<HubEntry> entries;
    bool pad_seen = false;
    for (std::uint32_t slot = 0; slot < header.h_max; ++slot) {
        r.seek(slot * slot_bits);
        const std::uint64_t hub = r.read(lambda);
        if (hub == header.pad_hub_index()) {
            pad_seen = true;
            continue;
        }
        if (pad_seen) throw FormatError("real slot after padding slot");
        if (hub >= header.record_count) throw FormatError("hub index out of range");
        HubEntry e;
        e.hub = static_cast<NodeId>(hub);
        const std::uint64_t out_hops = r.read(8);
        const std::uint64_t in_hops = r.read(8);
        e.out_base = r.read(64);
        e.in_base = r.read(64);
        if (out_hops > header.d_max || in_hops > header.d_max)
            throw FormatError("hop count exceeds d_max");
        const std::size_t path_base = r.bit_position();
        e.out_path.push_back(static_cast<NodeId>(node_index));
        for (std::uint64_t k = 0; out_hops > 0 && k < out_hops - 1; ++k) {
            const std::uint64_t v = r.read(lambda);
            if (v >= header.record_count) throw FormatError("path node out of range");
            e.out_path.push_back(static_cast<NodeId>(v));
        }
        if (out_hops > 0) e.out_path.push_back(e.hub);
        r.seek(path_base + path_field_bits);
        e.in_path.push_back(e.hub);
        for (std::uint64_t k = 0; in_hops > 0 && k < in_hops - 1; ++k) {
            const std::uint64_t v = r.read(lambda);
            if (v >= header.record_count) throw FormatError("path node out of range");
            e.in_path.push_back(static_cast<NodeId>(v));
        }
        if (in_hops > 0) e.in_path.push_back(static_cast<NodeId>(node_index));
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::vector<HubEntry> decode_record(const HubDatabase& db, std::size_t i) {
    if (i >= db.header.record_count) throw ValidationError("record index out of range");
    if (!db.has_records()) throw FormatError("directory-only file has no records");
    return decode_record_bytes(db.header, db.record(i), i);
}

struct DbStats {
    std::uint32_t record_count = 0;
    std::uint64_t record_bits = 0;
    std::size_t total_bytes = 0;
    std::uint32_t h_max = 0;
    std::map<std::uint32_t, std::uint32_t> real_slot_histogram; // size -> record count
};

inline DbStats db_stats(const HubDatabase& db) {
    DbStats s;
    s.record_count = db.header.record_count;
    s.record_bits = db.header.record_bits;
    s.total_bytes = db.total_bytes();
    s.h_max = db.header.h_max;
    for (std::uint32_t i = 0; i < db.header.record_count; ++i) {
        const auto entries = decode_record(db, i);
        ++s.real_slot_histogram[static_cast<std::uint32_t>(entries.size())];
    }
    return s;
}

} // namespace hubpir
