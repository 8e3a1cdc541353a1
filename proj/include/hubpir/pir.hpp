#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <random>
#include <vector>

#include "hubpir/bits.hpp"
#include "hubpir/errors.hpp"

namespace hubpir {

// Two ways to shape the database as a bit matrix. Column-aligned keeps one
// record per column (rows = L, cols = N), so one query pair retrieves a
// whole record; it is the cheaper choice whenever L >= N, which holds for
// hub databases by a wide margin. Balanced squares the matrix at
// ceil(sqrt(N*L)) per side for databases with L < N.
enum class PirMode : std::uint8_t { kColumnAligned = 0, kBalanced = 1 };

struct PirShape {
    std::size_t rows = 0; // bits per answer
    std::size_t cols = 0; // bits per query

    static PirShape shape_for(std::size_t record_count, std::size_t record_bits, PirMode mode) {
        PirShape s;
        if (mode == PirMode::kColumnAligned) {
            s.rows = record_bits;
            s.cols = record_count;
        } else {
            const long double total =
                static_cast<long double>(record_count) * static_cast<long double>(record_bits);
            auto side = static_cast<std::size_t>(std::ceil(std::sqrt(total)));
            while (side * side < record_count * record_bits) ++side;
            s.rows = s.cols = side;
        }
        return s;
    }
};

// Immutable matrix view over a database payload. Columns are pre-packed
// into 64-bit words so a query is answered by one wide XOR pass; the
// contract stays bit-level, the packing is internal.
class PirMatrixView {
public:
    PirMatrixView(const std::uint8_t* payload, std::size_t record_count,
                  std::size_t record_bits, PirMode mode)
        : shape_(PirShape::shape_for(record_count, record_bits, mode)), mode_(mode) {
        words_per_col_ = (shape_.rows + 63) / 64;
        columns_.assign(shape_.cols * words_per_col_, 0);
        const std::size_t total_bits = record_count * record_bits;
        if (mode == PirMode::kColumnAligned) {
            const std::size_t rec_bytes = (record_bits + 7) / 8;
            for (std::size_t c = 0; c < record_count; ++c)
                std::memcpy(&columns_[c * words_per_col_], payload + c * rec_bytes, rec_bytes);
        } else {
            // Column j holds payload bits [j*rows, (j+1)*rows); records are
            // packed back to back with no per-record byte padding.
            for (std::size_t bit = 0; bit < total_bits; ++bit) {
                const std::size_t rec = bit / record_bits;
                const std::size_t off = bit % record_bits;
                const std::size_t rec_bytes = (record_bits + 7) / 8;
                const std::uint8_t byte = payload[rec * rec_bytes + off / 8];
                if ((byte >> (off % 8)) & 1u) {
                    const std::size_t col = bit / shape_.rows;
                    const std::size_t row = bit % shape_.rows;
                    columns_[col * words_per_col_ + row / 64] |= std::uint64_t{1} << (row % 64);
                }
            }
        }
    }

    const PirShape& shape() const { return shape_; }
    PirMode mode() const { return mode_; }

    // a = M * q over GF(2): XOR of the columns selected by q.
    BitVec answer(const BitVec& q) const {
        if (q.size() != shape_.cols) throw ProtocolError("query vector length mismatch");
        BitVec out(shape_.rows);
        std::uint64_t* acc = out.words();
        for (std::size_t w = 0; w < q.word_count(); ++w) {
            std::uint64_t bits = q.words()[w];
            while (bits) {
                const unsigned b = static_cast<unsigned>(__builtin_ctzll(bits));
                bits &= bits - 1;
                const std::size_t col = w * 64 + b;
                const std::uint64_t* src = &columns_[col * words_per_col_];
                for (std::size_t k = 0; k < words_per_col_; ++k) acc[k] ^= src[k];
            }
        }
        return out;
    }

private:
    PirShape shape_;
    PirMode mode_;
    std::size_t words_per_col_ = 0;
    std::vector<std::uint64_t> columns_;
};

struct PirQueryPair {
    BitVec q1; // uniformly random
    BitVec q2; // q1 with the target position flipped
    std::size_t target = 0;
};

// Chor-style (1,2) query pair: q1 uniform, q2 = q1 xor e_i. Either vector
// in isolation is uniform on {0,1}^cols, so a single server learns
// nothing about i.
template <typename Rng>
PirQueryPair gen_query_pair(std::size_t cols, std::size_t i, Rng& rng) {
    if (i >= cols) throw ValidationError("target column out of range");
    PirQueryPair p;
    p.q1 = BitVec(cols);
    p.q1.randomize(rng);
    p.q2 = p.q1;
    p.q2.flip(i);
    p.target = i;
    return p;
}

// a1 xor a2 = M * e_i = column i.
inline BitVec reconstruct(const BitVec& a1, const BitVec& a2) {
    if (a1.size() != a2.size())
        throw ProtocolError("answer length mismatch between servers");
    return a1 ^ a2;
}

// One PIR server as seen by the retrieval logic: an opaque answering
// function plus the database version it serves. The transport layer and
// the tests provide implementations.
struct AnswerEndpoint {
    std::uint64_t db_version = 0;
    std::function<BitVec(PirMode, const BitVec&)> query;
};

struct DbShape {
    std::size_t record_count = 0;
    std::size_t record_bits = 0;
};

// Full private retrieval of record i: query-pair generation, two
// concurrent server calls, XOR reconstruction. Balanced mode retrieves
// every column overlapping the record with an independent query pair and
// slices out the record bits.
template <typename Rng>
BitVec retrieve_record(const AnswerEndpoint& s1, const AnswerEndpoint& s2, const DbShape& db,
                       std::size_t i, Rng& rng, PirMode mode = PirMode::kColumnAligned) {
    if (i >= db.record_count) throw ValidationError("record index out of range");
    if (s1.db_version != s2.db_version)
        throw ReplicaMismatchError("servers disagree on database version");
    const PirShape shape = PirShape::shape_for(db.record_count, db.record_bits, mode);

    auto ask = [&](std::size_t col) {
        PirQueryPair pair = gen_query_pair(shape.cols, col, rng);
        auto f1 = std::async(std::launch::async,
                             [&] { return s1.query(mode, pair.q1); });
        auto f2 = std::async(std::launch::async,
                             [&] { return s2.query(mode, pair.q2); });
        const BitVec a1 = f1.get();
        const BitVec a2 = f2.get();
        if (a1.size() != shape.rows || a2.size() != shape.rows)
            throw ProtocolError("answer length does not match database shape");
        return reconstruct(a1, a2);
    };

    if (mode == PirMode::kColumnAligned) return ask(i);

    BitVec record(db.record_bits);
    const std::size_t lo_bit = i * db.record_bits;
    const std::size_t hi_bit = lo_bit + db.record_bits; // exclusive
    const std::size_t first_col = lo_bit / shape.rows;
    const std::size_t last_col = (hi_bit - 1) / shape.rows;
    for (std::size_t col = first_col; col <= last_col; ++col) {
        const BitVec column = ask(col);
        const std::size_t col_lo = col * shape.rows;
        const std::size_t from = std::max(lo_bit, col_lo);
        const std::size_t to = std::min(hi_bit, col_lo + shape.rows);
        record.copy_bits_from(column, from - col_lo, from - lo_bit, to - from);
    }
    return record;
}

// Bits on the wire for one column-aligned retrieval, both servers, before
// framing: each server receives an N-bit query and returns an L-bit answer.
inline std::size_t column_mode_comm_bits(std::size_t record_count, std::size_t record_bits) {
    return 2 * (record_count + record_bits);
}

} // namespace hubpir
