#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "hubpir/errors.hpp"

namespace hubpir {

// Packed bit vector. Bit k lives in byte k/8 at position k%8 (LSB first),
// so the byte serialization of a record equals its bit stream. All XOR
// paths run over whole 64-bit words; trailing bits beyond size() are kept
// zero as a class invariant.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

    static BitVec from_bytes(const std::uint8_t* data, std::size_t bits) {
        BitVec v(bits);
        std::memcpy(v.words_.data(), data, (bits + 7) / 8);
        v.mask_tail();
        return v;
    }

    std::size_t size() const { return bits_; }
    std::size_t byte_size() const { return (bits_ + 7) / 8; }

    bool get(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }

    void set(std::size_t i, bool b) {
        const std::uint64_t mask = std::uint64_t{1} << (i % 64);
        if (b)
            words_[i / 64] |= mask;
        else
            words_[i / 64] &= ~mask;
    }

    void flip(std::size_t i) { words_[i / 64] ^= std::uint64_t{1} << (i % 64); }

    BitVec& operator^=(const BitVec& other) {
        if (other.bits_ != bits_) throw ProtocolError("bit vector length mismatch in xor");
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
        return *this;
    }

    friend BitVec operator^(BitVec a, const BitVec& b) {
        a ^= b;
        return a;
    }

    bool operator==(const BitVec& other) const {
        return bits_ == other.bits_ && words_ == other.words_;
    }
    bool operator!=(const BitVec& other) const { return !(*this == other); }

    std::size_t popcount() const {
        std::size_t c = 0;
        for (std::uint64_t w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }

    // Fill every bit from the generator, one word at a time.
    template <typename Rng>
    void randomize(Rng& rng) {
        for (auto& w : words_) w = static_cast<std::uint64_t>(rng());
        mask_tail();
    }

    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out(byte_size());
        std::memcpy(out.data(), words_.data(), out.size());
        return out;
    }

    const std::uint64_t* words() const { return words_.data(); }
    std::uint64_t* words() { return words_.data(); }
    std::size_t word_count() const { return words_.size(); }

    // Copies [src_off, src_off+n) of src into [dst_off, dst_off+n) of *this.
    void copy_bits_from(const BitVec& src, std::size_t src_off, std::size_t dst_off,
                        std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) set(dst_off + i, src.get(src_off + i));
    }

private:
    void mask_tail() {
        if (bits_ % 64 != 0 && !words_.empty())
            words_.back() &= (std::uint64_t{1} << (bits_ % 64)) - 1;
    }

    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

// Sequential bit-level writer over a byte buffer, LSB-first within each
// byte. Values wider than one bit are emitted low bit first, which keeps
// byte-aligned 8/16/32/64-bit fields readable as plain little-endian.
class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void write(std::uint64_t value, unsigned width) {
        for (unsigned i = 0; i < width; ++i) {
            const std::size_t bit = pos_ + i;
            if (bit / 8 >= out_.size()) out_.resize(bit / 8 + 1, 0);
            if ((value >> i) & 1u) out_[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
        }
        pos_ += width;
    }

    std::size_t bit_position() const { return pos_; }

    // Advances to an absolute bit offset, zero-filling the gap.
    void seek(std::size_t bit) {
        if (bit < pos_) throw FormatError("bit writer cannot seek backwards");
        pos_ = bit;
        if ((pos_ + 7) / 8 > out_.size()) out_.resize((pos_ + 7) / 8, 0);
    }

private:
    std::vector<std::uint8_t>& out_;
    std::size_t pos_ = 0;
};

class BitReader {
public:
    BitReader(const std::uint8_t* data, std::size_t size_bits)
        : data_(data), size_bits_(size_bits) {}

    std::uint64_t read(unsigned width) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < width; ++i) {
            const std::size_t bit = pos_ + i;
            if (bit >= size_bits_) throw FormatError("bit stream truncated");
            if ((data_[bit / 8] >> (bit % 8)) & 1u) v |= std::uint64_t{1} << i;
        }
        pos_ += width;
        return v;
    }

    void seek(std::size_t bit) {
        if (bit > size_bits_) throw FormatError("bit seek out of range");
        pos_ = bit;
    }

    std::size_t bit_position() const { return pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_bits_;
    std::size_t pos_ = 0;
};

// FNV-1a over a byte span. Used as a content digest for replica
// consistency checks between honest servers, not as a cryptographic hash.
inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& data) {
    return fnv1a64(data.data(), data.size());
}

// Draws a uniform integer in [0, bound) from raw 64-bit output without
// relying on std::uniform_int_distribution, whose mapping differs across
// standard library implementations. Builds must be reproducible from the
// seed alone.
template <typename Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    for (;;) {
        const std::uint64_t r = rng();
        if (r < limit) return r % bound;
    }
}

} // namespace hubpir
