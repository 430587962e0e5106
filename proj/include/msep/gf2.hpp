#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msep/errors.hpp"

namespace msep::gf2 {

// ---------------------------------------------------------------------------
// Deterministic seeded RNG.
//
// The output stream is a pure function of (master_seed, domain_tag,
// stream_index). Distinct (domain_tag, stream_index) pairs give streams that
// are independent for all statistical purposes here. Concurrent code must
// derive its own streams; Rng objects are never shared between threads.
// ---------------------------------------------------------------------------
class Rng {
public:
    explicit Rng(std::uint64_t master_seed,
                 std::string_view domain_tag = "root",
                 std::uint64_t stream_index = 0);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double();

    int next_bit();

    /// Bernoulli draw: compares one 64-bit uniform word against
    /// floor(theta * 2^64), exact to one part in 2^64.
    bool bernoulli(double theta);

    /// Unbiased uniform draw in [0, bound), bound > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Child stream: tag becomes "<tag>/<subtag>", fresh stream index.
    /// Derivation uses only the identity tuple, not the consumed state.
    Rng derive(std::string_view subtag, std::uint64_t stream_index) const;

    std::uint64_t master_seed() const { return master_; }
    const std::string& domain_tag() const { return tag_; }
    std::uint64_t stream_index() const { return stream_; }

private:
    std::uint64_t master_;
    std::string tag_;
    std::uint64_t stream_;
    std::uint64_t s_[4]; // xoshiro256** state
};

// ---------------------------------------------------------------------------
// Packed bit vector over Z_2. Bit j lives in word j/64 at position j%64,
// LSB first. Bits at positions >= size() are kept zero by every operation;
// the length is fixed at construction.
// ---------------------------------------------------------------------------
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t len);

    /// Parse "1011...": character position == bit index.
    static BitVec from_string(std::string_view bits);

    std::size_t size() const { return len_; }
    bool empty() const { return len_ == 0; }

    bool get(std::size_t i) const;
    void set(std::size_t i, bool v);
    void flip(std::size_t i);

    std::size_t weight() const;

    /// Bits [start, start+len), re-packed from position 0.
    BitVec slice(std::size_t start, std::size_t len) const;

    std::span<const std::uint64_t> words() const { return words_; }
    std::span<std::uint64_t> words() { return words_; }

    /// Zero any bits above size(); callers that write raw words use this
    /// to restore the trailing-zero invariant.
    void mask_tail();

    std::string to_string() const;

    bool operator==(const BitVec&) const = default;

private:
    std::size_t len_ = 0;
    std::vector<std::uint64_t> words_;
};

// ---------------------------------------------------------------------------
// Packed bit matrix, row-major; every row uses the BitVec word layout and
// obeys the same trailing-zero invariant.
// ---------------------------------------------------------------------------
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::size_t rows, std::size_t cols);

    static BitMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t words_per_row() const { return wpr_; }

    bool get(std::size_t r, std::size_t c) const;
    void set(std::size_t r, std::size_t c, bool v);

    std::span<const std::uint64_t> row(std::size_t r) const;
    std::span<std::uint64_t> row(std::size_t r);

    BitVec row_vec(std::size_t r) const;
    void set_row(std::size_t r, const BitVec& v);

    /// The n x width submatrix of columns [c0, c0+width).
    BitMatrix columns(std::size_t c0, std::size_t width) const;

    void mask_tails();

    bool operator==(const BitMatrix&) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0, wpr_ = 0;
    std::vector<std::uint64_t> data_;
};

// --- kernels ---------------------------------------------------------------

/// Coordinatewise sum mod 2. Lengths must match.
BitVec xor_add(const BitVec& u, const BitVec& v);

/// In-place variant of xor_add.
void xor_into(BitVec& acc, const BitVec& v);

/// Inner product mod 2. Lengths must match.
int inner(const BitVec& u, const BitVec& v);

/// x (1 x n) times A (n x m): XOR of the rows of A selected by x.
BitVec row_times_matrix(const BitVec& x, const BitMatrix& a);

/// Y (n x m) times w (m x 1): per-row inner products.
BitVec matrix_times_col(const BitMatrix& y, const BitVec& w);

/// i.i.d. Ber(theta) bits, theta in [0, 0.5).
BitVec bernoulli_vec(std::size_t len, double theta, Rng& rng);

BitVec uniform_vec(std::size_t len, Rng& rng);
BitMatrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// Unit vector e^(i) of length n, 0-based index.
BitVec basis_vec(std::size_t i, std::size_t n);

/// 1 iff strictly more ones than zeros; ties return 0. Empty input is an error.
int majority(std::span<const std::uint8_t> bits);
int majority_from_counts(std::uint64_t ones, std::uint64_t zeros);

/// Hamming distance between equal-length vectors.
std::size_t hamming(const BitVec& u, const BitVec& v);

/// Copy bits [start, start+len) of src (packed words) into dst starting at
/// bit 0. dst must hold at least len bits; its tail is left unmasked.
void copy_bits(std::span<const std::uint64_t> src, std::size_t start,
               std::size_t len, std::span<std::uint64_t> dst);

// --- byte packing (LSB-first within each byte) ------------------------------

std::vector<std::uint8_t> to_bytes(const BitVec& v);
BitVec from_bytes(std::span<const std::uint8_t> bytes, std::size_t len);
std::size_t byte_len(std::size_t bits);

/// Append the first nbits of packed words to out, allocation-free.
void append_bits(std::vector<std::uint8_t>& out, std::span<const std::uint64_t> words,
                 std::size_t nbits);

/// Fill packed words from bytes; the caller masks the tail.
void read_bits(std::span<const std::uint8_t> bytes, std::span<std::uint64_t> words,
               std::size_t nbits);

/// FNV-1a 64-bit over the packed bytes; used for secret digests.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

} // namespace msep::gf2
