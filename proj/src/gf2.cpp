#include "msep/gf2.hpp"

#include <bit>
#include <cmath>

namespace msep::gf2 {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t splitmix64(std::uint64_t& z) {
    z += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = z;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t tail_mask(std::size_t len) {
    const std::size_t rem = len % 64;
    return rem == 0 ? ~0ULL : ((1ULL << rem) - 1);
}

} // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = kFnvOffset;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= kFnvPrime;
    }
    return h;
}

// --- Rng ---------------------------------------------------------------------

Rng::Rng(std::uint64_t master_seed, std::string_view domain_tag,
         std::uint64_t stream_index)
    : master_(master_seed), tag_(domain_tag), stream_(stream_index) {
    const std::uint64_t th =
        fnv1a64({reinterpret_cast<const std::uint8_t*>(tag_.data()), tag_.size()});
    std::uint64_t z = master_ ^ rotl(th, 17) ^ (stream_ * 0xd1342543de82ef95ULL);
    for (auto& s : s_) s = splitmix64(z);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t Rng::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int Rng::next_bit() { return static_cast<int>(next_u64() >> 63); }

bool Rng::bernoulli(double theta) {
    if (theta <= 0.0) return false;
    if (theta >= 1.0) return true;
    // long double keeps 64 mantissa bits on x86-64, so the threshold is exact
    // to the last word bit.
    const long double scaled = static_cast<long double>(theta) * 0x1.0p64L;
    const auto threshold = static_cast<std::uint64_t>(scaled);
    return next_u64() < threshold;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
    if (bound == 0) throw DimensionError("uniform_below: bound must be positive");
    const std::uint64_t limit = ~0ULL - (~0ULL % bound);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

Rng Rng::derive(std::string_view subtag, std::uint64_t stream_index) const {
    // The parent's stream index joins the tag so that chained derivations
    // from sibling streams stay distinct.
    std::string tag = tag_;
    tag += '#';
    tag += std::to_string(stream_);
    tag += '/';
    tag += subtag;
    return Rng(master_, tag, stream_index);
}

// --- BitVec ------------------------------------------------------------------

BitVec::BitVec(std::size_t len) : len_(len), words_((len + 63) / 64, 0) {}

BitVec BitVec::from_string(std::string_view bits) {
    BitVec v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') {
            v.set(i, true);
        } else if (bits[i] != '0') {
            throw DimensionError("BitVec::from_string: expected only 0/1");
        }
    }
    return v;
}

bool BitVec::get(std::size_t i) const {
    if (i >= len_) throw std::out_of_range("BitVec::get: index out of range");
    return (words_[i >> 6] >> (i & 63)) & 1;
}

void BitVec::set(std::size_t i, bool v) {
    if (i >= len_) throw std::out_of_range("BitVec::set: index out of range");
    const std::uint64_t mask = 1ULL << (i & 63);
    if (v)
        words_[i >> 6] |= mask;
    else
        words_[i >> 6] &= ~mask;
}

void BitVec::flip(std::size_t i) {
    if (i >= len_) throw std::out_of_range("BitVec::flip: index out of range");
    words_[i >> 6] ^= 1ULL << (i & 63);
}

std::size_t BitVec::weight() const {
    std::size_t w = 0;
    for (std::uint64_t word : words_) w += std::popcount(word);
    return w;
}

BitVec BitVec::slice(std::size_t start, std::size_t len) const {
    if (start + len > len_) throw std::out_of_range("BitVec::slice: range out of bounds");
    BitVec out(len);
    copy_bits(words_, start, len, out.words());
    out.mask_tail();
    return out;
}

void BitVec::mask_tail() {
    if (!words_.empty()) words_.back() &= tail_mask(len_);
}

std::string BitVec::to_string() const {
    std::string s(len_, '0');
    for (std::size_t i = 0; i < len_; ++i)
        if (get(i)) s[i] = '1';
    return s;
}

// --- BitMatrix -----------------------------------------------------------------

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), wpr_((cols + 63) / 64), data_(rows * wpr_, 0) {}

BitMatrix BitMatrix::identity(std::size_t n) {
    BitMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
}

bool BitMatrix::get(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) throw std::out_of_range("BitMatrix::get: out of range");
    return (data_[r * wpr_ + (c >> 6)] >> (c & 63)) & 1;
}

void BitMatrix::set(std::size_t r, std::size_t c, bool v) {
    if (r >= rows_ || c >= cols_) throw std::out_of_range("BitMatrix::set: out of range");
    const std::uint64_t mask = 1ULL << (c & 63);
    if (v)
        data_[r * wpr_ + (c >> 6)] |= mask;
    else
        data_[r * wpr_ + (c >> 6)] &= ~mask;
}

std::span<const std::uint64_t> BitMatrix::row(std::size_t r) const {
    if (r >= rows_) throw std::out_of_range("BitMatrix::row: out of range");
    return {data_.data() + r * wpr_, wpr_};
}

std::span<std::uint64_t> BitMatrix::row(std::size_t r) {
    if (r >= rows_) throw std::out_of_range("BitMatrix::row: out of range");
    return {data_.data() + r * wpr_, wpr_};
}

BitVec BitMatrix::row_vec(std::size_t r) const {
    BitVec v(cols_);
    auto src = row(r);
    std::copy(src.begin(), src.end(), v.words().begin());
    return v;
}

void BitMatrix::set_row(std::size_t r, const BitVec& v) {
    if (v.size() != cols_) throw DimensionError("BitMatrix::set_row: length mismatch");
    auto dst = row(r);
    std::copy(v.words().begin(), v.words().end(), dst.begin());
}

BitMatrix BitMatrix::columns(std::size_t c0, std::size_t width) const {
    if (c0 + width > cols_) throw std::out_of_range("BitMatrix::columns: range out of bounds");
    BitMatrix out(rows_, width);
    for (std::size_t r = 0; r < rows_; ++r) {
        copy_bits(row(r), c0, width, out.row(r));
    }
    out.mask_tails();
    return out;
}

void BitMatrix::mask_tails() {
    if (wpr_ == 0) return;
    const std::uint64_t mask = tail_mask(cols_);
    for (std::size_t r = 0; r < rows_; ++r) data_[r * wpr_ + wpr_ - 1] &= mask;
}

// --- kernels -------------------------------------------------------------------

BitVec xor_add(const BitVec& u, const BitVec& v) {
    if (u.size() != v.size()) throw DimensionError("xor_add: length mismatch");
    BitVec out = u;
    xor_into(out, v);
    return out;
}

void xor_into(BitVec& acc, const BitVec& v) {
    if (acc.size() != v.size()) throw DimensionError("xor_into: length mismatch");
    auto a = acc.words();
    auto b = v.words();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}

int inner(const BitVec& u, const BitVec& v) {
    if (u.size() != v.size()) throw DimensionError("inner: length mismatch");
    std::uint64_t acc = 0;
    auto a = u.words();
    auto b = v.words();
    for (std::size_t i = 0; i < a.size(); ++i) acc ^= a[i] & b[i];
    return std::popcount(acc) & 1;
}

BitVec row_times_matrix(const BitVec& x, const BitMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0)
        throw DimensionError("row_times_matrix: empty matrix");
    if (x.size() != a.rows()) throw DimensionError("row_times_matrix: shape mismatch");
    BitVec out(a.cols());
    auto acc = out.words();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        if (!x.get(r)) continue;
        auto row = a.row(r);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] ^= row[i];
    }
    return out;
}

BitVec matrix_times_col(const BitMatrix& y, const BitVec& w) {
    if (y.rows() == 0 || y.cols() == 0)
        throw DimensionError("matrix_times_col: empty matrix");
    if (w.size() != y.cols()) throw DimensionError("matrix_times_col: shape mismatch");
    BitVec out(y.rows());
    auto wv = w.words();
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < wv.size(); ++i) acc ^= row[i] & wv[i];
        if (std::popcount(acc) & 1) out.set(r, true);
    }
    return out;
}

BitVec bernoulli_vec(std::size_t len, double theta, Rng& rng) {
    if (theta < 0.0 || theta >= 0.5)
        throw ConfigError("bernoulli_vec: theta must lie in [0, 0.5)");
    BitVec out(len);
    if (theta <= 0.0) return out;
    // hoist the threshold; one uniform word per bit
    const auto threshold =
        static_cast<std::uint64_t>(static_cast<long double>(theta) * 0x1.0p64L);
    auto words = out.words();
    for (std::size_t i = 0; i < len; ++i)
        if (rng.next_u64() < threshold) words[i >> 6] |= 1ULL << (i & 63);
    return out;
}

BitVec uniform_vec(std::size_t len, Rng& rng) {
    BitVec out(len);
    auto w = out.words();
    for (auto& word : w) word = rng.next_u64();
    out.mask_tail();
    return out;
}

BitMatrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows == 0 || cols == 0) throw DimensionError("uniform_matrix: empty shape");
    BitMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (auto& word : m.row(r)) word = rng.next_u64();
    m.mask_tails();
    return m;
}

BitVec basis_vec(std::size_t i, std::size_t n) {
    if (i >= n) throw std::out_of_range("basis_vec: index out of range");
    BitVec v(n);
    v.set(i, true);
    return v;
}

int majority(std::span<const std::uint8_t> bits) {
    if (bits.empty()) throw DimensionError("majority: empty bin");
    std::uint64_t ones = 0;
    for (std::uint8_t b : bits) ones += (b != 0);
    return majority_from_counts(ones, bits.size() - ones);
}

int majority_from_counts(std::uint64_t ones, std::uint64_t zeros) {
    if (ones + zeros == 0) throw DimensionError("majority: empty bin");
    return ones > zeros ? 1 : 0;
}

std::size_t hamming(const BitVec& u, const BitVec& v) {
    if (u.size() != v.size()) throw DimensionError("hamming: length mismatch");
    std::size_t d = 0;
    auto a = u.words();
    auto b = v.words();
    for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(a[i] ^ b[i]);
    return d;
}

void copy_bits(std::span<const std::uint64_t> src, std::size_t start,
               std::size_t len, std::span<std::uint64_t> dst) {
    if (len == 0) return;
    const std::size_t shift = start & 63;
    const std::size_t w0 = start >> 6;
    const std::size_t out_words = (len + 63) / 64;
    for (std::size_t i = 0; i < out_words; ++i) {
        std::uint64_t lo = src[w0 + i] >> shift;
        if (shift != 0 && w0 + i + 1 < src.size())
            lo |= src[w0 + i + 1] << (64 - shift);
        dst[i] = lo;
    }
}

// --- byte packing ----------------------------------------------------------------

std::size_t byte_len(std::size_t bits) { return (bits + 7) / 8; }

std::vector<std::uint8_t> to_bytes(const BitVec& v) {
    std::vector<std::uint8_t> out(byte_len(v.size()), 0);
    auto words = v.words();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(words[i >> 3] >> ((i & 7) * 8));
    return out;
}

BitVec from_bytes(std::span<const std::uint8_t> bytes, std::size_t len) {
    if (bytes.size() < byte_len(len)) throw DimensionError("from_bytes: too few bytes");
    BitVec v(len);
    read_bits(bytes, v.words(), len);
    v.mask_tail();
    return v;
}

void append_bits(std::vector<std::uint8_t>& out, std::span<const std::uint64_t> words,
                 std::size_t nbits) {
    const std::size_t nbytes = byte_len(nbits);
    for (std::size_t i = 0; i < nbytes; ++i)
        out.push_back(static_cast<std::uint8_t>(words[i >> 3] >> ((i & 7) * 8)));
}

void read_bits(std::span<const std::uint8_t> bytes, std::span<std::uint64_t> words,
               std::size_t nbits) {
    const std::size_t nbytes = byte_len(nbits);
    if (bytes.size() < nbytes) throw DimensionError("read_bits: too few bytes");
    std::fill(words.begin(), words.end(), 0);
    for (std::size_t i = 0; i < nbytes; ++i)
        words[i >> 3] |= static_cast<std::uint64_t>(bytes[i]) << ((i & 7) * 8);
}

} // namespace msep::gf2
