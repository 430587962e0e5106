#include <istream>
#include <ostream>

#include "msep/protocol.hpp"

namespace msep::protocol {

namespace {

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t& off) {
    if (off + 4 > b.size()) throw ProtocolError("wire: truncated integer");
    std::uint32_t v = static_cast<std::uint32_t>(b[off]) |
                      static_cast<std::uint32_t>(b[off + 1]) << 8 |
                      static_cast<std::uint32_t>(b[off + 2]) << 16 |
                      static_cast<std::uint32_t>(b[off + 3]) << 24;
    off += 4;
    return v;
}

void put_bits(std::vector<std::uint8_t>& out, const BitVec& v) {
    gf2::append_bits(out, v.words(), v.size());
}

BitVec get_bits(std::span<const std::uint8_t> b, std::size_t& off, std::size_t nbits) {
    const std::size_t nbytes = gf2::byte_len(nbits);
    if (off + nbytes > b.size()) throw ProtocolError("wire: truncated bit field");
    BitVec v = gf2::from_bytes(b.subspan(off, nbytes), nbits);
    off += nbytes;
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    const std::uint32_t len = static_cast<std::uint32_t>(1 + f.payload.size());
    std::vector<std::uint8_t> out;
    out.reserve(4 + len);
    out.push_back(static_cast<std::uint8_t>(len >> 24)); // length is big-endian
    out.push_back(static_cast<std::uint8_t>(len >> 16));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
    out.push_back(f.tag);
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes, std::size_t& offset) {
    if (offset + 5 > bytes.size()) throw ProtocolError("wire: truncated frame header");
    const std::uint32_t len = static_cast<std::uint32_t>(bytes[offset]) << 24 |
                              static_cast<std::uint32_t>(bytes[offset + 1]) << 16 |
                              static_cast<std::uint32_t>(bytes[offset + 2]) << 8 |
                              static_cast<std::uint32_t>(bytes[offset + 3]);
    offset += 4;
    if (len == 0 || offset + len > bytes.size())
        throw ProtocolError("wire: frame length out of bounds");
    Frame f;
    f.tag = bytes[offset];
    f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset) + 1,
                     bytes.begin() + static_cast<std::ptrdiff_t>(offset + len));
    offset += len;
    return f;
}

void write_frame(std::ostream& os, const Frame& f) {
    const auto bytes = encode_frame(f);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("wire: stream write failed");
}

Frame read_frame(std::istream& is) {
    std::uint8_t hdr[4];
    is.read(reinterpret_cast<char*>(hdr), 4);
    if (!is) throw ProtocolError("wire: truncated frame header");
    const std::uint32_t len = static_cast<std::uint32_t>(hdr[0]) << 24 |
                              static_cast<std::uint32_t>(hdr[1]) << 16 |
                              static_cast<std::uint32_t>(hdr[2]) << 8 |
                              static_cast<std::uint32_t>(hdr[3]);
    if (len == 0) throw ProtocolError("wire: empty frame");
    std::vector<std::uint8_t> body(len);
    is.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(len));
    if (!is) throw ProtocolError("wire: truncated frame body");
    Frame f;
    f.tag = body[0];
    f.payload.assign(body.begin() + 1, body.end());
    return f;
}

Frame encode_msg1(const Msg1& m) {
    Frame f;
    f.tag = kTagMsg1;
    const std::size_t a_rows = m.ys.empty() ? 0 : m.ys.front().A.rows();
    const std::size_t row_bytes = gf2::byte_len(m.n);
    f.payload.reserve(12 + m.ys.size() * (a_rows + 1) * row_bytes);
    put_u32le(f.payload, static_cast<std::uint32_t>(m.n));
    put_u32le(f.payload, static_cast<std::uint32_t>(m.ys.size()));
    put_u32le(f.payload, static_cast<std::uint32_t>(a_rows));
    for (const ModalityY& y : m.ys) {
        if (y.yvec.size() != m.n || y.A.rows() != a_rows)
            throw ProtocolError("encode_msg1: inconsistent entry shape");
        for (std::size_t r = 0; r < a_rows; ++r)
            gf2::append_bits(f.payload, y.A.row(r), m.n);
        put_bits(f.payload, y.yvec);
    }
    return f;
}

Msg1 decode_msg1(const Frame& f) {
    if (f.tag != kTagMsg1) throw ProtocolError("decode_msg1: unexpected tag");
    std::size_t off = 0;
    Msg1 m;
    m.n = get_u32le(f.payload, off);
    const std::uint32_t count = get_u32le(f.payload, off);
    const std::uint32_t a_rows = get_u32le(f.payload, off);
    if (m.n == 0 || count == 0) throw ProtocolError("decode_msg1: empty message");
    if (a_rows != 0 && a_rows != m.n)
        throw ProtocolError("decode_msg1: bad matrix shape");
    const std::size_t row_bytes = gf2::byte_len(m.n);
    m.ys.reserve(count);
    const std::span<const std::uint8_t> payload(f.payload);
    for (std::uint32_t i = 0; i < count; ++i) {
        ModalityY y;
        if (a_rows > 0) {
            y.A = gf2::BitMatrix(a_rows, m.n);
            for (std::size_t r = 0; r < a_rows; ++r) {
                if (off + row_bytes > payload.size())
                    throw ProtocolError("decode_msg1: truncated");
                gf2::read_bits(payload.subspan(off, row_bytes), y.A.row(r), m.n);
                off += row_bytes;
            }
            y.A.mask_tails();
        }
        y.yvec = get_bits(f.payload, off, m.n);
        m.ys.push_back(std::move(y));
    }
    if (off != f.payload.size()) throw ProtocolError("decode_msg1: trailing bytes");
    return m;
}

Frame encode_msg2(const Msg2& m) {
    Frame f;
    f.tag = kTagMsg2;
    f.payload.reserve(9 + m.zs.size() * (gf2::byte_len(m.n) + 1));
    put_u32le(f.payload, static_cast<std::uint32_t>(m.n));
    put_u32le(f.payload, static_cast<std::uint32_t>(m.zs.size()));
    f.payload.push_back(m.space == LabelSpace::binary ? 0 : 1);
    for (const LabelZ& z : m.zs) {
        if (m.space == LabelSpace::vector_np1) {
            if (z.zvec.size() != m.n) throw ProtocolError("encode_msg2: bad zvec");
            put_bits(f.payload, z.zvec);
        } else if (!z.zvec.empty()) {
            throw ProtocolError("encode_msg2: binary label with vector part");
        }
        f.payload.push_back(z.zbit & 1);
    }
    return f;
}

Msg2 decode_msg2(const Frame& f) {
    if (f.tag != kTagMsg2) throw ProtocolError("decode_msg2: unexpected tag");
    std::size_t off = 0;
    Msg2 m;
    m.n = get_u32le(f.payload, off);
    const std::uint32_t count = get_u32le(f.payload, off);
    if (off >= f.payload.size()) throw ProtocolError("decode_msg2: truncated");
    const std::uint8_t space = f.payload[off++];
    if (space > 1) throw ProtocolError("decode_msg2: bad label space");
    m.space = space == 0 ? LabelSpace::binary : LabelSpace::vector_np1;
    m.zs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        LabelZ z;
        if (m.space == LabelSpace::vector_np1) z.zvec = get_bits(f.payload, off, m.n);
        if (off >= f.payload.size()) throw ProtocolError("decode_msg2: truncated");
        z.zbit = f.payload[off++] & 1;
        m.zs.push_back(std::move(z));
    }
    if (off != f.payload.size()) throw ProtocolError("decode_msg2: trailing bytes");
    return m;
}

Frame encode_seed(const BitVec& seed) {
    Frame f;
    f.tag = kTagExtractorSeed;
    put_u32le(f.payload, static_cast<std::uint32_t>(seed.size()));
    put_bits(f.payload, seed);
    return f;
}

BitVec decode_seed(const Frame& f) {
    if (f.tag != kTagExtractorSeed) throw ProtocolError("decode_seed: unexpected tag");
    std::size_t off = 0;
    const std::uint32_t bits = get_u32le(f.payload, off);
    BitVec v = get_bits(f.payload, off, bits);
    if (off != f.payload.size()) throw ProtocolError("decode_seed: trailing bytes");
    return v;
}

} // namespace msep::protocol
