#include "msep/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace msep::dataset_io {

using gf2::BitVec;
using gf2::byte_len;
using gf2::from_bytes;
using gf2::to_bytes;

namespace {

static_assert(std::endian::native == std::endian::little,
              "dataset format assumes a little-endian host");

template <typename T>
void put_raw(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("dataset: truncated file");
    return v;
}

void put_packed(std::ostream& os, std::span<const std::uint64_t> words,
                std::size_t nbits) {
    thread_local std::vector<std::uint8_t> buf;
    buf.clear();
    gf2::append_bits(buf, words, nbits);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
}

void put_bits(std::ostream& os, const BitVec& v) {
    put_packed(os, v.words(), v.size());
}

BitVec get_bits(std::istream& is, std::size_t nbits) {
    std::vector<std::uint8_t> bytes(byte_len(nbits));
    is.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!is) throw IoError("dataset: truncated record");
    return from_bytes(bytes, nbits);
}

std::string hex_encode(const BitVec& v) {
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (std::uint8_t b : to_bytes(v)) os << std::setw(2) << static_cast<int>(b);
    return os.str();
}

} // namespace

DatasetWriter::DatasetWriter(std::ostream& os, const DatasetHeader& header)
    : os_(os), header_(header) {
    os_.write("MSEP", 4);
    put_raw<std::uint16_t>(os_, kFormatVersion);
    put_raw<std::uint32_t>(os_, static_cast<std::uint32_t>(header_.n));
    put_raw<double>(os_, header_.theta);
    put_raw<std::uint64_t>(os_, header_.count);
    if (!os_) throw IoError("dataset: header write failed");
}

void DatasetWriter::append(const DataPoint& p) {
    const std::size_t n = header_.n;
    if (p.x.xvec.size() != n || p.y.yvec.size() != n || p.z.zvec.size() != n ||
        p.y.A.rows() != n)
        throw DimensionError("dataset: record does not match header n");
    put_bits(os_, p.x.xvec);
    put_raw<std::uint32_t>(os_, static_cast<std::uint32_t>(p.x.idx));
    for (std::size_t r = 0; r < n; ++r) put_packed(os_, p.y.A.row(r), n);
    put_bits(os_, p.y.yvec);
    put_bits(os_, p.z.zvec);
    put_raw<std::uint8_t>(os_, p.z.zbit & 1);
    if (!os_) throw IoError("dataset: record write failed");
    ++written_;
}

void DatasetWriter::finish() {
    if (written_ != header_.count)
        throw IoError("dataset: record count does not match header");
    os_.flush();
}

DatasetReader::DatasetReader(std::istream& is) : is_(is) {
    char magic[4];
    is_.read(magic, 4);
    if (!is_ || std::memcmp(magic, "MSEP", 4) != 0)
        throw IoError("dataset: bad magic");
    const auto version = get_raw<std::uint16_t>(is_);
    if (version != kFormatVersion) throw IoError("dataset: unsupported version");
    header_.n = get_raw<std::uint32_t>(is_);
    header_.theta = get_raw<double>(is_);
    header_.count = get_raw<std::uint64_t>(is_);
}

bool DatasetReader::next(DataPoint& out) {
    if (read_ >= header_.count) return false;
    const std::size_t n = header_.n;
    out.x.xvec = get_bits(is_, n);
    out.x.idx = get_raw<std::uint32_t>(is_);
    out.y.A = gf2::BitMatrix(n, n);
    for (std::size_t r = 0; r < n; ++r) out.y.A.set_row(r, get_bits(is_, n));
    out.y.yvec = get_bits(is_, n);
    out.z.zvec = get_bits(is_, n);
    out.z.zbit = get_raw<std::uint8_t>(is_) & 1;
    ++read_;
    return true;
}

void write_dataset(const std::string& path, const DatasetHeader& header,
                   std::span<const DataPoint> points) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("dataset: cannot open " + path);
    DatasetWriter w(os, header);
    for (const DataPoint& p : points) w.append(p);
    w.finish();
}

std::pair<DatasetHeader, std::vector<DataPoint>> read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("dataset: cannot open " + path);
    DatasetReader r(is);
    std::vector<DataPoint> points;
    points.reserve(r.header().count);
    DataPoint p;
    while (r.next(p)) points.push_back(p);
    return {r.header(), std::move(points)};
}

void export_jsonl(const std::string& path, const DatasetHeader& header,
                  std::span<const DataPoint> points) {
    std::ofstream os(path);
    if (!os) throw IoError("dataset: cannot open " + path);
    for (const DataPoint& p : points) {
        nlohmann::json rec;
        rec["n"] = header.n;
        rec["x"] = hex_encode(p.x.xvec);
        rec["idx"] = p.x.idx;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < p.y.A.rows(); ++r)
            rows.push_back(hex_encode(p.y.A.row_vec(r)));
        rec["A"] = std::move(rows);
        rec["y"] = hex_encode(p.y.yvec);
        rec["zvec"] = hex_encode(p.z.zvec);
        rec["zbit"] = static_cast<int>(p.z.zbit);
        os << rec.dump() << '\n';
    }
    if (!os) throw IoError("dataset: jsonl write failed");
}

std::string bitvec_digest(const gf2::BitVec& v) {
    auto bytes = to_bytes(v);
    const std::uint64_t len = v.size();
    for (int i = 0; i < 8; ++i)
        bytes.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << gf2::fnv1a64(bytes);
    return os.str();
}

} // namespace msep::dataset_io
