#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "msep/taskgen.hpp"

namespace msep::dataset_io {

using taskgen::DataPoint;
using taskgen::TaskParams;

// Binary dataset layout, all integers little-endian:
//   magic "MSEP" | version u16 | n u32 | theta f64 | count u64 |
//   records: x ceil(n/8) | idx u32 | A (n rows x ceil(n/8)) | yvec | zvec | zbit u8
// Bit fields are packed LSB-first within each byte.

constexpr std::uint16_t kFormatVersion = 1;

struct DatasetHeader {
    std::size_t n = 0;
    double theta = 0.0;
    std::uint64_t count = 0;
};

class DatasetWriter {
public:
    DatasetWriter(std::ostream& os, const DatasetHeader& header);
    void append(const DataPoint& p);
    /// Verifies the promised record count was written.
    void finish();

private:
    std::ostream& os_;
    DatasetHeader header_;
    std::uint64_t written_ = 0;
};

class DatasetReader {
public:
    explicit DatasetReader(std::istream& is);
    const DatasetHeader& header() const { return header_; }
    bool next(DataPoint& out);

private:
    std::istream& is_;
    DatasetHeader header_;
    std::uint64_t read_ = 0;
};

void write_dataset(const std::string& path, const DatasetHeader& header,
                   std::span<const DataPoint> points);

std::pair<DatasetHeader, std::vector<DataPoint>> read_dataset(const std::string& path);

/// One JSON object per record with hex-encoded bit fields.
void export_jsonl(const std::string& path, const DatasetHeader& header,
                  std::span<const DataPoint> points);

/// Digest of a packed bit vector (FNV-1a 64 over length and bytes), printed
/// as 16 hex digits. Used to record the planted secret without revealing it
/// in structured form.
std::string bitvec_digest(const gf2::BitVec& v);

} // namespace msep::dataset_io
