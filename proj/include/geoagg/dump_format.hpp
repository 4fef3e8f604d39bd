#pragma once

// GEOA expert-output dump, little-endian, no padding:
//
//   offset  size  field
//   0       4     magic "GEOA"
//   4       4     version (u32) = 1
//   8       4     dim (u32) >= 1
//   12      4     experts_per_sample K (u32) >= 1
//   16      8     sample_count (u64)
//   24      1     dtype (u8) = 0, IEEE-754 binary32
//   25      7     reserved, zero
//   32      ...   sample_count records of K*dim expert values (expert-major)
//                 followed by K gate weights, all binary32
//
// Values are binary32 on disk and widened to binary64 in memory.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "geoagg/aggregation.hpp"

namespace geoagg {

inline constexpr std::array<char, 4> kDumpMagic = {'G', 'E', 'O', 'A'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::size_t kDumpHeaderBytes = 32;

struct DumpHeader {
  std::uint32_t dim = 0;
  std::uint32_t experts_per_sample = 0;
  std::uint64_t sample_count = 0;

  std::uint64_t record_bytes() const noexcept {
    return (static_cast<std::uint64_t>(experts_per_sample) * dim + experts_per_sample) * 4;
  }
  std::uint64_t file_bytes() const noexcept { return kDumpHeaderBytes + sample_count * record_bytes(); }

  friend bool operator==(const DumpHeader&, const DumpHeader&) = default;
};

struct DumpRecord {
  std::vector<float> expert_vectors;  ///< K * dim, expert-major
  std::vector<float> weights;         ///< K

  friend bool operator==(const DumpRecord&, const DumpRecord&) = default;
};

/// Writes the header on construction and one record per write().
class DumpWriter {
 public:
  DumpWriter(std::ostream& sink, const DumpHeader& header);

  void write(const DumpRecord& record);
  /// Narrows a bundle to binary32 and writes it.
  void write(const ExpertBundle& bundle);
  /// Checks that exactly sample_count records were written; returns total bytes.
  std::uint64_t finish();

 private:
  std::ostream& sink_;
  DumpHeader header_;
  std::uint64_t written_ = 0;
  std::uint64_t bytes_ = 0;
  std::vector<unsigned char> buffer_;
};

std::uint64_t write_dump(std::ostream& sink, const DumpHeader& header,
                         const std::vector<DumpRecord>& records);

/// Validates the header on construction and then yields records one at a time.
/// Memory use is one record regardless of sample_count.
class DumpReader {
 public:
  explicit DumpReader(std::istream& source);

  const DumpHeader& header() const noexcept { return header_; }
  /// Next record, or nullopt after the last one (at which point trailing bytes
  /// are rejected).
  std::optional<DumpRecord> next();
  /// Reads into `record`, reusing its storage. Returns false at end of stream.
  bool next(DumpRecord& record);
  std::uint64_t records_read() const noexcept { return read_; }

 private:
  std::istream& source_;
  DumpHeader header_;
  std::uint64_t read_ = 0;
  std::vector<unsigned char> buffer_;
};

/// Widens to binary64. With `renormalize`, weights are scaled to sum 1; without,
/// their sum must already be within 1e-6 of 1 and they are kept as stored.
ExpertBundle record_to_bundle(const DumpRecord& record, std::uint32_t dim, bool renormalize);

/// Narrowing counterpart used when emitting bundles.
DumpRecord bundle_to_record(const ExpertBundle& bundle);

}  // namespace geoagg
