#include "geoagg/dump_format.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "geoagg/byte_order.hpp"

namespace geoagg {

namespace {

void check_header_shape(const DumpHeader& h, ErrorCode code) {
  if (h.dim < 1) throw Error(code, "dim must be >= 1");
  if (h.experts_per_sample < 1) throw Error(code, "experts_per_sample must be >= 1");
}

void check_record_values(const DumpRecord& r, ErrorCode finite_code, std::uint64_t index) {
  for (float v : r.expert_vectors) {
    if (!std::isfinite(v)) throw Error(finite_code, "non-finite expert value", index);
  }
  for (float w : r.weights) {
    if (!std::isfinite(w)) throw Error(finite_code, "non-finite weight", index);
    if (w < 0.0f) throw Error(ErrorCode::NegativeWeight, "negative weight", index);
  }
}

}  // namespace

DumpWriter::DumpWriter(std::ostream& sink, const DumpHeader& header) : sink_(sink), header_(header) {
  check_header_shape(header_, ErrorCode::ShapeMismatch);
  unsigned char h[kDumpHeaderBytes] = {};
  std::copy(kDumpMagic.begin(), kDumpMagic.end(), h);
  le::put_u32(h + 4, kDumpVersion);
  le::put_u32(h + 8, header_.dim);
  le::put_u32(h + 12, header_.experts_per_sample);
  le::put_u64(h + 16, header_.sample_count);
  h[24] = kDtypeFloat32;
  sink_.write(reinterpret_cast<const char*>(h), kDumpHeaderBytes);
  if (!sink_) throw Error(ErrorCode::SinkFailure, "failed to write dump header");
  bytes_ = kDumpHeaderBytes;
  buffer_.resize(header_.record_bytes());
}

void DumpWriter::write(const DumpRecord& record) {
  const std::size_t k = header_.experts_per_sample;
  if (record.expert_vectors.size() != k * header_.dim || record.weights.size() != k) {
    throw Error(ErrorCode::ShapeMismatch, "record shape does not match header", written_);
  }
  if (written_ >= header_.sample_count) {
    throw Error(ErrorCode::ShapeMismatch, "more records than header.sample_count", written_);
  }
  check_record_values(record, ErrorCode::NonFiniteValue, written_);
  unsigned char* p = buffer_.data();
  for (float v : record.expert_vectors) {
    le::put_f32(p, v);
    p += 4;
  }
  for (float w : record.weights) {
    le::put_f32(p, w);
    p += 4;
  }
  sink_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (!sink_) throw Error(ErrorCode::SinkFailure, "failed to write record", written_);
  ++written_;
  bytes_ += buffer_.size();
}

void DumpWriter::write(const ExpertBundle& bundle) { write(bundle_to_record(bundle)); }

std::uint64_t DumpWriter::finish() {
  if (written_ != header_.sample_count) {
    throw Error(ErrorCode::ShapeMismatch, "wrote " + std::to_string(written_) + " records, header declares " +
                                              std::to_string(header_.sample_count));
  }
  sink_.flush();
  if (!sink_) throw Error(ErrorCode::SinkFailure, "flush failed");
  return bytes_;
}

std::uint64_t write_dump(std::ostream& sink, const DumpHeader& header,
                         const std::vector<DumpRecord>& records) {
  if (records.size() != header.sample_count) {
    throw Error(ErrorCode::ShapeMismatch, "record count differs from header.sample_count");
  }
  DumpWriter writer(sink, header);
  for (const auto& r : records) writer.write(r);
  return writer.finish();
}

DumpReader::DumpReader(std::istream& source) : source_(source) {
  unsigned char h[kDumpHeaderBytes] = {};
  source_.read(reinterpret_cast<char*>(h), kDumpHeaderBytes);
  const auto got = static_cast<std::size_t>(source_.gcount());
  if (got >= 4 && !std::equal(kDumpMagic.begin(), kDumpMagic.end(), h)) {
    throw Error(ErrorCode::BadMagic, "expected \"GEOA\"");
  }
  if (got < kDumpHeaderBytes) {
    throw Error(ErrorCode::TruncatedFile, "header has " + std::to_string(got) + " of 32 bytes");
  }
  const std::uint32_t version = le::get_u32(h + 4);
  if (version != kDumpVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  }
  if (h[24] != kDtypeFloat32) throw Error(ErrorCode::UnsupportedDtype, "dtype " + std::to_string(h[24]));
  header_.dim = le::get_u32(h + 8);
  header_.experts_per_sample = le::get_u32(h + 12);
  header_.sample_count = le::get_u64(h + 16);
  check_header_shape(header_, ErrorCode::InvalidHeader);
  for (std::size_t i = 25; i < kDumpHeaderBytes; ++i) {
    if (h[i] != 0) throw Error(ErrorCode::InvalidHeader, "reserved header bytes must be zero");
  }
  buffer_.resize(header_.record_bytes());
}

bool DumpReader::next(DumpRecord& record) {
  if (read_ == header_.sample_count) {
    if (source_.peek() != std::char_traits<char>::eof()) {
      throw Error(ErrorCode::TrailingBytes, "data after the last declared record");
    }
    return false;
  }
  source_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (static_cast<std::size_t>(source_.gcount()) != buffer_.size()) {
    throw Error(ErrorCode::TruncatedFile, "record cut short", read_);
  }
  const std::size_t k = header_.experts_per_sample;
  record.expert_vectors.resize(k * header_.dim);
  record.weights.resize(k);
  const unsigned char* p = buffer_.data();
  for (float& v : record.expert_vectors) {
    v = le::get_f32(p);
    p += 4;
  }
  for (float& w : record.weights) {
    w = le::get_f32(p);
    p += 4;
  }
  check_record_values(record, ErrorCode::NonFiniteValue, read_);
  ++read_;
  return true;
}

std::optional<DumpRecord> DumpReader::next() {
  DumpRecord r;
  if (!next(r)) return std::nullopt;
  return r;
}

ExpertBundle record_to_bundle(const DumpRecord& record, std::uint32_t dim, bool renormalize) {
  const std::size_t k = record.weights.size();
  if (k == 0 || dim == 0 || record.expert_vectors.size() != k * dim) {
    throw Error(ErrorCode::ShapeMismatch, "record does not hold K vectors of the given dim");
  }
  double sum = 0.0;
  for (float w : record.weights) sum += static_cast<double>(w);
  if (!(sum > 0.0)) throw Error(ErrorCode::ZeroWeightSum, "gate weights sum to zero");
  if (!renormalize && std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::WeightSumMismatch, "gate weights sum to " + std::to_string(sum));
  }
  ExpertBundle b;
  b.outputs.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const float* src = record.expert_vectors.data() + i * dim;
    b.outputs[i].assign(src, src + dim);
  }
  b.weights.reserve(k);
  for (float w : record.weights) b.weights.push_back(renormalize ? static_cast<double>(w) / sum : w);
  return b;
}

DumpRecord bundle_to_record(const ExpertBundle& bundle) {
  DumpRecord r;
  r.expert_vectors.reserve(bundle.size() * bundle.dim());
  for (const Vector& e : bundle.outputs) {
    require_same_dim(bundle.dim(), e.size(), "bundle_to_record");
    for (double x : e) r.expert_vectors.push_back(static_cast<float>(x));
  }
  for (double w : bundle.weights) r.weights.push_back(static_cast<float>(w));
  return r;
}

}  // namespace geoagg
