#include "geoagg/params_format.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "geoagg/byte_order.hpp"

namespace geoagg {

namespace {

constexpr std::size_t kHeaderBytes = 32;

std::uint32_t narrow_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

class FloatSink {
 public:
  explicit FloatSink(std::ostream& os) : os_(os) {}
  void put(std::span<const double> values) {
    buf_.resize(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) le::put_f32(buf_.data() + 4 * i, static_cast<float>(values[i]));
    os_.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!os_) throw Error(ErrorCode::SinkFailure, "failed to write parameters");
    bytes_ += buf_.size();
  }
  std::uint64_t bytes() const { return bytes_; }

 private:
  std::ostream& os_;
  std::vector<unsigned char> buf_;
  std::uint64_t bytes_ = 0;
};

void get_floats(std::istream& is, std::span<double> out) {
  std::vector<unsigned char> buf(out.size() * 4);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) {
    throw Error(ErrorCode::TruncatedFile, "parameter payload cut short");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = le::get_f32(buf.data() + 4 * i);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite parameter");
    out[i] = v;
  }
}

}  // namespace

std::uint64_t write_params(std::ostream& sink, const MoELayer& layer) {
  layer.validate();
  unsigned char h[kHeaderBytes] = {};
  std::copy(kParamsMagic.begin(), kParamsMagic.end(), h);
  le::put_u32(h + 4, kParamsVersion);
  le::put_u32(h + 8, narrow_u32(layer.router.num_experts(), "num_experts"));
  le::put_u32(h + 12, narrow_u32(layer.dim(), "D"));
  le::put_u32(h + 16, narrow_u32(layer.hidden(), "H"));
  le::put_u32(h + 20, narrow_u32(layer.router.top_k, "K"));
  h[24] = static_cast<unsigned char>(layer.aggregator);
  sink.write(reinterpret_cast<const char*>(h), kHeaderBytes);
  if (!sink) throw Error(ErrorCode::SinkFailure, "failed to write parameter header");

  FloatSink out(sink);
  out.put(layer.router.gate.data);
  for (const auto& e : layer.experts) {
    out.put(e.w_in.data);
    out.put(e.b_in);
    out.put(e.w_out.data);
    out.put(e.b_out);
  }
  sink.flush();
  return kHeaderBytes + out.bytes();
}

MoELayer read_params(std::istream& source) {
  unsigned char h[kHeaderBytes] = {};
  source.read(reinterpret_cast<char*>(h), kHeaderBytes);
  const auto got = static_cast<std::size_t>(source.gcount());
  if (got >= 4 && !std::equal(kParamsMagic.begin(), kParamsMagic.end(), h)) {
    throw Error(ErrorCode::BadMagic, "expected \"GEOP\"");
  }
  if (got < kHeaderBytes) throw Error(ErrorCode::TruncatedFile, "parameter header cut short");
  if (le::get_u32(h + 4) != kParamsVersion) throw Error(ErrorCode::UnsupportedVersion, "GEOP version");
  const std::size_t experts = le::get_u32(h + 8);
  const std::size_t dim = le::get_u32(h + 12);
  const std::size_t hidden = le::get_u32(h + 16);
  const std::size_t top_k = le::get_u32(h + 20);
  const auto kind = aggregator_from_tag(h[24]);
  if (!kind) throw Error(ErrorCode::InvalidHeader, "unknown aggregator tag " + std::to_string(h[24]));
  for (std::size_t i = 25; i < kHeaderBytes; ++i) {
    if (h[i] != 0) throw Error(ErrorCode::InvalidHeader, "reserved header bytes must be zero");
  }
  if (experts == 0 || dim == 0 || hidden == 0 || top_k == 0 || top_k > experts) {
    throw Error(ErrorCode::InvalidHeader, "invalid layer dimensions");
  }

  MoELayer layer;
  layer.aggregator = *kind;
  layer.router.top_k = top_k;
  layer.router.gate = Matrix(experts, dim);
  get_floats(source, layer.router.gate.data);
  layer.experts.resize(experts);
  for (auto& e : layer.experts) {
    e.w_in = Matrix(hidden, dim);
    get_floats(source, e.w_in.data);
    e.b_in.resize(hidden);
    get_floats(source, e.b_in);
    e.w_out = Matrix(dim, hidden);
    get_floats(source, e.w_out.data);
    e.b_out.resize(dim);
    get_floats(source, e.b_out);
  }
  if (source.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::TrailingBytes, "data after the parameter payload");
  }
  return layer;
}

}  // namespace geoagg
