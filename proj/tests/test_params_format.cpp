#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <limits>
#include <sstream>

#include "geoagg/byte_order.hpp"
#include "geoagg/params_format.hpp"

using namespace geoagg;

namespace {

std::string save(const MoELayer& layer) {
  std::ostringstream out(std::ios::binary);
  write_params(out, layer);
  return out.str();
}

MoELayer load(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_params(in);
}

ErrorCode load_code(const std::string& bytes) {
  try {
    load(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

void check_narrowed(const Matrix& stored, const Matrix& original) {
  REQUIRE(stored.rows == original.rows);
  REQUIRE(stored.cols == original.cols);
  for (std::size_t i = 0; i < stored.data.size(); ++i) {
    CHECK(stored.data[i] == static_cast<double>(static_cast<float>(original.data[i])));
  }
}

}  // namespace

TEST_CASE("size and header") {
  const MoELayer layer = init_layer(3, 4, 6, 5, 2, AggregatorKind::NormFreeAngle);
  const std::string bytes = save(layer);
  // gate 4x6, per expert w_in 5x6 + b_in 5 + w_out 6x5 + b_out 6
  const std::size_t floats = 4 * 6 + 4 * (30 + 5 + 30 + 6);
  CHECK(bytes.size() == 32 + 4 * floats);
  CHECK(bytes.substr(0, 4) == "GEOP");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  CHECK(le::get_u32(p + 4) == 1);
  CHECK(le::get_u32(p + 8) == 4);
  CHECK(le::get_u32(p + 12) == 6);
  CHECK(le::get_u32(p + 16) == 5);
  CHECK(le::get_u32(p + 20) == 2);
  CHECK(p[24] == 2);
  CHECK(le::get_f32(p + 32) == static_cast<float>(layer.router.gate.data[0]));
}

TEST_CASE("round trip narrows to binary32 and is stable on re-save") {
  for (AggregatorKind kind : kAllAggregators) {
    const MoELayer layer = init_layer(11, 5, 8, 12, 3, kind);
    const std::string first = save(layer);
    const MoELayer loaded = load(first);
    CHECK(loaded.aggregator == kind);
    CHECK(loaded.router.top_k == 3);
    check_narrowed(loaded.router.gate, layer.router.gate);
    REQUIRE(loaded.experts.size() == 5);
    for (std::size_t e = 0; e < 5; ++e) {
      check_narrowed(loaded.experts[e].w_in, layer.experts[e].w_in);
      check_narrowed(loaded.experts[e].w_out, layer.experts[e].w_out);
      CHECK(loaded.experts[e].b_in == layer.experts[e].b_in);
    }
    CHECK(save(loaded) == first);
    CHECK(load(save(loaded)) == loaded);
  }
}

TEST_CASE("a loaded layer produces the same forward pass as a re-loaded one") {
  const MoELayer loaded = load(save(init_layer(2, 4, 8, 16, 2, AggregatorKind::SBA)));
  const MoELayer again = load(save(loaded));
  const Vector x{0.1, -0.4, 1.2, 0.0, 0.3, -2.0, 0.7, 0.5};
  CHECK(moe_forward(loaded, x) == moe_forward(again, x));
}

TEST_CASE("header and payload errors") {
  const std::string good = save(init_layer(1, 3, 4, 5, 1, AggregatorKind::Linear));
  auto patched = [&](std::size_t offset, unsigned char v) {
    std::string b = good;
    b[offset] = static_cast<char>(v);
    return b;
  };
  CHECK(load_code(patched(0, 'X')) == ErrorCode::BadMagic);
  CHECK(load_code("GEOA" + good.substr(4)) == ErrorCode::BadMagic);
  CHECK(load_code(good.substr(0, 20)) == ErrorCode::TruncatedFile);
  CHECK(load_code(good.substr(0, good.size() - 2)) == ErrorCode::TruncatedFile);
  CHECK(load_code(good + "zz") == ErrorCode::TrailingBytes);
  CHECK(load_code(patched(4, 7)) == ErrorCode::UnsupportedVersion);
  CHECK(load_code(patched(24, 9)) == ErrorCode::InvalidHeader);      // unknown aggregator
  CHECK(load_code(patched(20, 4)) == ErrorCode::InvalidHeader);      // K > num_experts
  CHECK(load_code(patched(8, 0)) == ErrorCode::InvalidHeader);       // no experts
  CHECK(load_code(patched(30, 1)) == ErrorCode::InvalidHeader);      // reserved byte

  std::string nan = good;
  unsigned char buf[4];
  le::put_f32(buf, std::numeric_limits<float>::quiet_NaN());
  std::memcpy(nan.data() + 40, buf, 4);
  CHECK(load_code(nan) == ErrorCode::NonFiniteValue);
}
