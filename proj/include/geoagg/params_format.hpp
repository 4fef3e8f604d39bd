#pragma once

// GEOP container for toy MoE layer parameters, little-endian:
//
//   0   4  magic "GEOP"
//   4   4  version (u32) = 1
//   8   4  num_experts (u32)
//   12  4  D (u32)
//   16  4  H (u32)
//   20  4  K (u32)
//   24  1  aggregator tag (u8): 0 linear, 1 sba, 2 norm-free, 3 unit
//   25  7  reserved, zero
//   32  .. binary32 payload: gate (num_experts x D), then per expert
//          w_in (H x D), b_in (H), w_out (D x H), b_out (D); matrices row-major.
//
// Parameters are narrowed to binary32 on write.

#include <array>
#include <cstdint>
#include <iosfwd>

#include "geoagg/moe.hpp"

namespace geoagg {

inline constexpr std::array<char, 4> kParamsMagic = {'G', 'E', 'O', 'P'};
inline constexpr std::uint32_t kParamsVersion = 1;

/// Returns bytes written.
std::uint64_t write_params(std::ostream& sink, const MoELayer& layer);
MoELayer read_params(std::istream& source);

}  // namespace geoagg
