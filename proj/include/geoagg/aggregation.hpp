#pragma once

// Expert-output aggregation operators for top-K mixture-of-experts layers.
//
//   Linear          y = sum_i w_i e_i
//   SBA             y = (sum_i w_i r_i) * karcher_mean(u_i; weights w_i r_i)
//   NormFreeAngle   y = (sum_i w_i r_i) * karcher_mean(u_i; weights w_i)
//   UnitNormalized  y = karcher_mean(u_i; weights w_i r_i)
//
// with r_i = |e_i| and u_i = e_i / r_i. Expert outputs with norm below
// kDegenerateEps have no direction; they are dropped from the angular mean and
// contribute nothing to the radius. Only when every expert is degenerate does
// aggregation fail (AllDegenerate).

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "geoagg/sphere.hpp"

namespace geoagg {

enum class AggregatorKind : std::uint8_t {
  Linear = 0,
  SBA = 1,
  NormFreeAngle = 2,
  UnitNormalized = 3,
};

inline constexpr std::array<AggregatorKind, 4> kAllAggregators = {
    AggregatorKind::Linear, AggregatorKind::SBA, AggregatorKind::NormFreeAngle,
    AggregatorKind::UnitNormalized};

/// CLI / file token: "linear", "sba", "norm-free", "unit".
std::string_view to_string(AggregatorKind kind);
std::optional<AggregatorKind> parse_aggregator(std::string_view token);
std::optional<AggregatorKind> aggregator_from_tag(std::uint8_t tag);

inline constexpr double kWeightSumTolerance = 1e-9;

/// Top-K expert outputs e_i with their gate weights w_i.
struct ExpertBundle {
  std::vector<Vector> outputs;
  std::vector<double> weights;

  std::size_t size() const noexcept { return outputs.size(); }
  std::size_t dim() const { return outputs.empty() ? 0 : outputs.front().size(); }

  /// Throws InvalidBundle unless K >= 1, dims agree, values are finite, weights are
  /// nonnegative and sum to 1 within `weight_sum_tol`.
  void validate(double weight_sum_tol = kWeightSumTolerance) const;
};

Vector linear_aggregate(const ExpertBundle& bundle);
Vector sba_aggregate(const ExpertBundle& bundle, const BarycenterConfig& cfg = {});
Vector norm_free_aggregate(const ExpertBundle& bundle, const BarycenterConfig& cfg = {});
Vector unit_normalized_aggregate(const ExpertBundle& bundle, const BarycenterConfig& cfg = {});

Vector aggregate(AggregatorKind kind, const ExpertBundle& bundle, const BarycenterConfig& cfg = {});

/// |y| divided by the mean norm of all K contributing expert outputs.
double collapse_ratio(const ExpertBundle& bundle, std::span<const double> y);

namespace detail {

/// How the angular mean of exactly two contributing experts is evaluated.
enum class PairPath {
  ClosedForm,  ///< slerp(u1, u2, a2 / (a1 + a2))
  Karcher,     ///< the general top-K iteration
};

Vector sba_aggregate_via(const ExpertBundle& bundle, const BarycenterConfig& cfg, PairPath path);

}  // namespace detail

}  // namespace geoagg
