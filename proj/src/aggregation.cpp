#include "geoagg/aggregation.hpp"

#include <cmath>
#include <string>

namespace geoagg {

std::string_view to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::Linear: return "linear";
    case AggregatorKind::SBA: return "sba";
    case AggregatorKind::NormFreeAngle: return "norm-free";
    case AggregatorKind::UnitNormalized: return "unit";
  }
  return "unknown";
}

std::optional<AggregatorKind> parse_aggregator(std::string_view token) {
  for (AggregatorKind k : kAllAggregators) {
    if (to_string(k) == token) return k;
  }
  return std::nullopt;
}

std::optional<AggregatorKind> aggregator_from_tag(std::uint8_t tag) {
  if (tag > static_cast<std::uint8_t>(AggregatorKind::UnitNormalized)) return std::nullopt;
  return static_cast<AggregatorKind>(tag);
}

void ExpertBundle::validate(double weight_sum_tol) const {
  if (outputs.empty()) throw Error(ErrorCode::InvalidBundle, "bundle needs at least one expert");
  if (weights.size() != outputs.size()) {
    throw Error(ErrorCode::InvalidBundle, "expected " + std::to_string(outputs.size()) +
                                              " weights, got " + std::to_string(weights.size()));
  }
  const std::size_t d = outputs.front().size();
  if (d == 0) throw Error(ErrorCode::InvalidBundle, "expert outputs must have dim >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].size() != d) throw Error(ErrorCode::InvalidBundle, "expert outputs differ in dim");
    if (!all_finite(outputs[i])) {
      throw Error(ErrorCode::InvalidBundle, "expert " + std::to_string(i) + " has non-finite values");
    }
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw Error(ErrorCode::InvalidBundle, "weights must be finite and >= 0");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > weight_sum_tol) {
    throw Error(ErrorCode::InvalidBundle, "weights sum to " + std::to_string(sum));
  }
}

Vector linear_aggregate(const ExpertBundle& bundle) {
  bundle.validate();
  Vector y(bundle.dim(), 0.0);
  for (std::size_t i = 0; i < bundle.size(); ++i) axpy(bundle.weights[i], bundle.outputs[i], y);
  return y;
}

namespace {

enum class AngularWeighting { NormAware, NormFree };

struct Contributor {
  std::size_t source;
  double radius;
  UnitVector direction;
};

struct SphericalParts {
  double radius = 0.0;  // sum over non-degenerate experts of w_i r_i
  std::vector<Contributor> contributors;  // non-degenerate, positive angular weight
  std::vector<double> angular_weights;
};

SphericalParts split(const ExpertBundle& bundle, AngularWeighting weighting) {
  bundle.validate();
  SphericalParts parts;
  bool any_direction = false;
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    const Vector& e = bundle.outputs[i];
    const double r = norm(e);
    if (r < kDegenerateEps) continue;
    any_direction = true;
    const double w = bundle.weights[i];
    parts.radius += w * r;
    const double a = weighting == AngularWeighting::NormAware ? w * r : w;
    if (a > 0.0) {
      parts.contributors.push_back({i, r, UnitVector::normalize(e)});
      parts.angular_weights.push_back(a);
    }
  }
  if (!any_direction) throw Error(ErrorCode::AllDegenerate, "every expert output is near zero");
  if (parts.contributors.empty()) {
    throw Error(ErrorCode::AllDegenerate, "no non-degenerate expert carries gate weight");
  }
  return parts;
}

UnitVector angular_mean(const SphericalParts& parts, const BarycenterConfig& cfg,
                        detail::PairPath path) {
  const auto& c = parts.contributors;
  if (c.size() == 1) return c.front().direction;
  if (c.size() == 2 && path == detail::PairPath::ClosedForm) {
    const double a1 = parts.angular_weights[0];
    const double a2 = parts.angular_weights[1];
    return slerp(c[0].direction, c[1].direction, a2 / (a1 + a2));
  }
  std::vector<UnitVector> dirs;
  dirs.reserve(c.size());
  for (const auto& x : c) dirs.push_back(x.direction);
  return spherical_barycenter(dirs, parts.angular_weights, cfg);
}

Vector spherical_aggregate(const ExpertBundle& bundle, const BarycenterConfig& cfg,
                           AngularWeighting weighting, bool keep_radius, detail::PairPath path) {
  cfg.validate();
  const SphericalParts parts = split(bundle, weighting);
  if (parts.contributors.size() == 1) {
    // Single direction: r * u reduces to w_s * e_s (or e_s / r_s for unit output).
    const Contributor& s = parts.contributors.front();
    const Vector& e = bundle.outputs[s.source];
    return keep_radius ? scaled(e, bundle.weights[s.source]) : s.direction.components();
  }
  const UnitVector dir = angular_mean(parts, cfg, path);
  return keep_radius ? scaled(dir.span(), parts.radius) : dir.components();
}

}  // namespace

namespace detail {

Vector sba_aggregate_via(const ExpertBundle& bundle, const BarycenterConfig& cfg, PairPath path) {
  return spherical_aggregate(bundle, cfg, AngularWeighting::NormAware, true, path);
}

}  // namespace detail

Vector sba_aggregate(const ExpertBundle& bundle, const BarycenterConfig& cfg) {
  return spherical_aggregate(bundle, cfg, AngularWeighting::NormAware, true,
                             detail::PairPath::ClosedForm);
}

Vector norm_free_aggregate(const ExpertBundle& bundle, const BarycenterConfig& cfg) {
  return spherical_aggregate(bundle, cfg, AngularWeighting::NormFree, true,
                             detail::PairPath::ClosedForm);
}

Vector unit_normalized_aggregate(const ExpertBundle& bundle, const BarycenterConfig& cfg) {
  return spherical_aggregate(bundle, cfg, AngularWeighting::NormAware, false,
                             detail::PairPath::ClosedForm);
}

Vector aggregate(AggregatorKind kind, const ExpertBundle& bundle, const BarycenterConfig& cfg) {
  switch (kind) {
    case AggregatorKind::Linear: return linear_aggregate(bundle);
    case AggregatorKind::SBA: return sba_aggregate(bundle, cfg);
    case AggregatorKind::NormFreeAngle: return norm_free_aggregate(bundle, cfg);
    case AggregatorKind::UnitNormalized: return unit_normalized_aggregate(bundle, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown aggregator kind");
}

double collapse_ratio(const ExpertBundle& bundle, std::span<const double> y) {
  bundle.validate();
  require_same_dim(bundle.dim(), y.size(), "collapse_ratio");
  double sum = 0.0;
  for (const Vector& e : bundle.outputs) sum += norm(e);
  const double mean = sum / static_cast<double>(bundle.size());
  if (mean < kDegenerateEps) throw Error(ErrorCode::AllDegenerate, "mean expert norm is near zero");
  return norm(y) / mean;
}

}  // namespace geoagg
