#pragma once

// A single sparse MoE layer: softmax top-K router, 2-layer GELU expert MLPs and
// a pluggable aggregation step. Forward pass only.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoagg/aggregation.hpp"

namespace geoagg {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  /// this * x
  Vector apply(std::span<const double> x) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct RouterParams {
  Matrix gate;  ///< num_experts x D
  std::size_t top_k = 2;

  std::size_t num_experts() const noexcept { return gate.rows; }
  std::size_t dim() const noexcept { return gate.cols; }
  void validate() const;

  friend bool operator==(const RouterParams&, const RouterParams&) = default;
};

struct ExpertParams {
  Matrix w_in;   ///< H x D
  Vector b_in;   ///< H
  Matrix w_out;  ///< D x H
  Vector b_out;  ///< D

  std::size_t dim() const noexcept { return w_in.cols; }
  std::size_t hidden() const noexcept { return w_in.rows; }
  void validate() const;

  friend bool operator==(const ExpertParams&, const ExpertParams&) = default;
};

struct MoELayer {
  RouterParams router;
  std::vector<ExpertParams> experts;
  AggregatorKind aggregator = AggregatorKind::Linear;

  std::size_t dim() const noexcept { return router.dim(); }
  std::size_t hidden() const { return experts.empty() ? 0 : experts.front().hidden(); }
  void validate() const;

  friend bool operator==(const MoELayer&, const MoELayer&) = default;
};

/// Selected experts in descending gate probability, weights renormalized to sum 1.
struct RoutingDecision {
  std::vector<std::size_t> indices;
  std::vector<double> weights;

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

/// Softmax over `logits`, top-k by probability (ties to the lower index), renormalized.
RoutingDecision route_logits(std::span<const double> logits, std::size_t top_k);
RoutingDecision route(const RouterParams& router, std::span<const double> x);

/// Exact (erf-based) GELU.
double gelu(double x);
Vector expert_forward(const ExpertParams& p, std::span<const double> x);

/// Everything a forward pass produced; routing and the bundle do not depend on
/// the layer's aggregator.
struct MoETrace {
  RoutingDecision routing;
  ExpertBundle bundle;
  Vector output;
};

MoETrace moe_trace(const MoELayer& layer, std::span<const double> x, const BarycenterConfig& cfg = {});
Vector moe_forward(const MoELayer& layer, std::span<const double> x, const BarycenterConfig& cfg = {});

struct BatchItemError {
  std::size_t index = 0;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
};

struct BatchResult {
  std::vector<std::optional<Vector>> outputs;  ///< input order; empty where the item failed
  std::vector<BatchItemError> errors;          ///< ascending item index
};

/// moe_forward over every input. Failed items are reported and do not stop the
/// rest. threads == 0 selects default_thread_count(). Output does not depend on
/// the thread count.
BatchResult batch_forward(const MoELayer& layer, std::span<const Vector> xs,
                          const BarycenterConfig& cfg = {}, std::size_t threads = 0);

/// Deterministic initialization: all matrices uniform(-1/sqrt(D), 1/sqrt(D)) drawn
/// from CounterRng(seed, kInitStream) in declaration order (router gate, then per
/// expert w_in, w_out); all biases zero.
MoELayer init_layer(std::uint64_t seed, std::size_t num_experts, std::size_t dim,
                    std::size_t hidden, std::size_t top_k, AggregatorKind aggregator);

inline constexpr std::uint64_t kInitStream = 0x1A7E5EEDULL;

}  // namespace geoagg
