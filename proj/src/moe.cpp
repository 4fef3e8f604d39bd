#include "geoagg/moe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "geoagg/parallel.hpp"
#include "geoagg/rng.hpp"

namespace geoagg {

Vector Matrix::apply(std::span<const double> x) const {
  require_same_dim(cols, x.size(), "matrix-vector product");
  Vector y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* a = data.data() + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += a[c] * x[c];
    y[r] = s;
  }
  return y;
}

namespace {

void check_matrix(const Matrix& m, const char* name) {
  if (m.data.size() != m.rows * m.cols) {
    throw Error(ErrorCode::ShapeMismatch, std::string(name) + " storage does not match its shape");
  }
  if (!all_finite(m.data)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " has non-finite entries");
}

}  // namespace

void RouterParams::validate() const {
  check_matrix(gate, "gate matrix");
  if (gate.rows == 0 || gate.cols == 0) throw Error(ErrorCode::InvalidArgument, "gate matrix is empty");
  if (top_k < 1 || top_k > gate.rows) {
    throw Error(ErrorCode::InvalidArgument, "top_k must lie in [1, num_experts]");
  }
}

void ExpertParams::validate() const {
  check_matrix(w_in, "w_in");
  check_matrix(w_out, "w_out");
  if (w_out.rows != w_in.cols || w_out.cols != w_in.rows || b_in.size() != w_in.rows ||
      b_out.size() != w_in.cols) {
    throw Error(ErrorCode::ShapeMismatch, "expert parameter shapes are inconsistent");
  }
  if (!all_finite(b_in) || !all_finite(b_out)) {
    throw Error(ErrorCode::InvalidArgument, "expert biases have non-finite entries");
  }
}

void MoELayer::validate() const {
  router.validate();
  if (experts.size() != router.num_experts()) {
    throw Error(ErrorCode::ShapeMismatch, "expert count does not match router rows");
  }
  for (const auto& e : experts) {
    e.validate();
    if (e.dim() != router.dim() || e.hidden() != experts.front().hidden()) {
      throw Error(ErrorCode::ShapeMismatch, "experts must share D and H with the router");
    }
  }
}

RoutingDecision route_logits(std::span<const double> logits, std::size_t top_k) {
  if (top_k < 1 || top_k > logits.size()) {
    throw Error(ErrorCode::InvalidArgument, "top_k must lie in [1, num_experts]");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> prob(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    prob[i] = std::exp(logits[i] - peak);
    z += prob[i];
  }
  for (double& p : prob) p /= z;

  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return prob[a] > prob[b]; });

  RoutingDecision d;
  d.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k));
  double selected = 0.0;
  for (std::size_t i : d.indices) selected += prob[i];
  for (std::size_t i : d.indices) d.weights.push_back(prob[i] / selected);
  return d;
}

RoutingDecision route(const RouterParams& router, std::span<const double> x) {
  return route_logits(router.gate.apply(x), router.top_k);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

Vector expert_forward(const ExpertParams& p, std::span<const double> x) {
  Vector h = p.w_in.apply(x);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = gelu(h[i] + p.b_in[i]);
  Vector y = p.w_out.apply(h);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += p.b_out[i];
  return y;
}

MoETrace moe_trace(const MoELayer& layer, std::span<const double> x, const BarycenterConfig& cfg) {
  require_same_dim(layer.dim(), x.size(), "moe input");
  MoETrace t;
  t.routing = route(layer.router, x);
  for (std::size_t i : t.routing.indices) t.bundle.outputs.push_back(expert_forward(layer.experts[i], x));
  t.bundle.weights = t.routing.weights;
  t.output = aggregate(layer.aggregator, t.bundle, cfg);
  return t;
}

Vector moe_forward(const MoELayer& layer, std::span<const double> x, const BarycenterConfig& cfg) {
  return moe_trace(layer, x, cfg).output;
}

BatchResult batch_forward(const MoELayer& layer, std::span<const Vector> xs,
                          const BarycenterConfig& cfg, std::size_t threads) {
  layer.validate();
  cfg.validate();
  BatchResult result;
  result.outputs.resize(xs.size());
  std::vector<std::optional<BatchItemError>> failures(xs.size());
  if (threads == 0) threads = default_thread_count();

  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (xs.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    const std::size_t end = std::min(xs.size(), (chunk + 1) * kChunk);
    for (std::size_t i = chunk * kChunk; i < end; ++i) {
      try {
        result.outputs[i] = moe_forward(layer, xs[i], cfg);
      } catch (const Error& e) {
        failures[i] = BatchItemError{i, e.code(), e.what()};
      }
    }
  });
  for (auto& f : failures) {
    if (f) result.errors.push_back(std::move(*f));
  }
  return result;
}

MoELayer init_layer(std::uint64_t seed, std::size_t num_experts, std::size_t dim,
                    std::size_t hidden, std::size_t top_k, AggregatorKind aggregator) {
  if (num_experts == 0 || dim == 0 || hidden == 0 || top_k == 0) {
    throw Error(ErrorCode::InvalidArgument, "layer sizes must be positive");
  }
  if (top_k > num_experts) throw Error(ErrorCode::InvalidArgument, "top_k exceeds num_experts");

  CounterRng rng(seed, kInitStream);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  auto fill = [&](Matrix& m) {
    for (double& v : m.data) v = rng.uniform(-bound, bound);
  };

  MoELayer layer;
  layer.aggregator = aggregator;
  layer.router.top_k = top_k;
  layer.router.gate = Matrix(num_experts, dim);
  fill(layer.router.gate);
  layer.experts.resize(num_experts);
  for (auto& e : layer.experts) {
    e.w_in = Matrix(hidden, dim);
    fill(e.w_in);
    e.b_in.assign(hidden, 0.0);
    e.w_out = Matrix(dim, hidden);
    fill(e.w_out);
    e.b_out.assign(dim, 0.0);
  }
  return layer;
}

}  // namespace geoagg
