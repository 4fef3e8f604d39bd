#include "geoagg/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "geoagg/parallel.hpp"
#include "geoagg/rng.hpp"

namespace geoagg {

void SimConfig::validate() const {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "dim must be >= 2");
  if (num_samples < 1) throw Error(ErrorCode::InvalidArgument, "num_samples must be >= 1");
  if (experts_per_sample < 2) throw Error(ErrorCode::InvalidArgument, "experts_per_sample must be >= 2");
  if (!(angle_deg_min >= 0.0 && angle_deg_min <= angle_deg_max && angle_deg_max < 180.0)) {
    throw Error(ErrorCode::InvalidArgument, "angle range must satisfy 0 <= min <= max < 180");
  }
  if (!(norm_log_sigma >= 0.0) || !std::isfinite(norm_log_sigma)) {
    throw Error(ErrorCode::InvalidArgument, "norm_log_sigma must be >= 0");
  }
}

namespace {

Vector gaussian_direction(CounterRng& rng, std::size_t dim) {
  for (;;) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    const double n = norm(v);
    if (n > 1e-6) {
      for (double& x : v) x /= n;
      return v;
    }
  }
}

// Uniform unit vector orthogonal to `u` (assumed unit).
Vector orthogonal_direction(CounterRng& rng, std::span<const double> u) {
  for (;;) {
    Vector v(u.size());
    for (double& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) axpy(-dot(v, u), u, v);
    const double n = norm(v);
    if (n > 1e-6) {
      for (double& x : v) x /= n;
      return v;
    }
  }
}

Vector rotate_away(std::span<const double> u, std::span<const double> v, double phi) {
  Vector out(u.size());
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * u[i] + s * v[i];
  const double n = norm(out);
  for (double& x : out) x /= n;
  return out;
}

}  // namespace

SampledBundle sample_bundle_detailed(const SimConfig& cfg, std::uint64_t index) {
  cfg.validate();
  if (index >= cfg.num_samples) throw Error(ErrorCode::InvalidArgument, "sample index out of range");

  CounterRng rng(cfg.seed, index);
  const std::size_t k = cfg.experts_per_sample;
  const double lo = cfg.angle_deg_min * std::numbers::pi / 180.0;
  const double hi = cfg.angle_deg_max * std::numbers::pi / 180.0;

  std::vector<Vector> dirs;
  SampledBundle out;
  dirs.push_back(gaussian_direction(rng, cfg.dim));
  Vector centroid = dirs.front();
  for (std::size_t i = 1; i < k; ++i) {
    const UnitVector anchor = UnitVector::normalize(centroid);
    const double phi = rng.uniform(lo, hi);
    const Vector v = orthogonal_direction(rng, anchor.span());
    Vector u = rotate_away(anchor.span(), v, phi);
    const double achieved = angle_between(anchor, UnitVector::from_unit(u));
    if (std::abs(achieved - phi) > 1e-6) {
      throw Error(ErrorCode::InvalidAngle, "sample " + std::to_string(index) + ": constructed angle " +
                                               std::to_string(achieved) + " misses target " +
                                               std::to_string(phi));
    }
    axpy(1.0, u, centroid);
    dirs.push_back(std::move(u));
    out.target_angles.push_back(phi);
  }

  for (auto& d : dirs) {
    const double r = cfg.norm_log_sigma == 0.0 ? 1.0 : std::exp(cfg.norm_log_sigma * rng.normal());
    for (double& x : d) x *= r;
  }

  std::vector<double> w(k);
  if (cfg.weight_mode == WeightMode::Equal) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(k));
  } else {
    // Dirichlet(1, ..., 1) via normalized exponentials.
    double total = 0.0;
    for (double& x : w) {
      x = -std::log(1.0 - rng.uniform());
      total += x;
    }
    for (double& x : w) x /= total;
  }

  out.bundle.outputs = std::move(dirs);
  out.bundle.weights = std::move(w);
  return out;
}

ExpertBundle sample_bundle(const SimConfig& cfg, std::uint64_t index) {
  return sample_bundle_detailed(cfg, index).bundle;
}

GeometryReport run_simulation(const SimConfig& cfg, std::span<const AggregatorKind> kinds,
                              const BarycenterConfig& bcfg, std::size_t threads,
                              const ReportBins& bins) {
  cfg.validate();
  bcfg.validate();
  if (kinds.empty()) throw Error(ErrorCode::InvalidArgument, "at least one aggregator is required");
  if (threads == 0) threads = default_thread_count();

  const std::uint64_t shards = (cfg.num_samples + kSimulationShardSize - 1) / kSimulationShardSize;
  std::vector<GeometryReport> partial(shards, GeometryReport(bins));
  parallel_for(shards, threads, [&](std::size_t shard) {
    GeometryReport& local = partial[shard];
    for (AggregatorKind kind : kinds) local.track(kind);
    const std::uint64_t begin = shard * kSimulationShardSize;
    const std::uint64_t end = std::min(cfg.num_samples, begin + kSimulationShardSize);
    std::map<AggregatorKind, Vector> outputs;
    for (std::uint64_t i = begin; i < end; ++i) {
      const ExpertBundle bundle = sample_bundle(cfg, i);
      outputs.clear();
      for (AggregatorKind kind : kinds) {
        try {
          outputs.emplace(kind, aggregate(kind, bundle, bcfg));
        } catch (const Error&) {
          ++local.aggregation_errors[kind];
        }
      }
      accumulate_sample(local, bundle, outputs);
    }
  });

  GeometryReport report(bins);
  for (AggregatorKind kind : kinds) report.track(kind);
  for (const auto& p : partial) report = merge(report, p);
  return report;
}

}  // namespace geoagg
