#pragma once

// Synthetic expert bundles with near-constant norms and controlled angular
// separation, plus the Monte-Carlo driver that turns them into a GeometryReport.

#include <cstdint>
#include <span>
#include <vector>

#include "geoagg/geometry.hpp"

namespace geoagg {

enum class WeightMode { Equal, DirichletUniform };

struct SimConfig {
  std::size_t dim = 768;
  std::uint64_t num_samples = 100000;
  std::size_t experts_per_sample = 2;
  double angle_deg_min = 40.0;
  double angle_deg_max = 80.0;
  double norm_log_sigma = 0.05;  ///< radii are exp(N(0, sigma^2))
  WeightMode weight_mode = WeightMode::Equal;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SampledBundle {
  ExpertBundle bundle;
  /// Target angle (radians) of each expert k >= 1: to expert 0 when K = 2, to the
  /// running centroid direction otherwise.
  std::vector<double> target_angles;
};

/// Draws bundle `index` from CounterRng(cfg.seed, index); no sequential state.
///
/// K = 2: u1 uniform on the sphere, phi uniform in the angle range,
/// u2 = cos(phi) u1 + sin(phi) v with v uniform in the orthogonal complement of u1.
/// K > 2 (heuristic): each further direction sits at a drawn angle from the
/// normalized sum of the directions so far; pairwise angles are not controlled.
SampledBundle sample_bundle_detailed(const SimConfig& cfg, std::uint64_t index);
ExpertBundle sample_bundle(const SimConfig& cfg, std::uint64_t index);

/// Samples per shard in run_simulation. Shards are merged in index order, so the
/// report is independent of the worker count.
inline constexpr std::uint64_t kSimulationShardSize = 4096;

/// Aggregates every sample with each kind and accumulates the report.
/// Aggregation failures are counted per kind and do not stop the run.
GeometryReport run_simulation(const SimConfig& cfg, std::span<const AggregatorKind> kinds,
                              const BarycenterConfig& bcfg = {}, std::size_t threads = 0,
                              const ReportBins& bins = {});

}  // namespace geoagg
