#pragma once

// Streaming, mergeable statistics over expert bundles: pairwise norm ratios,
// pairwise angles (degrees) and per-aggregator collapse ratios |y| / mean(r_i).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geoagg/aggregation.hpp"

namespace geoagg {

/// Fixed-edge histogram. Bins are half-open [lo, hi) except the last, which is
/// closed; a value on an interior edge lands in the upper bin.
class Histogram {
 public:
  Histogram() = default;
  explicit Histogram(std::vector<double> edges);
  /// `bins` equal-width bins over [lo, hi]; edge i is lo + (hi - lo) * i / bins.
  static Histogram uniform(double lo, double hi, std::size_t bins);

  void add(double x);
  void merge(const Histogram& other);  // BinMismatch unless edges are identical

  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t underflow() const noexcept { return underflow_; }
  std::uint64_t overflow() const noexcept { return overflow_; }
  std::uint64_t total() const noexcept;
  std::size_t bins() const noexcept { return counts_.size(); }

  /// Linear interpolation inside the bin holding the q-quantile. Mass in the
  /// underflow/overflow counters resolves to the outer edges.
  double quantile(double q) const;

  friend bool operator==(const Histogram&, const Histogram&) = default;

 private:
  std::vector<double> edges_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
};

/// count / mean / M2 / min / max with Chan's pairwise combination for merges.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return count_ ? mean_ : 0.0; }
  /// Sample standard deviation (n - 1 denominator); 0 for fewer than two samples.
  double stddev() const;
  double min() const noexcept { return count_ ? min_ : 0.0; }
  double max() const noexcept { return count_ ? max_ : 0.0; }

  friend bool operator==(const RunningStats&, const RunningStats&) = default;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

struct SummaryStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

/// A histogram and exact moments fed from the same sample stream.
struct Distribution {
  Histogram histogram;
  RunningStats stats;

  void add(double x) {
    histogram.add(x);
    stats.add(x);
  }
  void merge(const Distribution& other);
  /// Percentiles come from the histogram and are accurate to one bin width;
  /// they are clamped into [min, max].
  SummaryStats summary() const;

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

struct BinSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 1;

  Histogram make() const { return Histogram::uniform(lo, hi, bins); }

  friend bool operator==(const BinSpec&, const BinSpec&) = default;
};

struct ReportBins {
  BinSpec norm_ratio{0.49, 1.51, 51};
  BinSpec angle_deg{0.0, 180.0, 36};
  BinSpec collapse{0.0, 1.2, 50};

  friend bool operator==(const ReportBins&, const ReportBins&) = default;
};

struct GeometryReport {
  explicit GeometryReport(const ReportBins& bins = {});

  ReportBins bins;
  Distribution norm_ratio;
  Distribution pairwise_angle_deg;
  std::map<AggregatorKind, Distribution> collapse_ratio;

  std::uint64_t samples = 0;           ///< bundles accumulated
  std::uint64_t degenerate_skips = 0;  ///< near-zero expert outputs left out of ratios/angles
  std::map<AggregatorKind, std::uint64_t> aggregation_errors;

  /// Ensures a (possibly empty) collapse distribution exists for `kind`.
  Distribution& track(AggregatorKind kind);

  friend bool operator==(const GeometryReport&, const GeometryReport&) = default;
};

/// Records one bundle: r_i / r_j and angle(u_i, u_j) for every pair i < j of
/// non-degenerate experts, and |y| / mean(r) for each supplied aggregator output.
void accumulate_sample(GeometryReport& report, const ExpertBundle& bundle,
                       const std::map<AggregatorKind, Vector>& outputs);

/// Counts add; moments combine exactly. BinMismatch if any histogram edges differ.
GeometryReport merge(const GeometryReport& a, const GeometryReport& b);

struct CsvDocument {
  std::string name;
  std::string content;
};

/// norm_ratio.csv, angles.csv, collapse_<kind>.csv per tracked kind, summary.csv.
std::vector<CsvDocument> report_to_csv(const GeometryReport& report);

/// JSON mirror of the report, keys in fixed order.
std::string report_to_json(const GeometryReport& report);

/// Metric names in summary order: norm_ratio, pairwise_angle_deg, collapse_ratio.<kind>...
std::vector<std::pair<std::string, const Distribution*>> report_metrics(const GeometryReport& report);

/// printf("%.9g") formatting used for every number in the CSV outputs.
std::string format_number(double x);

}  // namespace geoagg
