#include "geoagg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

namespace geoagg {

Histogram::Histogram(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "histogram edges must be strictly increasing");
    }
  }
  counts_.assign(edges_.size() - 1, 0);
}

Histogram Histogram::uniform(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw Error(ErrorCode::InvalidArgument, "invalid uniform bin spec");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return Histogram(std::move(edges));
}

void Histogram::add(double x) {
  if (x < edges_.front()) {
    ++underflow_;
  } else if (!(x <= edges_.back())) {  // also catches NaN
    ++overflow_;
  } else if (x == edges_.back()) {
    ++counts_.back();
  } else {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    ++counts_[static_cast<std::size_t>(it - edges_.begin()) - 1];
  }
}

void Histogram::merge(const Histogram& other) {
  if (edges_ != other.edges_) throw Error(ErrorCode::BinMismatch, "histogram edges differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  underflow_ += other.underflow_;
  overflow_ += other.overflow_;
}

std::uint64_t Histogram::total() const noexcept {
  std::uint64_t t = underflow_ + overflow_;
  for (auto c : counts_) t += c;
  return t;
}

double Histogram::quantile(double q) const {
  const std::uint64_t n = total();
  if (n == 0) return 0.0;
  const double target = std::clamp(q, 0.0, 1.0) * static_cast<double>(n);
  double cum = static_cast<double>(underflow_);
  if (underflow_ > 0 && target <= cum) return edges_.front();
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const double c = static_cast<double>(counts_[i]);
    if (c > 0.0 && cum + c >= target) {
      const double frac = std::clamp((target - cum) / c, 0.0, 1.0);
      return edges_[i] + frac * (edges_[i + 1] - edges_[i]);
    }
    cum += c;
  }
  return edges_.back();
}

void RunningStats::add(double x) {
  if (count_ == 0) {
    min_ = max_ = x;
  } else {
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  count_ += other.count_;
  min_ = std::min(min_, other.min_);
  max_ = std::max(max_, other.max_);
}

double RunningStats::stddev() const {
  if (count_ < 2) return 0.0;
  return std::sqrt(std::max(0.0, m2_) / static_cast<double>(count_ - 1));
}

void Distribution::merge(const Distribution& other) {
  histogram.merge(other.histogram);
  stats.merge(other.stats);
}

SummaryStats Distribution::summary() const {
  SummaryStats s;
  s.count = stats.count();
  if (s.count == 0) return s;
  s.mean = stats.mean();
  s.stddev = stats.stddev();
  s.min = stats.min();
  s.max = stats.max();
  auto pct = [&](double q) { return std::clamp(histogram.quantile(q), s.min, s.max); };
  s.p05 = pct(0.05);
  s.p50 = pct(0.50);
  s.p95 = pct(0.95);
  return s;
}

GeometryReport::GeometryReport(const ReportBins& b)
    : bins(b), norm_ratio{b.norm_ratio.make(), {}}, pairwise_angle_deg{b.angle_deg.make(), {}} {}

Distribution& GeometryReport::track(AggregatorKind kind) {
  auto it = collapse_ratio.find(kind);
  if (it == collapse_ratio.end()) {
    it = collapse_ratio.emplace(kind, Distribution{bins.collapse.make(), {}}).first;
  }
  return it->second;
}

void accumulate_sample(GeometryReport& report, const ExpertBundle& bundle,
                       const std::map<AggregatorKind, Vector>& outputs) {
  bundle.validate();
  std::vector<double> radii;
  std::vector<UnitVector> dirs;
  for (const Vector& e : bundle.outputs) {
    const double r = norm(e);
    if (r < kDegenerateEps) {
      ++report.degenerate_skips;
      continue;
    }
    radii.push_back(r);
    dirs.push_back(UnitVector::normalize(e));
  }
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      report.norm_ratio.add(radii[i] / radii[j]);
      report.pairwise_angle_deg.add(angle_between(dirs[i], dirs[j]) * 180.0 / std::numbers::pi);
    }
  }
  for (const auto& [kind, y] : outputs) {
    Distribution& d = report.track(kind);
    try {
      d.add(collapse_ratio(bundle, y));
    } catch (const Error&) {
      ++report.aggregation_errors[kind];
    }
  }
  ++report.samples;
}

GeometryReport merge(const GeometryReport& a, const GeometryReport& b) {
  GeometryReport out = a;
  out.norm_ratio.merge(b.norm_ratio);
  out.pairwise_angle_deg.merge(b.pairwise_angle_deg);
  for (const auto& [kind, dist] : b.collapse_ratio) {
    auto it = out.collapse_ratio.find(kind);
    if (it == out.collapse_ratio.end()) {
      Distribution fresh{out.bins.collapse.make(), {}};
      fresh.merge(dist);
      out.collapse_ratio.emplace(kind, std::move(fresh));
    } else {
      it->second.merge(dist);
    }
  }
  out.samples += b.samples;
  out.degenerate_skips += b.degenerate_skips;
  for (const auto& [kind, n] : b.aggregation_errors) out.aggregation_errors[kind] += n;
  return out;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::vector<std::pair<std::string, const Distribution*>> report_metrics(const GeometryReport& report) {
  std::vector<std::pair<std::string, const Distribution*>> m;
  m.emplace_back("norm_ratio", &report.norm_ratio);
  m.emplace_back("pairwise_angle_deg", &report.pairwise_angle_deg);
  for (const auto& [kind, dist] : report.collapse_ratio) {
    m.emplace_back("collapse_ratio." + std::string(to_string(kind)), &dist);
  }
  return m;
}

namespace {

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    out += format_number(h.edges()[i]) + "," + format_number(h.edges()[i + 1]) + "," +
           std::to_string(h.counts()[i]) + "\n";
  }
  return out;
}

nlohmann::ordered_json distribution_json(const Distribution& d) {
  const SummaryStats s = d.summary();
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  j["min"] = s.min;
  j["p05"] = s.p05;
  j["p50"] = s.p50;
  j["p95"] = s.p95;
  j["max"] = s.max;
  j["histogram"] = {{"bin_edges", d.histogram.edges()},
                    {"counts", d.histogram.counts()},
                    {"underflow", d.histogram.underflow()},
                    {"overflow", d.histogram.overflow()}};
  return j;
}

}  // namespace

std::vector<CsvDocument> report_to_csv(const GeometryReport& report) {
  std::vector<CsvDocument> docs;
  docs.push_back({"norm_ratio.csv", histogram_csv(report.norm_ratio.histogram)});
  docs.push_back({"angles.csv", histogram_csv(report.pairwise_angle_deg.histogram)});
  for (const auto& [kind, dist] : report.collapse_ratio) {
    docs.push_back({"collapse_" + std::string(to_string(kind)) + ".csv", histogram_csv(dist.histogram)});
  }
  std::string summary = "metric,count,mean,stddev,min,p05,p50,p95,max\n";
  for (const auto& [name, dist] : report_metrics(report)) {
    const SummaryStats s = dist->summary();
    summary += name + "," + std::to_string(s.count) + "," + format_number(s.mean) + "," +
               format_number(s.stddev) + "," + format_number(s.min) + "," + format_number(s.p05) +
               "," + format_number(s.p50) + "," + format_number(s.p95) + "," +
               format_number(s.max) + "\n";
  }
  docs.push_back({"summary.csv", std::move(summary)});
  return docs;
}

std::string report_to_json(const GeometryReport& report) {
  nlohmann::ordered_json j;
  j["samples"] = report.samples;
  j["degenerate_skips"] = report.degenerate_skips;
  j["norm_ratio"] = distribution_json(report.norm_ratio);
  j["pairwise_angle_deg"] = distribution_json(report.pairwise_angle_deg);
  nlohmann::ordered_json collapse = nlohmann::ordered_json::object();
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();
  for (const auto& [kind, dist] : report.collapse_ratio) {
    const std::string key(to_string(kind));
    collapse[key] = distribution_json(dist);
    const auto it = report.aggregation_errors.find(kind);
    errors[key] = it == report.aggregation_errors.end() ? 0 : it->second;
  }
  j["collapse_ratio"] = std::move(collapse);
  j["aggregation_errors"] = std::move(errors);
  return j.dump(2) + "\n";
}

}  // namespace geoagg
