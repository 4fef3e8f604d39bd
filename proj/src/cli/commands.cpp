#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoagg/cli.hpp"
#include "geoagg/dump_format.hpp"
#include "geoagg/moe.hpp"
#include "geoagg/parallel.hpp"
#include "geoagg/rng.hpp"
#include "geoagg/synth.hpp"

namespace geoagg::cli {

namespace {

namespace fs = std::filesystem;

/// Raised for flag values that parse but are not acceptable; exits with 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t resolve_threads() {
  try {
    return default_thread_count();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::vector<AggregatorKind> parse_aggregator_list(const std::string& text, bool allow_empty) {
  std::vector<AggregatorKind> kinds;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    const auto kind = parse_aggregator(token);
    if (!kind) {
      throw UsageError("--aggregators: unknown aggregator '" + token +
                       "' (expected linear, sba, norm-free, unit)");
    }
    if (std::find(kinds.begin(), kinds.end(), *kind) == kinds.end()) kinds.push_back(*kind);
  }
  if (kinds.empty() && !allow_empty) throw UsageError("--aggregators: at least one aggregator is required");
  return kinds;
}

void parse_angle_range(const std::string& text, SimConfig& cfg) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--angle-deg: expected MIN:MAX, got '" + text + "'");
  try {
    std::size_t used = 0;
    const std::string lo = text.substr(0, colon);
    const std::string hi = text.substr(colon + 1);
    cfg.angle_deg_min = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    cfg.angle_deg_max = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
  } catch (const std::logic_error&) {
    throw UsageError("--angle-deg: cannot parse '" + text + "' as MIN:MAX degrees");
  }
  if (!(cfg.angle_deg_min >= 0.0 && cfg.angle_deg_max < 180.0)) {
    throw UsageError("--angle-deg: angles must satisfy 0 <= MIN and MAX < 180");
  }
  if (cfg.angle_deg_min > cfg.angle_deg_max) {
    throw UsageError("--angle-deg: MIN must not exceed MAX (got " + text + ")");
  }
}

BarycenterConfig barycenter_config(double tol, int max_iters) {
  BarycenterConfig b{tol, max_iters};
  try {
    b.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--karcher-tol/--karcher-iters: ") + e.what());
  }
  return b;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::size_t dim = 768;
  std::uint64_t samples = 100000;
  std::size_t experts = 2;
  std::string angle_deg = "40:80";
  double norm_sigma = 0.05;
  std::string weights = "equal";
  std::string aggregators = "linear,sba,norm-free,unit";
  std::uint64_t seed = 0;
  std::string out_dir;
  bool emit_dump = false;
  double karcher_tol = 1e-10;
  int karcher_iters = 100;
};

void add_karcher_flags(CLI::App* cmd, double& tol, int& iters) {
  cmd->add_option("--karcher-tol", tol, "Karcher iteration stop threshold on the tangent update norm")
      ->capture_default_str();
  cmd->add_option("--karcher-iters", iters, "Karcher iteration cap")->capture_default_str();
}

std::string mean_collapse_line(const GeometryReport& report) {
  std::string line = "samples=" + std::to_string(report.samples) + " mean_collapse_ratio";
  for (const auto& [kind, dist] : report.collapse_ratio) {
    line += " " + std::string(to_string(kind)) + "=" + format_number(dist.stats.mean());
  }
  return line;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimConfig cfg;
  cfg.dim = a.dim;
  cfg.num_samples = a.samples;
  cfg.experts_per_sample = a.experts;
  cfg.norm_log_sigma = a.norm_sigma;
  cfg.seed = a.seed;
  parse_angle_range(a.angle_deg, cfg);
  if (a.weights == "equal") {
    cfg.weight_mode = WeightMode::Equal;
  } else if (a.weights == "dirichlet") {
    cfg.weight_mode = WeightMode::DirichletUniform;
  } else {
    throw UsageError("--weights: expected equal or dirichlet, got '" + a.weights + "'");
  }
  if (a.dim < 2) throw UsageError("--dim: must be >= 2");
  if (a.samples < 1) throw UsageError("--samples: must be >= 1");
  if (a.experts < 2) throw UsageError("--experts: must be >= 2");
  if (!(a.norm_sigma >= 0.0)) throw UsageError("--norm-sigma: must be >= 0");
  const auto kinds = parse_aggregator_list(a.aggregators, false);
  const BarycenterConfig bcfg = barycenter_config(a.karcher_tol, a.karcher_iters);
  const std::size_t threads = resolve_threads();

  const GeometryReport report = run_simulation(cfg, kinds, bcfg, threads);
  const fs::path dir(a.out_dir);
  write_report_files(report, dir);

  if (a.emit_dump) {
    std::ofstream os(dir / "bundles.geoa", std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + (dir / "bundles.geoa").string());
    DumpWriter writer(os, DumpHeader{static_cast<std::uint32_t>(cfg.dim),
                                     static_cast<std::uint32_t>(cfg.experts_per_sample), cfg.num_samples});
    for (std::uint64_t i = 0; i < cfg.num_samples; ++i) writer.write(sample_bundle(cfg, i));
    writer.finish();
  }

  out << mean_collapse_line(report) << "\n";
  return 0;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string input;
  std::string out_dir;
  std::string aggregators;
  bool no_renormalize = false;
  double karcher_tol = 1e-10;
  int karcher_iters = 100;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto kinds = parse_aggregator_list(a.aggregators, true);
  const BarycenterConfig bcfg = barycenter_config(a.karcher_tol, a.karcher_iters);

  std::ifstream is(a.input, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + a.input);
  DumpReader reader(is);

  GeometryReport report;
  for (AggregatorKind kind : kinds) report.track(kind);
  DumpRecord record;
  std::map<AggregatorKind, Vector> outputs;
  while (reader.next(record)) {
    const ExpertBundle bundle = record_to_bundle(record, reader.header().dim, !a.no_renormalize);
    outputs.clear();
    for (AggregatorKind kind : kinds) {
      try {
        outputs.emplace(kind, aggregate(kind, bundle, bcfg));
      } catch (const Error&) {
        ++report.aggregation_errors[kind];
      }
    }
    accumulate_sample(report, bundle, outputs);
  }
  write_report_files(report, fs::path(a.out_dir));
  out << mean_collapse_line(report) << "\n";
  return 0;
}

// ---------------------------------------------------------------- moe-demo

struct MoeDemoArgs {
  std::uint64_t seed = 0;
  std::size_t experts = 8;
  std::size_t dim = 64;
  std::size_t hidden = 128;
  std::size_t topk = 2;
  std::size_t samples = 1000;
  std::string out_dir;
};

constexpr std::uint64_t kDemoInputSalt = 0xD3E0A11CE5ULL;

int cmd_moe_demo(const MoeDemoArgs& a, std::ostream& out) {
  if (a.experts < 1) throw UsageError("--experts: must be >= 1");
  if (a.dim < 1) throw UsageError("--dim: must be >= 1");
  if (a.hidden < 1) throw UsageError("--hidden: must be >= 1");
  if (a.topk < 1 || a.topk > a.experts) throw UsageError("--topk: must lie in [1, --experts]");
  if (a.samples < 1) throw UsageError("--samples: must be >= 1");
  const std::size_t threads = resolve_threads();

  MoELayer layer = init_layer(a.seed, a.experts, a.dim, a.hidden, a.topk, AggregatorKind::Linear);
  std::vector<Vector> xs(a.samples);
  for (std::size_t i = 0; i < a.samples; ++i) {
    CounterRng rng(a.seed ^ kDemoInputSalt, i);
    xs[i].resize(a.dim);
    for (double& v : xs[i]) v = rng.normal();
  }

  nlohmann::ordered_json doc;
  doc["seed"] = a.seed;
  doc["experts"] = a.experts;
  doc["dim"] = a.dim;
  doc["hidden"] = a.hidden;
  doc["topk"] = a.topk;
  doc["samples"] = a.samples;
  nlohmann::ordered_json kinds = nlohmann::ordered_json::object();

  out << "moe-demo seed=" << a.seed << " experts=" << a.experts << " dim=" << a.dim
      << " hidden=" << a.hidden << " topk=" << a.topk << " samples=" << a.samples << "\n";
  for (AggregatorKind kind : kAllAggregators) {
    layer.aggregator = kind;
    const BatchResult batch = batch_forward(layer, xs, {}, threads);
    RunningStats norms;
    for (const auto& y : batch.outputs) {
      if (y) norms.add(norm(*y));
    }
    out << "kind=" << to_string(kind) << " count=" << norms.count()
        << " mean_norm=" << format_number(norms.mean()) << " stddev_norm=" << format_number(norms.stddev())
        << " min_norm=" << format_number(norms.min()) << " max_norm=" << format_number(norms.max())
        << " errors=" << batch.errors.size() << "\n";
    kinds[std::string(to_string(kind))] = {{"count", norms.count()},   {"mean_norm", norms.mean()},
                                           {"stddev_norm", norms.stddev()}, {"min_norm", norms.min()},
                                           {"max_norm", norms.max()},   {"errors", batch.errors.size()}};
  }

  // Radius law: |y_sba| against sum_i w_i |e_i| on the same routing.
  layer.aggregator = AggregatorKind::SBA;
  std::vector<double> residual(a.samples, 0.0);
  parallel_for(a.samples, threads, [&](std::size_t i) {
    try {
      const MoETrace t = moe_trace(layer, xs[i]);
      double expected = 0.0;
      for (std::size_t k = 0; k < t.bundle.size(); ++k) expected += t.bundle.weights[k] * norm(t.bundle.outputs[k]);
      residual[i] = std::abs(norm(t.output) - expected);
    } catch (const Error&) {
      // counted as an error in the per-kind line above
    }
  });
  const double max_residual = *std::max_element(residual.begin(), residual.end());
  out << "sba_radius_law_max_residual=" << format_number(max_residual) << "\n";
  doc["aggregators"] = std::move(kinds);
  doc["sba_radius_law_max_residual"] = max_residual;

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    std::ofstream os(fs::path(a.out_dir) / "moe_demo.json", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write moe_demo.json");
    os << doc.dump(2) << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::size_t dim = 768;
  std::size_t topk = 2;
  std::size_t samples = 10000;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  bool json = false;
};

struct Timing {
  double ns_per_op = 0.0;
  double checksum = 0.0;
};

Timing time_kind(AggregatorKind kind, const std::vector<ExpertBundle>& bundles, std::size_t repeats) {
  Timing t;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < repeats; ++r) {
    double checksum = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& b : bundles) {
      const Vector y = aggregate(kind, b);
      for (double v : y) checksum += v;
    }
    const auto stop = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::nano>(stop - start).count());
    t.checksum = checksum;
  }
  t.ns_per_op = best / static_cast<double>(bundles.size());
  return t;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.samples < 1) throw UsageError("--samples: must be >= 1");
  if (a.dim < 2) throw UsageError("--dim: must be >= 2");
  if (a.topk < 1) throw UsageError("--topk: must be >= 1");
  if (a.repeats < 1) throw UsageError("--repeats: must be >= 1");

  SimConfig cfg;
  cfg.dim = a.dim;
  cfg.num_samples = a.samples;
  cfg.experts_per_sample = std::max<std::size_t>(2, a.topk);
  cfg.seed = a.seed;
  std::vector<ExpertBundle> bundles;
  bundles.reserve(a.samples);
  for (std::size_t i = 0; i < a.samples; ++i) {
    ExpertBundle b = sample_bundle(cfg, i);
    if (a.topk == 1) b = ExpertBundle{{b.outputs.front()}, {1.0}};
    bundles.push_back(std::move(b));
  }

  const Timing linear = time_kind(AggregatorKind::Linear, bundles, a.repeats);
  const Timing sba = time_kind(AggregatorKind::SBA, bundles, a.repeats);
  const double ratio = sba.ns_per_op / std::max(linear.ns_per_op, 1e-3);

  if (a.json) {
    nlohmann::ordered_json j;
    j["dim"] = a.dim;
    j["topk"] = a.topk;
    j["samples"] = a.samples;
    j["linear_ns_per_op"] = linear.ns_per_op;
    j["sba_ns_per_op"] = sba.ns_per_op;
    j["ratio"] = ratio;
    j["checksum_linear"] = linear.checksum;
    j["checksum_sba"] = sba.checksum;
    out << j.dump() << "\n";
  } else {
    out << "dim=" << a.dim << " topk=" << a.topk << " samples=" << a.samples
        << " linear_ns_per_op=" << format_number(linear.ns_per_op)
        << " sba_ns_per_op=" << format_number(sba.ns_per_op) << " ratio=" << format_number(ratio)
        << " checksum_linear=" << format_number(linear.checksum)
        << " checksum_sba=" << format_number(sba.checksum) << "\n";
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expert-output aggregation on the hypersphere: simulation, analysis and benchmarks", "geoagg"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo geometry report over synthetic expert bundles");
  simulate->add_option("--dim", sim.dim, "Embedding dimension D (>= 2)")->capture_default_str();
  simulate->add_option("--samples", sim.samples, "Number of bundles")->capture_default_str();
  simulate->add_option("--experts", sim.experts, "Experts per bundle K (>= 2)")->capture_default_str();
  simulate->add_option("--angle-deg", sim.angle_deg, "Angle range MIN:MAX in degrees, 0 <= MIN <= MAX < 180")
      ->capture_default_str();
  simulate->add_option("--norm-sigma", sim.norm_sigma, "Log-normal spread of expert radii")->capture_default_str();
  simulate->add_option("--weights", sim.weights, "Gate weights: equal or dirichlet")->capture_default_str();
  simulate->add_option("--aggregators", sim.aggregators, "Comma list of linear, sba, norm-free, unit")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Directory for CSV/JSON outputs")->required();
  simulate->add_flag("--emit-dump", sim.emit_dump, "Also write the bundles to <out-dir>/bundles.geoa");
  add_karcher_flags(simulate, sim.karcher_tol, sim.karcher_iters);

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Geometry report over a GEOA expert-output dump");
  analyze->add_option("--input", ana.input, "GEOA dump file")->required();
  analyze->add_option("--out-dir", ana.out_dir, "Directory for CSV/JSON outputs")->required();
  analyze->add_option("--aggregators", ana.aggregators,
                      "Comma list of linear, sba, norm-free, unit to evaluate per record (default none)");
  analyze->add_flag("--no-renormalize", ana.no_renormalize,
                    "Keep stored gate weights instead of rescaling them to sum 1");
  add_karcher_flags(analyze, ana.karcher_tol, ana.karcher_iters);

  MoeDemoArgs demo;
  auto* moe = app.add_subcommand("moe-demo", "Seeded toy MoE layer run under every aggregator");
  moe->add_option("--seed", demo.seed, "Layer and input seed")->capture_default_str();
  moe->add_option("--experts", demo.experts, "Number of experts")->capture_default_str();
  moe->add_option("--dim", demo.dim, "Model dimension D")->capture_default_str();
  moe->add_option("--hidden", demo.hidden, "Expert hidden width H")->capture_default_str();
  moe->add_option("--topk", demo.topk, "Experts routed per input K")->capture_default_str();
  moe->add_option("--samples", demo.samples, "Number of random inputs")->capture_default_str();
  moe->add_option("--out-dir", demo.out_dir, "Optional directory for moe_demo.json");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time linear against SBA aggregation");
  bench_cmd->add_option("--dim", bench.dim, "Embedding dimension D")->capture_default_str();
  bench_cmd->add_option("--topk", bench.topk, "Experts per bundle K")->capture_default_str();
  bench_cmd->add_option("--samples", bench.samples, "Bundles per timing pass")->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats, "Timing passes; the fastest is reported")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Bundle seed")->capture_default_str();
  bench_cmd->add_flag("--json", bench.json, "Print one JSON object instead of key=value text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (analyze->parsed()) return cmd_analyze(ana, out);
    if (moe->parsed()) return cmd_moe_demo(demo, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace geoagg::cli
