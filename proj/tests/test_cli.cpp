#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "geoagg/cli.hpp"
#include "geoagg/dump_format.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "geoagg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = geoagg::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path(GEOAGG_TEST_TMP) / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value, 1);
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

const std::vector<std::string> kReportFiles = {"norm_ratio.csv",    "angles.csv",
                                               "collapse_linear.csv", "collapse_sba.csv",
                                               "summary.csv",       "summary.json"};

}  // namespace

TEST_CASE("help exits 0 for the tool and every command") {
  for (const std::vector<std::string>& args : std::vector<std::vector<std::string>>{
           {"--help"}, {"simulate", "--help"}, {"analyze", "--help"}, {"moe-demo", "--help"}, {"bench", "--help"}}) {
    const RunResult r = run(args);
    CHECK(r.code == 0);
    CHECK_FALSE(r.out.empty());
  }
  CHECK(run({"simulate", "--help"}).out.find("--angle-deg") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  const std::string dir = fresh_dir("usage").string();
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"simulate"}).code == 2);  // --out-dir is required
  CHECK(run({"simulate", "--out-dir", dir, "--bogus"}).code == 2);
  CHECK(run({"simulate", "--out-dir", dir, "--dim", "abc"}).code == 2);

  const RunResult reversed = run({"simulate", "--out-dir", dir, "--angle-deg", "80:40"});
  CHECK(reversed.code == 2);
  CHECK(reversed.err.find("--angle-deg") != std::string::npos);
  CHECK(run({"simulate", "--out-dir", dir, "--angle-deg", "40"}).code == 2);
  CHECK(run({"simulate", "--out-dir", dir, "--angle-deg", "10:180"}).code == 2);
  CHECK(run({"simulate", "--out-dir", dir, "--aggregators", "linear,mean"}).code == 2);
  CHECK(run({"simulate", "--out-dir", dir, "--weights", "random"}).code == 2);
  CHECK(run({"simulate", "--out-dir", dir, "--experts", "1"}).code == 2);
  CHECK(run({"simulate", "--out-dir", dir, "--karcher-iters", "0"}).code == 2);
  CHECK(run({"moe-demo", "--topk", "9", "--experts", "8"}).code == 2);
  CHECK(run({"bench", "--samples", "0"}).code == 2);
  CHECK(run({"analyze", "--out-dir", dir}).code == 2);
}

TEST_CASE("simulate writes the report files and is reproducible") {
  const fs::path a = fresh_dir("sim_a");
  const fs::path b = fresh_dir("sim_b");
  const std::vector<std::string> base = {"simulate",    "--dim",        "64", "--samples", "3000",
                                         "--angle-deg", "40:80",        "--norm-sigma", "0",
                                         "--aggregators", "linear,sba", "--seed", "7"};
  auto args_a = base;
  args_a.insert(args_a.end(), {"--out-dir", a.string()});
  auto args_b = base;
  args_b.insert(args_b.end(), {"--out-dir", b.string()});
  const RunResult ra = run(args_a);
  REQUIRE(ra.code == 0);
  CHECK(ra.out.find("samples=3000") != std::string::npos);
  CHECK(ra.out.find("linear=") != std::string::npos);
  CHECK(ra.out.find("sba=1") != std::string::npos);
  REQUIRE(run(args_b).code == 0);

  for (const auto& f : kReportFiles) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK_FALSE(fs::exists(a / "collapse_unit.csv"));
  CHECK_FALSE(fs::exists(a / "bundles.geoa"));

  const nlohmann::json j = load_json(a / "summary.json");
  CHECK(j["samples"] == 3000);
  const auto& lin = j["collapse_ratio"]["linear"];
  CHECK(lin["max"].get<double>() < 1.0);
  CHECK(lin["count"] == 3000);
  CHECK(std::abs(j["collapse_ratio"]["sba"]["mean"].get<double>() - 1.0) <= 1e-9);
  CHECK(slurp(a / "angles.csv").rfind("bin_lo,bin_hi,count\n", 0) == 0);
}

TEST_CASE("analyze reproduces simulate statistics from the emitted dump") {
  const fs::path sim = fresh_dir("roundtrip_sim");
  const fs::path ana = fresh_dir("roundtrip_ana");
  REQUIRE(run({"simulate", "--dim", "32", "--samples", "2000", "--experts", "3", "--weights", "dirichlet",
               "--seed", "3", "--emit-dump", "--out-dir", sim.string()})
              .code == 0);
  REQUIRE(fs::exists(sim / "bundles.geoa"));
  CHECK(fs::file_size(sim / "bundles.geoa") == geoagg::DumpHeader{32, 3, 2000}.file_bytes());

  const RunResult r = run({"analyze", "--input", (sim / "bundles.geoa").string(), "--aggregators",
                           "linear,sba,norm-free,unit", "--out-dir", ana.string()});
  REQUIRE(r.code == 0);
  const nlohmann::json s = load_json(sim / "summary.json");
  const nlohmann::json a = load_json(ana / "summary.json");
  CHECK(a["samples"] == s["samples"]);
  for (const char* metric : {"norm_ratio", "pairwise_angle_deg"}) {
    CHECK(a[metric]["count"] == s[metric]["count"]);
    CHECK(std::abs(a[metric]["mean"].get<double>() - s[metric]["mean"].get<double>()) <=
          1e-6 * std::max(1.0, std::abs(s[metric]["mean"].get<double>())));
  }
  for (const char* kind : {"linear", "sba", "norm-free", "unit"}) {
    CHECK(std::abs(a["collapse_ratio"][kind]["mean"].get<double>() -
                   s["collapse_ratio"][kind]["mean"].get<double>()) <= 1e-6);
  }

  // No aggregators: only the expert geometry is reported.
  const fs::path bare = fresh_dir("roundtrip_bare");
  REQUIRE(run({"analyze", "--input", (sim / "bundles.geoa").string(), "--out-dir", bare.string()}).code == 0);
  CHECK(load_json(bare / "summary.json")["collapse_ratio"].empty());
}

TEST_CASE("analyze on an empty dump and on corrupt input") {
  const fs::path dir = fresh_dir("analyze_edge");
  {
    std::ofstream os(dir / "empty.geoa", std::ios::binary);
    geoagg::write_dump(os, geoagg::DumpHeader{4, 2, 0}, {});
  }
  const RunResult empty = run({"analyze", "--input", (dir / "empty.geoa").string(), "--aggregators", "sba",
                               "--out-dir", (dir / "empty_out").string()});
  CHECK(empty.code == 0);
  CHECK(load_json(dir / "empty_out" / "summary.json")["samples"] == 0);

  std::string bytes = slurp(dir / "empty.geoa");
  bytes[0] = 'X';
  {
    std::ofstream os(dir / "bad.geoa", std::ios::binary);
    os << bytes;
  }
  const RunResult bad = run({"analyze", "--input", (dir / "bad.geoa").string(), "--out-dir", dir.string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("BadMagic") != std::string::npos);

  const RunResult missing = run({"analyze", "--input", (dir / "nope.geoa").string(), "--out-dir", dir.string()});
  CHECK(missing.code == 1);
}

TEST_CASE("moe-demo output") {
  const fs::path dir = fresh_dir("moe");
  const RunResult r = run({"moe-demo", "--samples", "200", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  for (const char* kind : {"kind=linear", "kind=sba", "kind=norm-free", "kind=unit"}) {
    CHECK(r.out.find(kind) != std::string::npos);
  }
  const nlohmann::json j = load_json(dir / "moe_demo.json");
  CHECK(j["sba_radius_law_max_residual"].get<double>() <= 1e-9);
  CHECK(j["aggregators"]["linear"]["mean_norm"].get<double>() <=
        j["aggregators"]["sba"]["mean_norm"].get<double>());
  CHECK(std::abs(j["aggregators"]["unit"]["mean_norm"].get<double>() - 1.0) <= 1e-12);
  CHECK(j["aggregators"]["sba"]["errors"] == 0);
  CHECK(run({"moe-demo", "--samples", "200"}).out == r.out);

  // With one expert per token every aggregator except unit returns the expert itself.
  const fs::path one = fresh_dir("moe_top1");
  REQUIRE(run({"moe-demo", "--samples", "100", "--topk", "1", "--out-dir", one.string()}).code == 0);
  const nlohmann::json k1 = load_json(one / "moe_demo.json");
  for (const char* field : {"mean_norm", "min_norm", "max_norm", "stddev_norm"}) {
    CHECK(k1["aggregators"]["linear"][field] == k1["aggregators"]["sba"][field]);
    CHECK(k1["aggregators"]["linear"][field] == k1["aggregators"]["norm-free"][field]);
  }
}

TEST_CASE("bench output") {
  const RunResult r = run({"bench", "--dim", "64", "--samples", "200", "--repeats", "1", "--json"});
  REQUIRE(r.code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["ratio"].get<double>() > 0.0);
  CHECK(j["linear_ns_per_op"].get<double>() > 0.0);
  const nlohmann::json again =
      nlohmann::json::parse(run({"bench", "--dim", "64", "--samples", "200", "--repeats", "2", "--json"}).out);
  CHECK(j["checksum_linear"] == again["checksum_linear"]);
  CHECK(j["checksum_sba"] == again["checksum_sba"]);

  const RunResult text = run({"bench", "--dim", "16", "--samples", "50"});
  CHECK(text.code == 0);
  CHECK(text.out.find("ratio=") != std::string::npos);
}

TEST_CASE("thread count does not change any output") {
  std::map<std::string, std::string> outputs;
  for (const char* threads : {"1", "8"}) {
    ScopedEnv env("GEOAGG_THREADS", threads);
    const fs::path dir = fresh_dir(std::string("threads_") + threads);
    const RunResult sim = run({"simulate", "--dim", "16", "--samples", "9000", "--weights", "dirichlet",
                               "--experts", "3", "--out-dir", (dir / "sim").string()});
    REQUIRE(sim.code == 0);
    const RunResult moe = run({"moe-demo", "--samples", "300", "--out-dir", (dir / "moe").string()});
    REQUIRE(moe.code == 0);
    std::string all = sim.out + moe.out + slurp(dir / "moe" / "moe_demo.json");
    for (const char* f : {"norm_ratio.csv", "angles.csv", "collapse_sba.csv", "collapse_unit.csv", "summary.csv",
                          "summary.json"}) {
      all += slurp(dir / "sim" / f);
    }
    outputs[threads] = all;
  }
  CHECK(outputs["1"] == outputs["8"]);

  ScopedEnv bad("GEOAGG_THREADS", "zero");
  CHECK(run({"moe-demo", "--samples", "10"}).code != 0);
}
