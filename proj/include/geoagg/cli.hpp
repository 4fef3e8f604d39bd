#pragma once

#include <filesystem>
#include <iosfwd>

#include "geoagg/geometry.hpp"

namespace geoagg::cli {

/// Entry point for `geoagg <simulate|analyze|moe-demo|bench> [flags]`.
/// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes report_to_csv() documents and summary.json into `dir` (created if missing).
void write_report_files(const GeometryReport& report, const std::filesystem::path& dir);

}  // namespace geoagg::cli
