#include <fstream>
#include <stdexcept>

#include "geoagg/cli.hpp"

namespace geoagg::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << content;
  os.flush();
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_report_files(const GeometryReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& doc : report_to_csv(report)) write_text(dir / doc.name, doc.content);
  write_text(dir / "summary.json", report_to_json(report));
}

}  // namespace geoagg::cli
