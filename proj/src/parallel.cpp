#include "geoagg/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string>
#include <string_view>

#include "geoagg/errors.hpp"

namespace geoagg {

std::size_t default_thread_count() {
  if (const char* env = std::getenv("GEOAGG_THREADS"); env != nullptr) {
    const std::string_view text(env);
    std::size_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || value == 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "GEOAGG_THREADS must be a positive integer, got '" + std::string(text) + "'");
    }
    return value;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace geoagg
