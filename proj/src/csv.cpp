#include "dgame/csv.hpp"

#include <cstdio>

#include "dgame/errors.hpp"

namespace dgame {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_csv(const std::string& path, const std::vector<std::string>& metadata) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (const auto& line : metadata) out << "# " << line << '\n';
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace dgame
