#ifndef DGAME_CSV_HPP
#define DGAME_CSV_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace dgame {

/// 17 significant digits, so values round-trip through text exactly.
std::string format_double(double x);

/// Opens `path` for writing and emits each metadata line as "# <line>".
/// Throws ConfigError if the file cannot be created.
std::ofstream open_csv(const std::string& path, const std::vector<std::string>& metadata);

/// Stable 64-bit FNV-1a, used for config hashes embedded in outputs.
std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t v);

}  // namespace dgame

#endif
