#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace khoplab {

/// Fixed 12-significant-digit float rendering so regression fixtures are
/// byte-stable.
std::string format_double(double x);

std::uint64_t fnv1a64(const std::string& text);

/// CSV with `#`-prefixed provenance lines (tool version, config hash, seed,
/// echoed parameters) above the column header.
class CsvFile {
 public:
  CsvFile(std::string command, std::uint64_t config_hash, std::uint64_t seed);

  void echo(const std::string& key, const std::string& value);
  void columns(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& cells);

  const std::string& text() const { return body_; }
  void write(const std::string& path) const;

 private:
  std::string body_;
};

}  // namespace khoplab
