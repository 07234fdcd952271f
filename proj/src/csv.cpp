#include "khoplab/csv.hpp"

#include <cstdio>
#include <fstream>

#include "khoplab/error.hpp"
#include "khoplab/version.hpp"

namespace khoplab {

std::string format_double(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", x);
  return buffer;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

std::string hex16(std::uint64_t value) {
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

}  // namespace

CsvFile::CsvFile(std::string command, std::uint64_t config_hash, std::uint64_t seed) {
  body_ += "# khoplab " + std::string(kVersion) + "\n";
  body_ += "# command=" + command + "\n";
  body_ += "# config_hash=" + hex16(config_hash) + "\n";
  body_ += "# seed=" + std::to_string(seed) + "\n";
}

void CsvFile::echo(const std::string& key, const std::string& value) {
  body_ += "# " + key + "=" + value + "\n";
}

void CsvFile::columns(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) body_ += ",";
    body_ += names[i];
  }
  body_ += "\n";
}

void CsvFile::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) body_ += ",";
    body_ += cells[i];
  }
  body_ += "\n";
}

void CsvFile::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "cannot open output file " + path);
  out << body_;
  if (!out) throw Error("cli", "failed writing " + path);
}

}  // namespace khoplab
